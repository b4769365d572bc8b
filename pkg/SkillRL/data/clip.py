"""
Motion clips and their on-disk format.

A clip file is one YAML document::

    version: 1
    name: walk_normal
    fps: 30
    weight: 0.3
    source: mocap-analog
    frames:
    - [time, root_x, root_y, root_angle, j0, ..., j8]
    - ...

Floats are written with their shortest round-trip representation, so saving and loading a clip
reproduces it bit-exactly.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from SkillRL.misc.errors import ClipFormatError

CLIP_FORMAT_VERSION = 1
NUM_JOINTS = 9
ROW_WIDTH = 4 + NUM_JOINTS
SOURCES = ("mocap-analog", "interpolated")


@dataclass(frozen=True)
class PoseFrame:
    root_pos: np.ndarray
    root_angle: float
    joint_angles: np.ndarray
    time: float = 0.0

    def coords(self) -> np.ndarray:
        """Generalized coordinates ``[x, y, theta, joints...]``. """
        return np.concatenate([self.root_pos, [self.root_angle], self.joint_angles])


@dataclass
class MotionClip:
    """
    A timestamped sequence of poses with a sampling weight.

    Parameters
    ----------
    times :  (T, ) frame times in seconds.
    root_pos :  (T, 2) root position in meters.
    root_angle :  (T, ) root angle in radians.
    joint_angles :  (T, 9) joint angles in radians.
    fps :  Sampling rate in Hz.
    weight :  Unnormalized sampling weight, must be positive.
    source :  One of `mocap-analog` or `interpolated`.
    name :  Identifier of the clip, used as its file name.
    """
    times: np.ndarray
    root_pos: np.ndarray
    root_angle: np.ndarray
    joint_angles: np.ndarray
    fps: float
    weight: float = 1.0
    source: str = "mocap-analog"
    name: str = "clip"
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.root_pos = np.asarray(self.root_pos, dtype=np.float64)
        self.root_angle = np.asarray(self.root_angle, dtype=np.float64)
        self.joint_angles = np.asarray(self.joint_angles, dtype=np.float64)
        self.validate()

    def validate(self, path: str="<memory>"):
        T = len(self.times)
        if T < 2:
            raise ClipFormatError(path, "frames", f"a clip needs at least 2 frames, got {T}")
        if self.root_pos.shape != (T, 2) or self.root_angle.shape != (T, ) or self.joint_angles.shape != (T, NUM_JOINTS):
            raise ClipFormatError(path, "frames", "inconsistent frame array shapes")
        if not self.weight > 0:
            raise ClipFormatError(path, "weight", f"weight must be positive, got {self.weight}")
        if not self.fps > 0:
            raise ClipFormatError(path, "fps", f"fps must be positive, got {self.fps}")
        if self.source not in SOURCES:
            raise ClipFormatError(path, "source", f"unknown source tag {self.source!r}")
        for name in ("times", "root_pos", "root_angle", "joint_angles"):
            values = getattr(self, name)
            if not np.all(np.isfinite(values)):
                row = int(np.argwhere(~np.isfinite(values.reshape(T, -1)))[0, 0])
                raise ClipFormatError(path, f"frames[{row}]", f"non-finite value in {name}")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def num_frames(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def frame(self, idx: int) -> PoseFrame:
        return PoseFrame(
            root_pos=self.root_pos[idx].copy(), root_angle=float(self.root_angle[idx]),
            joint_angles=self.joint_angles[idx].copy(), time=float(self.times[idx]),
        )

    def frames(self) -> List[PoseFrame]:
        return [self.frame(i) for i in range(len(self))]

    def coords(self) -> np.ndarray:
        """(T, 12) generalized coordinates of every frame. """
        return np.concatenate([self.root_pos, self.root_angle[:, None], self.joint_angles], axis=1)

    def rows(self) -> np.ndarray:
        return np.concatenate([self.times[:, None], self.coords()], axis=1)

    @classmethod
    def from_frames(cls, frames: Sequence[PoseFrame], fps: float, **kwargs) -> "MotionClip":
        return cls(
            times=np.array([f.time for f in frames]),
            root_pos=np.stack([f.root_pos for f in frames]),
            root_angle=np.array([f.root_angle for f in frames]),
            joint_angles=np.stack([f.joint_angles for f in frames]),
            fps=fps, **kwargs,
        )

    @classmethod
    def from_rows(cls, rows: np.ndarray, fps: float, **kwargs) -> "MotionClip":
        rows = np.asarray(rows, dtype=np.float64)
        return cls(times=rows[:, 0], root_pos=rows[:, 1:3], root_angle=rows[:, 3], joint_angles=rows[:, 4:], fps=fps, **kwargs)

    def with_weight(self, weight: float) -> "MotionClip":
        return MotionClip(
            self.times, self.root_pos, self.root_angle, self.joint_angles, self.fps,
            weight=weight, source=self.source, name=self.name, meta=dict(self.meta),
        )

    def equals(self, other: "MotionClip") -> bool:
        return (
            np.array_equal(self.rows(), other.rows()) and self.fps == other.fps and self.weight == other.weight
            and self.source == other.source and self.name == other.name
        )


def clip_to_dict(clip: MotionClip) -> Dict[str, Any]:
    doc = {
        "version": CLIP_FORMAT_VERSION,
        "name": clip.name,
        "fps": float(clip.fps),
        "weight": float(clip.weight),
        "source": clip.source,
    }
    if clip.meta:
        doc["meta"] = clip.meta
    doc["frames"] = clip.rows().tolist()
    return doc


class _FlowRowDumper(yaml.SafeDumper):
    pass


def _represent_list(dumper, data):
    flow = all(isinstance(v, float) for v in data)
    return dumper.represent_sequence("tag:yaml.org,2002:seq", data, flow_style=flow)


_FlowRowDumper.add_representer(list, _represent_list)


def save_clip(clip: MotionClip, path: str) -> str:
    """Write `clip` to `path` as a YAML document, creating parent directories. """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fp:
        yaml.dump(clip_to_dict(clip), fp, Dumper=_FlowRowDumper, sort_keys=False, width=1 << 16)
    return path


def _mark(node: Optional[yaml.Node]) -> str:
    if node is None:
        return "1:1"
    return f"{node.start_mark.line + 1}:{node.start_mark.column + 1}"


def _field_node(root: yaml.Node, key: str) -> Optional[yaml.Node]:
    if not isinstance(root, yaml.MappingNode):
        return None
    for key_node, value_node in root.value:
        if key_node.value == key:
            return value_node
    return None


def load_clip(path: str) -> MotionClip:
    """
    Read a clip file. Any problem is reported as ClipFormatError carrying the ``line:column``
    of the offending node, or the field path when the value itself is invalid.
    """
    try:
        with open(path, "r") as fp:
            text = fp.read()
    except OSError as e:
        raise ClipFormatError(path, "1:1", f"cannot read file: {e.strerror}")
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        position = f"{mark.line + 1}:{mark.column + 1}" if mark is not None else "1:1"
        raise ClipFormatError(path, position, f"malformed YAML: {e.problem}")
    if not isinstance(doc, dict):
        raise ClipFormatError(path, _mark(root), "a clip file must hold a mapping")

    for key in ("version", "fps", "weight", "source", "frames"):
        if key not in doc:
            raise ClipFormatError(path, _mark(root), f"missing field {key!r}")
    if doc["version"] != CLIP_FORMAT_VERSION:
        raise ClipFormatError(path, _mark(_field_node(root, "version")), f"unsupported version {doc['version']!r}")
    for key in ("fps", "weight"):
        if isinstance(doc[key], bool) or not isinstance(doc[key], (int, float)):
            raise ClipFormatError(path, _mark(_field_node(root, key)), f"{key} must be a number")
    if not doc["weight"] > 0:
        raise ClipFormatError(path, _mark(_field_node(root, "weight")), f"weight must be positive, got {doc['weight']}")

    frames = doc["frames"]
    frames_node = _field_node(root, "frames")
    if not isinstance(frames, list):
        raise ClipFormatError(path, _mark(frames_node), "frames must be a list of rows")
    if len(frames) < 2:
        raise ClipFormatError(path, _mark(frames_node), f"a clip needs at least 2 frames, got {len(frames)}")
    for i, row in enumerate(frames):
        row_node = frames_node.value[i] if isinstance(frames_node, yaml.SequenceNode) else None
        if not isinstance(row, list) or len(row) != ROW_WIDTH:
            raise ClipFormatError(path, _mark(row_node), f"frames[{i}] must hold {ROW_WIDTH} numbers")
        for j, value in enumerate(row):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                cell = row_node.value[j] if isinstance(row_node, yaml.SequenceNode) else row_node
                raise ClipFormatError(path, _mark(cell), f"frames[{i}][{j}] is not a number: {value!r}")

    try:
        return MotionClip.from_rows(
            np.array(frames, dtype=np.float64), fps=doc["fps"], weight=doc["weight"],
            source=doc["source"], name=str(doc.get("name", os.path.splitext(os.path.basename(path))[0])),
            meta=dict(doc.get("meta") or {}),
        )
    except ClipFormatError as e:
        raise ClipFormatError(path, e.position, str(e).split("]: ", 1)[-1])


def clip_roundtrip(clip: MotionClip, path: str) -> MotionClip:
    """Save `clip` to `path` and load it back. """
    save_clip(clip, path)
    return load_clip(path)
