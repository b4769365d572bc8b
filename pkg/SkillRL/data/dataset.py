from typing import Iterable, List, Optional, Sequence, Tuple

import os
import glob
import hashlib

import numpy as np

from SkillRL.data.clip import MotionClip, PoseFrame, load_clip, save_clip
from SkillRL.misc.errors import InsufficientDataError


class Dataset:
    """
    A weighted collection of motion clips. Clip weights are kept as given; `weights` returns
    them normalized to sum to one.
    """
    def __init__(self, clips: Iterable[MotionClip]):
        self.clips: List[MotionClip] = list(clips)

    def __len__(self) -> int:
        return len(self.clips)

    def __iter__(self):
        return iter(self.clips)

    def __getitem__(self, idx: int) -> MotionClip:
        return self.clips[idx]

    @property
    def raw_weights(self) -> np.ndarray:
        return np.array([clip.weight for clip in self.clips], dtype=np.float64)

    @property
    def total_weight(self) -> float:
        return float(self.raw_weights.sum())

    @property
    def weights(self) -> np.ndarray:
        w = self.raw_weights
        return w / w.sum()

    def normalized(self) -> "Dataset":
        """A copy whose clip weights sum to one. """
        return Dataset(clip.with_weight(float(w)) for clip, w in zip(self.clips, self.weights))

    def by_source(self, source: str) -> "Dataset":
        return Dataset(clip for clip in self.clips if clip.source == source)

    def extend(self, clips: Iterable[MotionClip]) -> "Dataset":
        return Dataset(list(self.clips) + list(clips))

    def sample_index(self, rng: np.random.Generator) -> Tuple[int, int]:
        """Draw a clip proportionally to its weight and a uniform frame index with a successor. """
        if not self.clips:
            raise InsufficientDataError("cannot sample from an empty dataset")
        c = int(rng.choice(len(self.clips), p=self.weights))
        f = int(rng.integers(0, len(self.clips[c]) - 1))
        return c, f

    def sample_indices(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """Batched `sample_index`. """
        if not self.clips:
            raise InsufficientDataError("cannot sample from an empty dataset")
        c = rng.choice(len(self.clips), size=n, p=self.weights)
        lengths = np.array([len(clip) for clip in self.clips])
        f = np.floor(rng.random(n) * (lengths[c] - 1)).astype(np.int64)
        return c, f

    def hash(self) -> str:
        digest = hashlib.sha1()
        for clip in self.clips:
            digest.update(clip.name.encode())
            digest.update(clip.source.encode())
            digest.update(np.float64(clip.weight).tobytes())
            digest.update(np.float64(clip.fps).tobytes())
            digest.update(np.ascontiguousarray(clip.rows()).tobytes())
        return digest.hexdigest()[:12]


def sample_transition(dataset: Dataset, rng: np.random.Generator) -> Tuple[PoseFrame, PoseFrame]:
    """Two consecutive frames of a clip chosen proportionally to its weight. """
    c, f = dataset.sample_index(rng)
    clip = dataset.clips[c]
    return clip.frame(f), clip.frame(f + 1)


def save_dataset(dataset: Dataset, data_dir: str) -> List[str]:
    """Write every clip as `<data_dir>/<index>_<name>.yaml`. """
    os.makedirs(data_dir, exist_ok=True)
    paths = []
    for idx, clip in enumerate(dataset.clips):
        paths.append(save_clip(clip, os.path.join(data_dir, f"{idx:04d}_{clip.name}.yaml")))
    return paths


def load_dataset(data_dir: str, sources: Optional[Sequence[str]]=None) -> Dataset:
    paths = sorted(glob.glob(os.path.join(data_dir, "*.yaml")))
    if not paths:
        raise InsufficientDataError(f"no clip files under {data_dir}")
    clips = [load_clip(path) for path in paths]
    if sources is not None:
        clips = [clip for clip in clips if clip.source in sources]
    return Dataset(clips)
