"""
Procedural motion sources: the reference walking gait, the analytic-IK grasp pose and the
interpolated clips that bridge a rest pose to a grasp pose.
"""

from typing import Any, Optional, Sequence, Tuple, Union

from dataclasses import dataclass

import numpy as np

from SkillRL.data.clip import MotionClip, PoseFrame
from SkillRL.data.dataset import Dataset
from SkillRL.env.character import Character, FOOT_POINTS
from SkillRL.env.sim2d import Scene
from SkillRL.exp.config import get_profile
from SkillRL.math import shortest_arc_lerp
from SkillRL.misc.errors import ParameterError, UnreachableError

STRIDE_RANGE = (0.4, 1.1)
CADENCE_RANGE = (0.6, 2.0)
APPROACH_SIDES = ("left", "right")

_default_character: Optional[Character] = None


def default_character() -> Character:
    global _default_character
    if _default_character is None:
        _default_character = Character.from_config(get_profile("desk")["character"])
    return _default_character


def two_link_ik(vx: float, vy: float, L1: float, L2: float, bend: float) -> Tuple[float, float]:
    """
    Absolute angle of the first link and the relative angle of the second so that the chain
    end lands at `(vx, vy)` from the base. `bend` is +1 or -1 and selects the sign of the
    relative angle. Raises UnreachableError outside the annulus the chain can reach.
    """
    d2 = vx*vx + vy*vy
    d = np.sqrt(d2)
    if d > L1 + L2 + 1e-12 or d < abs(L1 - L2) - 1e-12:
        raise UnreachableError(f"target at distance {d:.4f} outside reach [{abs(L1 - L2):.4f}, {L1 + L2:.4f}]")
    cos_rel = np.clip((d2 - L1*L1 - L2*L2) / (2*L1*L2), -1.0, 1.0)
    rel = bend * np.arccos(cos_rel)
    chord = np.arctan2(vx, -vy)
    first = chord - np.arctan2(L2*np.sin(rel), L1 + L2*np.cos(rel))
    return float(first), float(rel)


def _check_range(name: str, value: float, bounds: Tuple[float, float]):
    if not bounds[0] <= value <= bounds[1]:
        raise ParameterError(name, value, *bounds)


def synth_gait(
    stride: float,
    cadence: float,
    duration: float,
    fps: float=30,
    character: Optional[Character]=None,
    hip_height: float=0.72,
    clearance: float=0.08,
    stance_fraction: float=0.6,
    phase: float=0.0,
    weight: float=1.0,
    name: str="walk",
) -> MotionClip:
    """
    A planar walking clip. Each foot follows a phase-driven path relative to the hip: flat on
    the ground and moving backward at the walking speed during stance, lifted along a half sine
    during swing. The rear leg runs half a period behind the front leg, legs are solved with
    two-link IK with the foot kept level, and the arm swings against the front leg.

    Parameters
    ----------
    stride :  Distance travelled per gait cycle in meters, within [0.4, 1.1].
    cadence :  Gait cycles per second, within [0.6, 2.0].
    duration :  Clip length in seconds; ``round(duration * fps)`` frames are produced.
    """
    _check_range("stride", stride, STRIDE_RANGE)
    _check_range("cadence", cadence, CADENCE_RANGE)
    num_frames = int(round(duration * fps))
    if num_frames < 2:
        raise ParameterError("duration", duration, 2.0 / fps, np.inf)
    if not 0 < stance_fraction < 1:
        raise ParameterError("stance_fraction", stance_fraction, 0, 1)
    character = character or default_character()
    model = character.model
    L1, L2 = model.thigh_length, model.shin_length
    ankle_height = model.foot_height
    sigma = stance_fraction

    times = np.arange(num_frames) / fps
    speed = stride * cadence
    root_pos = np.stack([speed * times, np.full(num_frames, hip_height)], axis=1)
    root_angle = np.zeros(num_frames)
    joints = np.zeros([num_frames, 9])
    joints[:, 6:] = model.rest_pose[6:]

    def leg(phi: float) -> Tuple[float, float, float]:
        if phi < sigma:
            rel_x = stride * (sigma / 2 - phi)
            lift = 0.0
        else:
            u = (phi - sigma) / (1 - sigma)
            rel_x = -stride * sigma / 2 + stride * (1 - np.cos(np.pi * u)) / 2 - (1 - sigma) * stride * u
            lift = clearance * np.sin(np.pi * u)
        rel_y = -(hip_height - ankle_height) + lift
        thigh, knee = two_link_ik(rel_x, rel_y, L1, L2, bend=-1.0)
        return thigh, knee, -(thigh + knee)

    for k, t in enumerate(times):
        front = (cadence * t + phase) % 1.0
        rear = (cadence * t + phase + 0.5) % 1.0
        joints[k, 0:3] = leg(front)
        joints[k, 3:6] = leg(rear)
    joints[:, 6] = -0.6 * joints[:, 0]
    return MotionClip(
        times=times, root_pos=root_pos, root_angle=root_angle, joint_angles=joints, fps=fps,
        weight=weight, source="mocap-analog", name=name,
        meta={"stride": float(stride), "cadence": float(cadence)},
    )


@dataclass(frozen=True)
class GraspPose:
    """
    A whole-body grasp pose. `root_pos` and `target` are world positions; joint angles are in
    the canonical frame of a character facing `facing`.
    """
    root_pos: np.ndarray
    root_angle: float
    joint_angles: np.ndarray
    aperture: float
    target: np.ndarray
    facing: int
    scene: Scene

    def coords(self) -> np.ndarray:
        return np.concatenate([self.root_pos, [self.root_angle], self.joint_angles])

    def frame(self, time: float=0.0) -> PoseFrame:
        """The pose in the canonical frame (x mirrored for a character facing -x). """
        return PoseFrame(
            root_pos=np.array([self.facing * self.root_pos[0], self.root_pos[1]]),
            root_angle=self.root_angle, joint_angles=self.joint_angles.copy(), time=time,
        )

    def rest_frame(self, character: Character) -> PoseFrame:
        """Standing rest pose at the same stance position. """
        return PoseFrame(
            root_pos=np.array([self.facing * self.root_pos[0], character.hip_height]),
            root_angle=0.0, joint_angles=character.model.rest_pose.copy(), time=0.0,
        )

    def tip_error(self, character: Character) -> float:
        """Distance from the gripper tip to the target, recomputed by forward kinematics. """
        art = character.articulation
        P = art.point_positions(self.coords(), self.facing)
        tip = 0.5 * (P[art.point_index["finger_a"]] + P[art.point_index["finger_b"]])
        return float(np.linalg.norm(tip - self.target))

    def foot_heights(self, character: Character) -> np.ndarray:
        art = character.articulation
        P = art.point_positions(self.coords(), self.facing)
        return np.array([P[art.point_index[name], 1] for name in FOOT_POINTS])


def _smoothstep(x: float) -> float:
    return x * x * (3 - 2 * x)


def generate_grasp_pose(
    scene: Scene,
    approach_side: str,
    rng: np.random.Generator,
    character: Optional[Character]=None,
    grasp: Optional[Any]=None,
) -> GraspPose:
    """
    An analytic grasp pose for the object centered on the scene's table.

    Squat depth and torso lean follow one smooth schedule in the table height: no lean and
    straight legs once the table reaches shoulder height, up to `knee_max` knee bend and
    `lean_max` lean once the table is as low as `full_squat_height`. Both feet stay flat under
    the hip; the stance keeps `stance_margin` (+ a uniform jitter) between the table edge and
    the root. The arm is
    then solved with exact two-link IK (forearm extended by the fingers closed to the object
    width), placing the gripper tip on the object center.

    Parameters
    ----------
    approach_side :  `left` approaches from -x and faces +x, `right` the opposite.
    grasp :  The `grasp` config section; the desk profile when omitted.
    """
    if approach_side not in APPROACH_SIDES:
        raise ValueError(f"approach_side must be one of {APPROACH_SIDES}, got {approach_side!r}")
    character = character or default_character()
    grasp = grasp or get_profile("desk")["grasp"]
    model = character.model
    h = scene.table_height
    if not grasp["min_table_height"] <= h <= grasp["max_table_height"]:
        raise UnreachableError(
            f"table height {h:.3f} outside grasp envelope [{grasp['min_table_height']}, {grasp['max_table_height']}]"
        )
    facing = 1 if approach_side == "left" else -1
    shoulder_height = model.hip_height + model.shoulder_offset

    depth = np.clip((shoulder_height - h) / (shoulder_height - grasp["full_squat_height"]), 0.0, 1.0)
    s = _smoothstep(float(depth))
    thigh = s * (grasp["knee_max"] / 2)
    knee = -grasp["knee_max"] * s
    theta = -grasp["lean_max"] * s
    ankle = -(thigh + knee)
    hip = thigh - theta
    hip_y = model.foot_height + model.thigh_length * np.cos(thigh) + model.shin_length * np.cos(thigh + knee)

    offset = scene.table_width / 2 + grasp["stance_margin"] + float(rng.uniform(0.0, grasp["stance_jitter"]))
    root_x = scene.table_x - facing * offset
    target = np.array([scene.table_x, h + scene.object_size / 2])

    psi = float(np.arcsin(min(scene.object_size / (2 * model.finger_length), 1.0)))
    psi = float(np.clip(psi, model.lower[8], model.upper[8]))
    L1 = model.upper_arm_length
    L2 = model.forearm_length + model.finger_length * np.cos(psi)
    shoulder = np.array([-model.shoulder_offset * np.sin(theta), hip_y + model.shoulder_offset * np.cos(theta)])
    # canonical offset of the target from the shoulder
    vx = facing * (target[0] - root_x) - shoulder[0]
    vy = target[1] - shoulder[1]
    upper, elbow = two_link_ik(vx, vy, L1, L2, bend=1.0)
    shoulder_joint = upper - theta
    for name, idx, value in (("shoulder", 6, shoulder_joint), ("elbow", 7, elbow)):
        if not model.lower[idx] <= value <= model.upper[idx]:
            raise UnreachableError(f"{name} angle {value:.3f} outside joint limits for table height {h:.3f}")

    joints = np.array([hip, knee, ankle, hip, knee, ankle, shoulder_joint, elbow, psi])
    return GraspPose(
        root_pos=np.array([root_x, hip_y]), root_angle=float(theta), joint_angles=joints,
        aperture=character.aperture(np.concatenate([[0.0, 0.0, 0.0], joints])),
        target=target, facing=facing, scene=scene,
    )


def _as_frame(pose: Union[PoseFrame, GraspPose]) -> PoseFrame:
    return pose.frame() if isinstance(pose, GraspPose) else pose


def slerp_interpolate(
    init: Union[PoseFrame, GraspPose],
    target: Union[PoseFrame, GraspPose],
    T: int=60,
    fps: float=30,
    character: Optional[Character]=None,
    clamp_feet: bool=True,
    weight: float=1.0,
    name: str="interp",
) -> MotionClip:
    """
    Interpolate from `init` to `target` in `T` steps (T + 1 frames). The root position is
    interpolated linearly and every angle along the shortest arc of the circle, which is
    spherical interpolation restricted to planar rotations. With `clamp_feet` the root height of
    each frame is shifted so that the lowest foot point touches the ground.
    """
    if T < 2:
        raise ParameterError("T", T, 2, np.inf)
    a, b = _as_frame(init), _as_frame(target)
    alpha = np.arange(T + 1)[:, None] / T
    root_pos = a.root_pos[None, :] + alpha * (b.root_pos - a.root_pos)[None, :]
    root_angle = shortest_arc_lerp(a.root_angle, b.root_angle, alpha[:, 0])
    joints = shortest_arc_lerp(a.joint_angles[None, :], b.joint_angles[None, :], alpha)
    # exact endpoints
    root_pos[-1], root_angle[-1], joints[-1] = b.root_pos, b.root_angle, b.joint_angles

    if clamp_feet:
        character = character or default_character()
        art = character.articulation
        feet = [art.point_index[p] for p in FOOT_POINTS]
        for k in range(T + 1):
            q = np.concatenate([root_pos[k], [root_angle[k]], joints[k]])
            lowest = art.point_positions(q, 1)[feet, 1].min()
            if abs(lowest) > 1e-9:
                root_pos[k, 1] -= lowest
    return MotionClip(
        times=np.arange(T + 1) / fps, root_pos=root_pos, root_angle=root_angle, joint_angles=joints,
        fps=fps, weight=weight, source="interpolated", name=name,
    )


def generate_reach_clip(
    scene: Scene,
    approach_side: str,
    rng: np.random.Generator,
    character: Optional[Character]=None,
    grasp: Optional[Any]=None,
    T: int=60,
    fps: float=30,
    weight: float=1.0,
    name: str="reach",
) -> MotionClip:
    """Grasp pose for `scene` bridged from the rest pose at the same stance by interpolation. """
    character = character or default_character()
    pose = generate_grasp_pose(scene, approach_side, rng, character, grasp)
    clip = slerp_interpolate(pose.rest_frame(character), pose, T=T, fps=fps, character=character, weight=weight, name=name)
    clip.meta.update({"table_height": float(scene.table_height), "table_width": float(scene.table_width)})
    return clip


def reference_walk_dataset(
    config: Any,
    rng: Optional[np.random.Generator]=None,
    heldout: bool=False,
    character: Optional[Character]=None,
) -> Dataset:
    """
    The brief walking reference: one `synth_gait` clip per configured variant, weighted as
    configured. With `heldout`, stride and cadence are jittered by up to `heldout_jitter`
    (relative) and the start phase is randomized, giving a disjoint set from the same family.
    """
    data = config["data"]
    gait = data["gait"]
    if heldout and rng is None:
        raise ValueError("a held-out set needs an rng")
    clips = []
    for variant in data["walk_variants"]:
        stride, cadence, phase = variant["stride"], variant["cadence"], 0.0
        name = variant["name"]
        if heldout:
            jitter = data["heldout_jitter"]
            stride = float(np.clip(stride * (1 + rng.uniform(-jitter, jitter)), *STRIDE_RANGE))
            cadence = float(np.clip(cadence * (1 + rng.uniform(-jitter, jitter)), *CADENCE_RANGE))
            phase = float(rng.random())
            name = "heldout_" + name
        clips.append(synth_gait(
            stride, cadence, variant["duration"], fps=data["fps"], character=character,
            hip_height=gait["hip_height"], clearance=gait["clearance"], stance_fraction=gait["stance_fraction"],
            phase=phase, weight=variant["weight"], name=name,
        ))
    return Dataset(clips)
