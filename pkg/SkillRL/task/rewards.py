"""
Stage rewards of the reach-and-grasp task and the weighted total reward.

Positions handed to `location_reward` are ground-plane vectors: in the planar world these are
1-vectors holding the horizontal coordinate, but any dimension works.
"""

from typing import Any, Optional, Sequence, Union

from dataclasses import dataclass

import numpy as np

from SkillRL.skill.reward import disc_reward
from SkillRL.task.stages import Stage, TaskObservables

VecLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class RewardParams:
    w_pos: float = 0.3
    w_vel: float = 0.6
    w_face: float = 0.1
    w_grasp: float = 1.0
    w_height: float = 2.0
    w_obj_vel: float = 1.0
    h_lift_target: float = 0.2
    v_threshold: float = 30.0
    reach_height: float = 0.2
    w_balance: float = 0.0
    v_target: float = 1.0
    boost_factor: float = 1.5
    boost_radius: float = 0.5
    stage_bonus: float = 1.0
    w_goal: float = 0.4
    w_p1: float = 0.2
    w_p2: float = 0.4

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value < 0:
                raise ValueError(f"reward parameter {name} must be non-negative, got {value}")

    @classmethod
    def from_config(cls, config: Any) -> "RewardParams":
        rewards, task = config["rewards"], config["task"]
        return cls(
            **{key: float(rewards[key]) for key in (
                "w_pos", "w_vel", "w_face", "w_grasp", "w_height", "w_obj_vel",
                "h_lift_target", "v_threshold", "reach_height", "w_balance",
            )},
            **{key: float(task[key]) for key in (
                "v_target", "boost_factor", "boost_radius", "stage_bonus", "w_p1", "w_p2",
            )},
            w_goal=float(task["w_goal"]),
        )


def _vec(x: VecLike) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=np.float64))


def location_reward(
    root_pos: VecLike,
    facing: VecLike,
    root_vel: VecLike,
    target_pos: VecLike,
    v_target: float,
    params: RewardParams=RewardParams(),
) -> float:
    """
    ``w_pos * exp(-0.5 |p_tar - p_root|^2) + w_vel * exp(-4 (v_tar - n . v)^2) + w_face * (1 + n . f)``
    where `n` is the unit direction to the target. The velocity term is zero while moving away
    from the target (``n . v <= 0``) and the whole reward is multiplied by `boost_factor` within
    `boost_radius` of the target. A target on top of the root takes `facing` as its direction.
    """
    p, f, v, t = _vec(root_pos), _vec(facing), _vec(root_vel), _vec(target_pos)
    diff = t - p
    dist = float(np.linalg.norm(diff))
    n = diff / dist if dist >= 1e-9 else f / max(float(np.linalg.norm(f)), 1e-12)
    pos_term = np.exp(-0.5 * dist**2)
    speed = float(n @ v)
    vel_term = np.exp(-4.0 * (v_target - speed)**2) if speed > 0 else 0.0
    face_term = 1.0 + float(n @ f)
    r = params.w_pos * pos_term + params.w_vel * vel_term + params.w_face * face_term
    if dist < params.boost_radius:
        r *= params.boost_factor
    return float(r)


def reach_target(object_pos: VecLike, table_width: float, facing: int, reach_height: float=0.2) -> np.ndarray:
    """`reach_height` above the object, a third of the table width toward the approaching character. """
    obj = _vec(object_pos)
    return obj + np.array([-facing * table_width / 3.0, reach_height])


def reach_reward(
    palm_pos: VecLike,
    object_pos: VecLike,
    table_width: float,
    facing: int,
    reach_height: float=0.2,
) -> float:
    """``exp(-|p_tar - p_palm|^2)`` """
    diff = reach_target(object_pos, table_width, facing, reach_height) - _vec(palm_pos)
    return float(np.exp(-(diff @ diff)))


def grasp_quality(d_finger: float, d_hand: float) -> float:
    return 2.0 - 0.5 * d_finger - 1.0 * d_hand


def grasp_reward(
    d_finger: float,
    d_hand: float,
    h_object: float,
    in_contact: bool,
    v_object: float,
    params: RewardParams=RewardParams(),
) -> float:
    """
    Grasp quality, lifted height (only while the hand touches the object) and an object speed
    penalty above `v_threshold`, weighted by `w_grasp`, `w_height` and `w_obj_vel`.
    """
    quality = grasp_quality(d_finger, d_hand)
    height = 0.1 + 0.5 * h_object / params.h_lift_target if in_contact else 0.0
    vel = -0.2 * float(np.clip(v_object - params.v_threshold, 0.0, 5.0))
    return float(params.w_grasp * quality + params.w_height * height + params.w_obj_vel * vel)


def goal_reward(
    location: float,
    d_finger: float=0.0,
    d_hand: float=0.0,
    quality: Optional[float]=None,
) -> float:
    """``3 * location + 3 * clamp(1.5 + quality, 0, 5)``; `quality` defaults to the one of the distances. """
    if quality is None:
        quality = grasp_quality(d_finger, d_hand)
    return float(3.0 * location + 3.0 * np.clip(1.5 + quality, 0.0, 5.0))


def balance_reward(root_angle: float) -> float:
    return float(np.exp(-root_angle**2 / 0.1))


def stage_reward(stage: Stage, obs: TaskObservables, params: RewardParams=RewardParams()) -> float:
    """The task reward r_G of the current stage, without the transition bonus. """
    if stage == Stage.LOCOMOTION:
        return location_reward(obs.root_pos[:1], [obs.facing], obs.root_vel[:1], obs.object_pos[:1], params.v_target, params)
    if stage == Stage.PREGRASP:
        return reach_reward(obs.palm, obs.object_pos, obs.table_width, obs.facing, params.reach_height)
    if stage == Stage.GRASP:
        return grasp_reward(obs.d_finger, obs.d_hand, obs.lift, obs.in_contact, obs.object_speed, params)
    location = location_reward(obs.root_pos[:1], [obs.facing], obs.root_vel[:1], [obs.goal_x], params.v_target, params)
    r = goal_reward(location, obs.d_finger, obs.d_hand)
    if params.w_balance > 0:
        r += params.w_balance * balance_reward(obs.root_angle)
    return r


def total_reward(
    r_goal: float,
    d_frozen: float,
    d_walk: Optional[float],
    stage: Stage,
    params: RewardParams=RewardParams(),
) -> float:
    """
    ``w_goal * r_G + w_p1 * (-log(1 - D)) + w_p2 * (-log(1 - D'))`` in the Locomotion stage.
    Elsewhere the co-trained walking prior is off and its weight moves to the task reward.
    """
    r_p1 = float(disc_reward(d_frozen))
    if stage == Stage.LOCOMOTION:
        if d_walk is None:
            raise ValueError("the Locomotion stage needs the walking discriminator output")
        return params.w_goal * r_goal + params.w_p1 * r_p1 + params.w_p2 * float(disc_reward(d_walk))
    return (params.w_goal + params.w_p2) * r_goal + params.w_p1 * r_p1
