from typing import Any, Tuple

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np


class Stage(IntEnum):
    LOCOMOTION = 0
    PREGRASP = 1
    GRASP = 2
    POSTGRASP = 3


NUM_STAGES = len(Stage)


@dataclass(frozen=True)
class TransitionParams:
    locomotion_radius: float = 1.0
    pregrasp_height: float = 0.1
    lift_height: float = 0.1
    stage_bonus: float = 1.0

    @classmethod
    def from_config(cls, task: Any) -> "TransitionParams":
        return cls(
            locomotion_radius=float(task["locomotion_radius"]),
            pregrasp_height=float(task["pregrasp_height"]),
            lift_height=float(task["lift_height"]),
            stage_bonus=float(task["stage_bonus"]),
        )


@dataclass(frozen=True)
class TaskObservables:
    """World-frame quantities the stage machine and the stage rewards read. """
    root_pos: np.ndarray
    root_vel: np.ndarray
    root_angle: float
    facing: int
    palm: np.ndarray
    finger_tips: np.ndarray
    object_pos: np.ndarray
    object_vel: np.ndarray
    object_init_height: float
    object_size: float
    table_width: float
    goal_x: float
    in_contact: bool

    @property
    def lift(self) -> float:
        return float(self.object_pos[1] - self.object_init_height)

    @property
    def object_speed(self) -> float:
        return float(np.linalg.norm(self.object_vel))

    @property
    def d_hand(self) -> float:
        return float(np.linalg.norm(self.palm - self.object_pos))

    @property
    def d_finger(self) -> float:
        return float(np.mean(np.linalg.norm(self.finger_tips - self.object_pos[None, :], axis=-1)))


@dataclass(frozen=True)
class StageState:
    """
    Progress of one episode through the four stages. `entered[k]` records that stage `k` was
    reached, so each transition and its bonus happen at most once.
    """
    stage: Stage
    entered: Tuple[bool, ...]
    object_init_height: float

    @classmethod
    def initial(cls, object_init_height: float) -> "StageState":
        return cls(Stage.LOCOMOTION, (True, ) + (False, ) * (NUM_STAGES - 1), float(object_init_height))


def palm_above_object(obs: TaskObservables, max_height: float) -> bool:
    """The palm lies within one object size horizontally and less than `max_height` above the object top. """
    top = obs.object_pos[1] + obs.object_size / 2
    dx = abs(obs.palm[0] - obs.object_pos[0])
    dy = obs.palm[1] - top
    return bool(dx < obs.object_size and 0.0 < dy < max_height)


def transition_ready(state: StageState, obs: TaskObservables, params: TransitionParams) -> bool:
    if state.stage == Stage.LOCOMOTION:
        return abs(obs.object_pos[0] - obs.root_pos[0]) < params.locomotion_radius
    if state.stage == Stage.PREGRASP:
        return palm_above_object(obs, params.pregrasp_height)
    if state.stage == Stage.GRASP:
        return obs.object_pos[1] - state.object_init_height > params.lift_height
    return False


def stage_transition(
    state: StageState,
    obs: TaskObservables,
    params: TransitionParams=TransitionParams(),
) -> Tuple[StageState, float]:
    """
    Advance at most one stage when the current stage's condition holds and return the new
    state with the bonus earned by this call (`stage_bonus` on a transition, else 0):

    - Locomotion to PreGrasp when the root is less than `locomotion_radius` from the object;
    - PreGrasp to Grasp when the palm is directly above the object, less than `pregrasp_height` over its top;
    - Grasp to PostGrasp when the object has risen more than `lift_height` above its initial height.
    """
    if not transition_ready(state, obs, params):
        return state, 0.0
    nxt = Stage(state.stage + 1)
    if state.entered[nxt]:
        return state, 0.0
    entered = tuple(True if k == nxt else flag for k, flag in enumerate(state.entered))
    return replace(state, stage=nxt, entered=entered), params.stage_bonus
