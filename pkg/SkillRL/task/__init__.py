from .stages import Stage, NUM_STAGES, StageState, TaskObservables, TransitionParams, palm_above_object, stage_transition
from .rewards import (
    RewardParams,
    location_reward,
    reach_target,
    reach_reward,
    grasp_quality,
    grasp_reward,
    goal_reward,
    balance_reward,
    stage_reward,
    total_reward,
)
