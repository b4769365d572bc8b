from SkillRL.env.sim2d import RigidBody, RevoluteJoint, Scene, SimState, World
from SkillRL.env.character import (
    Character,
    CharacterModel,
    JOINT_NAMES,
    NUM_ACTUATED,
    OBS_DIM,
    PART_NAMES,
    PART_SLICES,
    part_slices,
    mirror_legs,
    pd_torques,
)
from SkillRL.env.skill_env import SkillEnv, far_scene
