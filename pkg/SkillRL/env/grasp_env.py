from typing import Any, Dict, Optional, Tuple

import numpy as np
from gymnasium.spaces import Box

from SkillRL.data.dataset import Dataset
from SkillRL.env.character import Character, FOOT_POINTS, OBS_DIM
from SkillRL.env.sim2d import Scene, World
from SkillRL.env.skill_env import SkillEnv
from SkillRL.task.rewards import RewardParams, stage_reward
from SkillRL.task.stages import NUM_STAGES, Stage, StageState, TaskObservables, TransitionParams, stage_transition

HAND_POINTS = ("palm", "finger_a", "finger_b")
# object offset (2), object velocity (2), palm offset (2), goal offset, table height, table width, stage one-hot
TASK_FEATURE_DIM = 2 + 2 + 2 + 1 + 1 + 1 + NUM_STAGES
TASK_OBS_DIM = OBS_DIM + TASK_FEATURE_DIM


class GraspEnv(SkillEnv):
    """
    Walk to a table, grasp the box on it, lift it and carry it to a goal.

    Every episode draws a scene from `scene_ranges` (the table height may be pinned through the
    reset option ``table_height``). The observation is the character observation followed by the
    task features in the character's canonical frame. The reward is the stage reward r_G plus
    the stage bonus; the info dict carries the character observation, the stage and the success
    observables.
    """
    def __init__(
        self,
        character: Character,
        world: World,
        scene_ranges: Any,
        reward_params: RewardParams=RewardParams(),
        transition_params: TransitionParams=TransitionParams(),
        goal_radius: float=0.5,
        **kwargs,
    ):
        super().__init__(character, world, **kwargs)
        self.scene_ranges = scene_ranges
        self.reward_params = reward_params
        self.transition_params = transition_params
        self.goal_radius = float(goal_radius)
        self.observation_space = Box(-np.inf, np.inf, (TASK_OBS_DIM, ), np.float64)
        self.stage_state: Optional[StageState] = None

    @classmethod
    def from_config(cls, config: Any, dataset: Optional[Dataset]=None, character: Optional[Character]=None, **kwargs) -> "GraspEnv":
        character = character or Character.from_config(config["character"])
        world = World.from_config(character.articulation, config["sim"])
        return cls(
            character, world, config["scene"],
            reward_params=RewardParams.from_config(config),
            transition_params=TransitionParams.from_config(config["task"]),
            goal_radius=config["analysis"]["goal_radius"],
            physics_hz=config["sim"]["physics_hz"], control_hz=config["sim"]["control_hz"],
            episode_length=config["task"]["episode_length"],
            fall_fraction=config["analysis"]["balance_fraction"], **kwargs,
        )

    def reset(self, *, seed: Optional[int]=None, options: Optional[Dict[str, Any]]=None) -> Tuple[np.ndarray, Dict]:
        options = dict(options or {})
        super(SkillEnv, self).reset(seed=seed)
        rng = self.np_random
        scene = options.get("scene") or Scene.sample(
            self.scene_ranges, rng, self.world.object_size, table_height=options.get("table_height"),
        )
        self.state = self.world.reset_scene(scene, int(rng.integers(0, 2**31)))
        self.t = 0
        self.stage_state = StageState.initial(self.state.obj_q[1])
        obs = self.observables()
        return self.observe(), {"char_obs": self.character.featurize(self.state), "stage": int(Stage.LOCOMOTION),
                                "lift": obs.lift, "scene": scene}

    def observables(self) -> TaskObservables:
        s = self.state
        hand_bodies = set(HAND_POINTS)
        in_contact = any(c.body_a in hand_bodies and c.body_b == self.world.OBJECT for c in s.contacts)
        return TaskObservables(
            root_pos=s.q[:2].copy(), root_vel=s.u[:2].copy(), root_angle=float(s.q[2]), facing=s.facing,
            palm=self.character.palm(s),
            finger_tips=np.stack([self.character.world_point(s, "finger_a"), self.character.world_point(s, "finger_b")]),
            object_pos=s.obj_q[:2].copy(), object_vel=s.obj_u[:2].copy(),
            object_init_height=self.stage_state.object_init_height, object_size=self.world.object_size,
            table_width=s.scene.table_width, goal_x=s.scene.goal_x, in_contact=bool(in_contact),
        )

    def task_features(self, obs: TaskObservables) -> np.ndarray:
        f = obs.facing
        stage = np.zeros(NUM_STAGES)
        stage[self.stage_state.stage] = 1.0
        return np.concatenate([
            [f * (obs.object_pos[0] - obs.root_pos[0]), obs.object_pos[1] - obs.root_pos[1]],
            [f * obs.object_vel[0], obs.object_vel[1]],
            [f * (obs.object_pos[0] - obs.palm[0]), obs.object_pos[1] - obs.palm[1]],
            [f * (obs.goal_x - obs.root_pos[0]), self.state.scene.table_height, obs.table_width],
            stage,
        ])

    def observe(self) -> np.ndarray:
        char_obs = self.character.featurize(self.state)
        if self.stage_state is None:
            return char_obs
        return np.concatenate([char_obs, self.task_features(self.observables())])

    def step(self, action: np.ndarray) -> Tuple[np.ndarray, float, bool, bool, Dict]:
        ok = self.simulate(action)
        self.t += 1
        obs = self.observables()
        self.stage_state, bonus = stage_transition(self.stage_state, obs, self.transition_params)
        reward = stage_reward(self.stage_state.stage, obs, self.reward_params) + bonus
        fallen = (not ok) or self.fallen()
        truncated = self.t >= self.episode_length
        info = {
            "char_obs": self.character.featurize(self.state),
            "stage": int(self.stage_state.stage),
            "bonus": bonus,
            "lift": obs.lift,
            "at_goal": bool(abs(obs.root_pos[0] - obs.goal_x) < self.goal_radius),
            "upright": bool(self.state.q[1] > self.fall_height),
            "fallen": fallen,
            "diverged": not ok,
            "feet": np.stack([self.character.world_point(self.state, name) for name in FOOT_POINTS]),
            "foot_contact": np.array([self.character.foot_contacts(self.state)[name] for name in FOOT_POINTS]),
        }
        return self.observe(), float(reward), fallen, truncated, info

    def snapshot(self) -> Dict[str, Any]:
        snap = super().snapshot()
        snap["stage"] = int(self.stage_state.stage)
        snap["entered"] = [bool(flag) for flag in self.stage_state.entered]
        snap["object_init_height"] = float(self.stage_state.object_init_height)
        return snap

    def restore(self, snap: Dict[str, Any]):
        super().restore(snap)
        self.stage_state = StageState(Stage(snap["stage"]), tuple(snap["entered"]), float(snap["object_init_height"]))
