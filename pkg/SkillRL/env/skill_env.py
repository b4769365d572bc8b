from typing import Any, Dict, Optional, Tuple

import gymnasium as gym
import numpy as np
from gymnasium.spaces import Box

from SkillRL.data.dataset import Dataset, sample_transition
from SkillRL.env.character import Character, GROUND_TOUCH_POINTS, NUM_ACTUATED, OBS_DIM
from SkillRL.env.sim2d import Scene, SimState, World
from SkillRL.logger import logger
from SkillRL.misc.errors import SimulationError


def far_scene(world: World, x: float=0.0, facing: int=1) -> Scene:
    """A scene whose table is out of reach, for free locomotion. """
    return Scene(
        table_height=0.5, table_width=0.6, table_x=x + facing * 100.0,
        object_size=world.object_size, start_x=x, goal_x=x,
    )


class SkillEnv(gym.Env):
    """
    Free locomotion of the planar character on flat ground.

    Actions are PD targets expressed as offsets from the rest pose; every action is held for
    ``physics_hz // control_hz`` simulator substeps. The episode terminates when the character
    falls (root below `fall_fraction` of the standing hip height, or the torso or head touching
    the ground) and is truncated after `episode_length` control steps. The reward is always 0:
    the skill rewards need the discriminator and are computed by the trainer.

    Parameters
    ----------
    character :  The character definition.
    world :  The simulator.
    physics_hz :  Simulation rate.
    control_hz :  Control rate.
    episode_length :  Number of control steps after which the episode is truncated.
    dataset :  Reference motion for reference-state initialization.
    ref_init_prob :  Probability of starting an episode from a reference pose instead of the rest stance.
    fall_fraction :  Fraction of the standing hip height below which the character counts as fallen.
    """
    metadata = {"render_modes": []}

    def __init__(
        self,
        character: Character,
        world: World,
        physics_hz: int=120,
        control_hz: int=30,
        episode_length: int=300,
        dataset: Optional[Dataset]=None,
        ref_init_prob: float=0.0,
        fall_fraction: float=0.6,
    ):
        super().__init__()
        self.character = character
        self.world = world
        self.art = character.articulation
        self.substeps = physics_hz // control_hz
        self.dt = 1.0 / physics_hz
        self.control_dt = self.dt * self.substeps
        self.episode_length = int(episode_length)
        self.dataset = dataset
        self.ref_init_prob = float(ref_init_prob) if dataset is not None else 0.0
        self.fall_height = fall_fraction * character.hip_height

        self.rest = self.art.rest_pose.copy()
        self.observation_space = Box(-np.inf, np.inf, (OBS_DIM, ), np.float64)
        self.action_space = Box(self.art.lower - self.rest, self.art.upper - self.rest, (NUM_ACTUATED, ), np.float64)

        self.state: Optional[SimState] = None
        self.t = 0

    @classmethod
    def from_config(cls, config: Any, dataset: Optional[Dataset]=None, character: Optional[Character]=None, **kwargs) -> "SkillEnv":
        character = character or Character.from_config(config["character"])
        world = World.from_config(character.articulation, config["sim"])
        return cls(
            character, world,
            physics_hz=config["sim"]["physics_hz"], control_hz=config["sim"]["control_hz"],
            episode_length=config["skill"]["episode_length"], dataset=dataset,
            ref_init_prob=config["skill"]["ref_init_prob"],
            fall_fraction=config["analysis"]["balance_fraction"], **kwargs,
        )

    # episode start
    def _reference_state(self, rng: np.random.Generator, scene: Scene) -> SimState:
        frame_a, frame_b = sample_transition(self.dataset, rng)
        fps = 1.0 / max(frame_b.time - frame_a.time, 1e-9)
        q = frame_a.coords()
        u = frame_b.coords() - q
        u[2:] = (u[2:] + np.pi) % (2*np.pi) - np.pi
        u *= fps
        q[0] = scene.start_x
        q[3:] = np.clip(q[3:], self.art.lower, self.art.upper)
        lowest = q[1] + self.world.lowest_point(q, scene.facing)
        if lowest < 0.0:
            q[1] -= lowest
        u[0] *= scene.facing
        obj_q = np.array([scene.table_x, scene.table_height + self.world.object_size / 2, 0.0])
        return SimState(q=q, u=u, obj_q=obj_q, obj_u=np.zeros(3), facing=scene.facing, scene=scene)

    def _start_state(self, rng: np.random.Generator, options: Dict[str, Any]) -> SimState:
        scene = options.get("scene") or far_scene(self.world)
        if self.ref_init_prob > 0 and rng.random() < self.ref_init_prob:
            return self._reference_state(rng, scene)
        return self.world.reset_scene(scene, int(rng.integers(0, 2**31)))

    def reset(self, *, seed: Optional[int]=None, options: Optional[Dict[str, Any]]=None) -> Tuple[np.ndarray, Dict]:
        super().reset(seed=seed)
        self.state = self._start_state(self.np_random, dict(options or {}))
        self.t = 0
        return self.observe(), {}

    # dynamics
    def targets(self, action: np.ndarray) -> np.ndarray:
        return np.clip(self.rest + np.asarray(action, dtype=np.float64), self.art.lower, self.art.upper)

    def simulate(self, action: np.ndarray) -> bool:
        """Hold the PD targets of `action` for one control step. Returns False when the simulation diverged. """
        targets = self.targets(action)
        state = self.state
        try:
            for _ in range(self.substeps):
                torques = self.character.apply_pd_control(state, targets)
                state = self.world.step(state, torques, self.dt)
        except SimulationError as e:
            logger.warning(f"episode ended by a simulation error at step {self.t}: {e}")
            return False
        self.state = state
        return True

    def fallen(self) -> bool:
        return bool(self.state.q[1] < self.fall_height or self.character.touches_ground(self.state, GROUND_TOUCH_POINTS))

    def observe(self) -> np.ndarray:
        return self.character.featurize(self.state)

    def step(self, action: np.ndarray) -> Tuple[np.ndarray, float, bool, bool, Dict]:
        ok = self.simulate(action)
        self.t += 1
        fallen = (not ok) or self.fallen()
        truncated = self.t >= self.episode_length
        return self.observe(), 0.0, fallen, truncated, {"fallen": fallen, "diverged": not ok}

    # checkpointing
    def snapshot(self) -> Dict[str, Any]:
        """Everything needed to continue the current episode, as plain Python values. """
        s = self.state
        return {
            "q": s.q.tolist(), "u": s.u.tolist(), "obj_q": s.obj_q.tolist(), "obj_u": s.obj_u.tolist(),
            "facing": int(s.facing), "time": float(s.time), "t": int(self.t),
            "scene": {key: float(getattr(s.scene, key)) for key in (
                "table_height", "table_width", "table_x", "object_size", "start_x", "goal_x",
            )},
        }

    def restore(self, snap: Dict[str, Any]):
        self.state = SimState(
            q=np.array(snap["q"], dtype=np.float64), u=np.array(snap["u"], dtype=np.float64),
            obj_q=np.array(snap["obj_q"], dtype=np.float64), obj_u=np.array(snap["obj_u"], dtype=np.float64),
            facing=int(snap["facing"]), scene=Scene(**snap["scene"]), time=float(snap["time"]),
        )
        self.t = int(snap["t"])
