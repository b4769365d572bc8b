"""
Hierarchical rollouts of the reach-and-grasp task: the high-level policy picks a latent, the
frozen low-level policy turns it into PD targets. Shared by evaluation, performance
estimation and the pilot study.
"""

from typing import Any, Dict, List, Optional, Sequence

from dataclasses import dataclass, field

import numpy as np
import torch

from SkillRL.env.character import Character
from SkillRL.env.grasp_env import GraspEnv
from SkillRL.skill.reward import disc_reward
from SkillRL.skill.space import SkillSpace
from SkillRL.task.policy import HighLevelPolicy
from SkillRL.task.stages import Stage


@dataclass
class EpisodeStats:
    """Running record of one task episode. """
    table_height: float
    steps: int = 0
    max_lift: float = -np.inf
    max_stage: int = 0
    reached_goal: bool = False
    balanced: bool = True
    fell: bool = False
    log_r_p1: float = 0.0
    loco_r_p1: float = 0.0
    loco_steps: int = 0
    contact_frames: int = 0
    skate_frames: int = 0
    observations: Optional[List[np.ndarray]] = None
    _feet: Optional[np.ndarray] = field(default=None, repr=False)

    def update(self, stage_before: int, info: Dict[str, Any], d_frozen: float, dt: float, skate_speed: float):
        """
        Fold in one control step. The goal counts as reached once the character stands within the
        goal radius after the grasp; from then on it must stay upright until the episode ends.
        """
        self.steps += 1
        r_p1 = float(disc_reward(d_frozen))
        self.log_r_p1 += float(np.log(r_p1))
        if stage_before == Stage.LOCOMOTION:
            self.loco_r_p1 += r_p1
            self.loco_steps += 1
        self.max_lift = max(self.max_lift, float(info["lift"]))
        self.max_stage = max(self.max_stage, int(info["stage"]))
        if info["stage"] == Stage.POSTGRASP and info["at_goal"] and info["upright"]:
            self.reached_goal = True
        if self.reached_goal and (info["fallen"] or not info["upright"]):
            self.balanced = False
        self.fell = self.fell or bool(info["fallen"])

        feet, contact = np.asarray(info["feet"]), np.asarray(info["foot_contact"], dtype=bool)
        if self._feet is not None:
            speed = np.abs(feet[:, 0] - self._feet[:, 0]) / dt
            self.contact_frames += int(contact.sum())
            self.skate_frames += int((contact & (speed > skate_speed)).sum())
        self._feet = feet
        if self.observations is not None:
            self.observations.append(np.asarray(info["char_obs"]))

    def grasp_success(self, lift: float=0.1) -> bool:
        return bool(self.max_lift >= lift)

    def goal_success(self) -> bool:
        return bool(self.reached_goal and self.balanced)

    @property
    def mean_log_r_p1(self) -> float:
        return self.log_r_p1 / max(self.steps, 1)

    def row(self, lift: float=0.1) -> Dict[str, float]:
        return {
            "table_height": self.table_height,
            "steps": self.steps,
            "max_lift": self.max_lift,
            "max_stage": self.max_stage,
            "grasp_success": float(self.grasp_success(lift)),
            "goal_success": float(self.goal_success()),
            "fell": float(self.fell),
            "mean_log_r_p1": self.mean_log_r_p1,
            "loco_r_p1": self.loco_r_p1 / self.loco_steps if self.loco_steps else float("nan"),
            "contact_frames": self.contact_frames,
            "skate_frames": self.skate_frames,
        }


@torch.no_grad()
def run_task_episodes(
    policy: HighLevelPolicy,
    space: SkillSpace,
    config: Any,
    seeds: Sequence[int],
    options: Optional[Sequence[Dict[str, Any]]]=None,
    deterministic: bool=True,
    record: bool=False,
    character: Optional[Character]=None,
) -> List[EpisodeStats]:
    """
    Run one episode per seed in lockstep until every episode has ended.

    Parameters
    ----------
    policy :  The high-level policy.
    space :  The frozen skill space; its mean actions drive the character.
    config :  The run configuration.
    seeds :  Reset seed of every episode.
    options :  Reset options of every episode, e.g. ``{"table_height": 0.4}``.
    deterministic :  Use the mean latent of the high-level policy.
    record :  Keep the character observations of every step.
    """
    n = len(seeds)
    options = list(options) if options is not None else [{}] * n
    character = character or Character.from_config(config["character"])
    interval = int(config["task"]["high_level_interval"])
    skate_speed = float(config["analysis"]["skate_speed"])
    generator = torch.Generator().manual_seed(int(seeds[0]) if n else 0)

    envs = [GraspEnv.from_config(config, character=character) for _ in range(n)]
    obs, char_obs, stats = [], [], []
    for env, seed, opt in zip(envs, seeds, options):
        o, info = env.reset(seed=int(seed), options=opt)
        obs.append(o)
        char_obs.append(info["char_obs"])
        stats.append(EpisodeStats(table_height=float(info["scene"].table_height), observations=[info["char_obs"]] if record else None))
    obs, char_obs = np.array(obs), np.array(char_obs)
    latents = np.zeros((n, space.latent_dim))
    active = np.ones(n, dtype=bool)
    t = 0
    while active.any():
        idx = np.flatnonzero(active)
        if t % interval == 0:
            _, _, z = policy.act(obs[idx], deterministic, generator)
            latents[idx] = z
        actions = space.act(char_obs[idx], latents[idx])
        before = char_obs[idx].copy()
        infos = []
        for k, i in enumerate(idx):
            stage_before = envs[i].stage_state.stage
            o, _, terminated, truncated, info = envs[i].step(actions[k])
            obs[i], char_obs[i] = o, info["char_obs"]
            infos.append((stage_before, info))
            if terminated or truncated:
                active[i] = False
        d = space.disc_enc.discriminate(
            torch.as_tensor(before, dtype=torch.float32), torch.as_tensor(char_obs[idx], dtype=torch.float32),
        ).numpy()
        for k, i in enumerate(idx):
            stage_before, info = infos[k]
            stats[i].update(stage_before, info, float(d[k]), envs[i].control_dt, skate_speed)
        t += 1
    return stats
