"""
Training of the high-level policy on the reach-and-grasp task over a frozen skill space.

The reward of every control step mixes the stage reward with two motion priors: the frozen
low-level discriminator D and a walking discriminator D' trained alongside the policy on the
Locomotion-stage transitions against the walking reference.
"""

from typing import Any, Dict, List, Optional

import os

import numpy as np
import torch
from tqdm import trange

from SkillRL.data import Dataset
from SkillRL.env import Character, OBS_DIM
from SkillRL.env.grasp_env import GraspEnv, TASK_OBS_DIM
from SkillRL.exp import derive_seed
from SkillRL.logger import CsvLogger
from SkillRL.misc.errors import CheckpointError
from SkillRL.net import (
    SkillAdam,
    load_checkpoint,
    load_module_tensors,
    load_optimizer_tensors,
    module_tensors,
    optimizer_tensors,
    save_checkpoint,
)
from SkillRL.rl import PpoConfig, RolloutBuffer, ppo_update
from SkillRL.skill.disc_enc import DiscEnc, disc_update, make_disc_optimizer
from SkillRL.skill.features import transition_pairs
from SkillRL.skill.reward import disc_reward
from SkillRL.skill.space import SkillSpace, freeze
from SkillRL.task.policy import HighLevelPolicy
from SkillRL.task.rewards import RewardParams, total_reward
from SkillRL.task.stages import NUM_STAGES, Stage

WALK_PREFIX = "walk_disc"


class TaskTrainer:
    """
    Trains ``pi_H(z | s)`` with PPO. One buffer step is one high-level decision, held for
    ``task.high_level_interval`` control steps whose rewards are summed.

    Parameters
    ----------
    config :  The resolved run configuration.
    space :  The trained skill space; it is frozen here.
    walk_dataset :  Walking reference of the co-trained discriminator D'.
    run_logger :  Metrics and console logger of the run.
    seed :  The run seed.
    config_hash :  Hash recorded in every checkpoint.
    character :  The character, built from the config when omitted.
    """
    def __init__(
        self,
        config: Any,
        space: SkillSpace,
        walk_dataset: Dataset,
        run_logger: CsvLogger,
        seed: int,
        config_hash: str="",
        character: Optional[Character]=None,
    ):
        task = config["task"]
        self.config = config
        self.task = task
        self.logger = run_logger
        self.seed = int(seed)
        self.config_hash = config_hash
        self.character = character or Character.from_config(config["character"])
        self.space = freeze(space)
        self.walk_dataset = walk_dataset
        self.params = RewardParams.from_config(config)
        self.sr_lift = float(config["analysis"]["sr_lift"])

        self.num_envs = int(task["num_envs"])
        self.horizon = int(task["horizon"])
        self.interval = int(task["high_level_interval"])
        self.latent_dim = space.latent_dim
        self.envs = [GraspEnv.from_config(config, character=self.character) for _ in range(self.num_envs)]

        self.policy = HighLevelPolicy.from_config(config)
        self.actor_optim = SkillAdam(self.policy.actor.parameters(), lr=task["lr"], name="task.actor")
        self.critic_optim = SkillAdam(self.policy.critic.parameters(), lr=task["lr"], name="task.critic")
        self.walk_disc = DiscEnc(OBS_DIM, 0, config["net"]["disc_hidden"])
        self.walk_optim = make_disc_optimizer(self.walk_disc, task["lr"], task["disc_weight_decay"], name="task.walk_disc")
        self.ppo = PpoConfig.from_config(task)
        self.buffer = RolloutBuffer(self.horizon, self.num_envs, {
            "obs": {"shape": [TASK_OBS_DIM], "dtype": np.float32},
            "action": {"shape": [self.latent_dim], "dtype": np.float32},
            "logp": {"shape": [], "dtype": np.float32},
        })
        self.real_s, self.real_next = transition_pairs(self.character, walk_dataset)

        self.iteration = 0
        self.episodes = [0] * self.num_envs
        self.obs = np.zeros((self.num_envs, TASK_OBS_DIM))
        self.char_obs = np.zeros((self.num_envs, OBS_DIM))
        self.max_lift = np.full(self.num_envs, -np.inf)
        self.started = False

    def _start_episode(self, idx: int):
        obs, info = self.envs[idx].reset(seed=derive_seed(self.seed, "task.env", idx, self.episodes[idx]))
        self.obs[idx] = obs
        self.char_obs[idx] = info["char_obs"]
        self.max_lift[idx] = -np.inf

    def start(self):
        for idx in range(self.num_envs):
            self._start_episode(idx)
        self.started = True

    @torch.no_grad()
    def _discriminate(self, disc: DiscEnc, s: np.ndarray, s_next: np.ndarray) -> np.ndarray:
        return disc.discriminate(torch.as_tensor(s, dtype=torch.float32), torch.as_tensor(s_next, dtype=torch.float32)).numpy()

    def collect(self, generator: torch.Generator) -> Dict[str, Any]:
        self.buffer.reset()
        walk_s, walk_next = [], []
        finished: List[Dict[str, float]] = []
        r_goal_sum, r_p1_sum, r_p2_sum, n_steps = 0.0, 0.0, 0.0, 0
        stage_counts = np.zeros(NUM_STAGES)
        for _ in range(self.horizon):
            raw, logp, z = self.policy.act(self.obs, generator=generator)
            value = self.policy.value(self.obs)
            start_obs = self.obs.copy()
            reward = np.zeros(self.num_envs)
            done = np.zeros(self.num_envs)
            boot = np.zeros(self.num_envs)
            live = np.ones(self.num_envs, dtype=bool)
            for _ in range(self.interval):
                idx = np.flatnonzero(live)
                if len(idx) == 0:
                    break
                actions = self.space.act(self.char_obs[idx], z[idx])
                before = self.char_obs[idx].copy()
                stages, reached, goals = [], [], []
                for k, i in enumerate(idx):
                    stages.append(self.envs[i].stage_state.stage)
                    o, r, terminated, truncated, info = self.envs[i].step(actions[k])
                    reached.append(Stage(info["stage"]))
                    self.obs[i], self.char_obs[i] = o, info["char_obs"]
                    goals.append(r)
                    self.max_lift[i] = max(self.max_lift[i], info["lift"])
                    if terminated or truncated:
                        live[i] = False
                        done[i] = 1.0
                        boot[i] = float(truncated and not terminated)
                        finished.append({"lift": self.max_lift[i], "stage": info["stage"], "fallen": float(info["fallen"])})
                d = self._discriminate(self.space.disc_enc, before, self.char_obs[idx])
                d_walk = self._discriminate(self.walk_disc, before, self.char_obs[idx])
                for k, i in enumerate(idx):
                    # r_G belongs to the stage the step reached; weight it by that stage
                    reward[i] += total_reward(
                        goals[k], d[k], d_walk[k] if reached[k] == Stage.LOCOMOTION else None, reached[k], self.params,
                    )
                    loco = stages[k] == Stage.LOCOMOTION
                    stage_counts[stages[k]] += 1
                    r_goal_sum += goals[k]
                    r_p1_sum += float(disc_reward(d[k]))
                    if loco:
                        r_p2_sum += float(disc_reward(d_walk[k]))
                        walk_s.append(before[k])
                        walk_next.append(self.char_obs[i].copy())
                    n_steps += 1
            # episodes that hit the time limit bootstrap from the value of their last observation
            if boot.any():
                reward += self.ppo.gamma * boot * self.policy.value(self.obs)
            self.buffer.add_sample({
                "obs": start_obs, "action": raw, "logp": logp,
                "reward": reward, "done": done, "value": value,
            })
            for idx in np.flatnonzero(done):
                self.episodes[idx] += 1
                self._start_episode(idx)
        self.buffer.finish(self.policy.value(self.obs), self.ppo.gamma, self.ppo.lam)

        row = {
            "reward": float(self.buffer.fields["reward"].mean()),
            "r_goal": r_goal_sum / max(n_steps, 1),
            "r_p1": r_p1_sum / max(n_steps, 1),
            "r_p2": r_p2_sum / max(stage_counts[Stage.LOCOMOTION], 1),
            "episodes": len(finished),
        }
        for stage in Stage:
            row[f"stage_{stage.name.lower()}"] = float(stage_counts[stage] / max(n_steps, 1))
        if finished:
            row["sr_grasp"] = float(np.mean([f["lift"] >= self.sr_lift for f in finished]))
            row["falls"] = float(np.mean([f["fallen"] for f in finished]))
        return {"row": row, "walk_s": walk_s, "walk_next": walk_next}

    def update_policy(self, generator: torch.Generator) -> Dict[str, float]:
        batch = self.buffer.flatten(["obs", "action", "logp"])
        batch["actor_in"] = batch["obs"]
        return ppo_update(
            self.policy.actor, self.policy.critic, batch, self.ppo, self.actor_optim, self.critic_optim, generator,
        )

    def update_walk_disc(self, walk_s: List[np.ndarray], walk_next: List[np.ndarray], rng: np.random.Generator) -> Dict[str, float]:
        """Train D' on this iteration's Locomotion-stage transitions against the walking reference. """
        n = len(walk_s)
        if n == 0:
            return {"walk_pairs": 0}
        s, s_next = np.stack(walk_s), np.stack(walk_next)
        perm = rng.permutation(n)
        size = int(self.task["disc_minibatch"])
        rows = []
        for start in range(0, n, size):
            idx = perm[start:start + size]
            clips, frames = self.walk_dataset.sample_indices(rng, len(idx))
            rows.append(disc_update(
                self.walk_disc, self.walk_optim,
                torch.as_tensor(np.stack([self.real_s[c][f] for c, f in zip(clips, frames)]), dtype=torch.float32),
                torch.as_tensor(np.stack([self.real_next[c][f] for c, f in zip(clips, frames)]), dtype=torch.float32),
                torch.as_tensor(s[idx], dtype=torch.float32), torch.as_tensor(s_next[idx], dtype=torch.float32),
                grad_penalty=self.task["grad_penalty"],
            ))
        stats = {"walk_pairs": n, "walk_disc_skipped": float(sum(r["disc_skipped"] for r in rows))}
        for key in ("disc_loss", "grad_penalty", "disc_real", "disc_policy"):
            values = [r[key] for r in rows if key in r]
            if values:
                stats[f"walk_{key}"] = float(np.mean(values))
        return stats

    def run_iteration(self) -> Dict[str, float]:
        if not self.started:
            self.start()
        it = self.iteration
        generator = torch.Generator().manual_seed(derive_seed(self.seed, "task.ppo", it))
        rng = np.random.default_rng(derive_seed(self.seed, "task.disc", it))
        collected = self.collect(generator)
        row = collected["row"]
        row.update(self.update_policy(generator))
        row.update(self.update_walk_disc(collected["walk_s"], collected["walk_next"], rng))
        self.iteration += 1
        return row

    def train(self, iterations: int, checkpoint_dir: Optional[str]=None, tag: str="task") -> Optional[str]:
        every = int(self.task["checkpoint_every"])
        path, saved_at = None, None
        for _ in trange(self.iteration, iterations, desc=tag, disable=iterations - self.iteration < 2):
            row = self.run_iteration()
            self.logger.log_scalars(tag, row, step=self.iteration)
            if checkpoint_dir is not None and self.iteration % every == 0:
                path, saved_at = self.save(os.path.join(checkpoint_dir, f"{tag}_{self.iteration:06d}.skf")), self.iteration
        if checkpoint_dir is not None and saved_at != self.iteration:
            path = self.save(os.path.join(checkpoint_dir, f"{tag}_{self.iteration:06d}.skf"))
        return path

    def save(self, path: str) -> str:
        if not self.started:
            self.start()
        tensors = self.policy.tensors()
        tensors.update(module_tensors(self.walk_disc, WALK_PREFIX))
        optimizers = {}
        for name, optim in (("actor", self.actor_optim), ("critic", self.critic_optim), ("walk_disc", self.walk_optim)):
            table, meta = optimizer_tensors(optim, f"optim/{name}")
            tensors.update(table)
            optimizers[name] = meta
        meta = {
            "kind": "task",
            "config_hash": self.config_hash,
            "seed": self.seed,
            "iteration": self.iteration,
            "latent_dim": self.latent_dim,
            "optimizers": optimizers,
            "episodes": list(self.episodes),
            "max_lift": self.max_lift.tolist(),
            "envs": [env.snapshot() for env in self.envs],
        }
        save_checkpoint(path, tensors, meta)
        self.logger.info(f"checkpoint {path} at iteration {self.iteration}")
        return path

    def load(self, path: str, resume: bool=True, force: bool=False) -> Dict[str, Any]:
        tensors, meta = load_checkpoint(path, self.config_hash or None, force)
        if meta.get("kind") != "task":
            raise CheckpointError(path, None, f"expected a task-policy checkpoint, found kind {meta.get('kind')!r}")
        self.policy.load_tensors(tensors)
        load_module_tensors(self.walk_disc, tensors, WALK_PREFIX)
        for name, optim in (("actor", self.actor_optim), ("critic", self.critic_optim), ("walk_disc", self.walk_optim)):
            load_optimizer_tensors(optim, tensors, meta["optimizers"][name], f"optim/{name}")
        if not resume:
            return meta
        if len(meta["envs"]) != self.num_envs:
            raise CheckpointError(path, None, f"checkpoint holds {len(meta['envs'])} environments, config asks for {self.num_envs}")
        self.iteration = int(meta["iteration"])
        self.episodes = [int(k) for k in meta["episodes"]]
        self.max_lift = np.array(meta["max_lift"], dtype=np.float64)
        for idx, env in enumerate(self.envs):
            env.restore(meta["envs"][idx])
            self.obs[idx] = env.observe()
            self.char_obs[idx] = self.character.featurize(env.state)
        self.started = True
        return meta
