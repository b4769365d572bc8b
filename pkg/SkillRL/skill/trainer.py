"""
Stage-one training of the latent skill space, and its continuation on an augmented dataset
with the feature-alignment reward.

Every iteration collects `horizon` steps of `num_envs` lockstep environments, rewards every
transition with the discriminator / encoder, runs the PPO update and finally updates the
discriminator and encoder on the collected transitions against reference transitions.

All randomness is drawn from seeds derived from the run seed and explicit counters (iteration,
environment index, episode index), so a run resumed from a checkpoint reproduces the
uninterrupted one.
"""

from typing import Any, Dict, List, Optional

import os
from collections import deque

import numpy as np
import torch
from tqdm import trange

from SkillRL.align import FeatureAligner
from SkillRL.data import Dataset
from SkillRL.env import Character, NUM_ACTUATED, OBS_DIM, SkillEnv
from SkillRL.exp import derive_seed
from SkillRL.logger import CsvLogger
from SkillRL.math import unit_sphere
from SkillRL.misc.errors import CheckpointError
from SkillRL.net import (
    SkillAdam,
    load_checkpoint,
    load_optimizer_tensors,
    optimizer_tensors,
    save_checkpoint,
)
from SkillRL.rl import PpoConfig, RolloutBuffer, ppo_update
from SkillRL.skill.disc_enc import disc_update, make_disc_optimizer
from SkillRL.skill.features import transition_pairs
from SkillRL.skill.reward import disc_reward, diversity_bonus, low_level_reward
from SkillRL.skill.space import SkillSpace


def _mean_stats(rows: List[Dict[str, float]]) -> Dict[str, float]:
    keys = []
    for row in rows:
        keys += [key for key in row if key not in keys]
    return {key: float(np.mean([row[key] for row in rows if key in row])) for key in keys}


class SkillTrainer:
    """
    Trains ``pi_L(a | s, z)`` on a reference dataset.

    Parameters
    ----------
    config :  The resolved run configuration.
    dataset :  Reference motion for the discriminator and reference-state initialization.
    run_logger :  Metrics and console logger of the run.
    seed :  The run seed.
    config_hash :  Hash recorded in every checkpoint.
    aligner :  Optional alignment hook; its reward is added to every transition.
    character :  The character, built from the config when omitted.
    """
    def __init__(
        self,
        config: Any,
        dataset: Dataset,
        run_logger: CsvLogger,
        seed: int,
        config_hash: str="",
        aligner: Optional[FeatureAligner]=None,
        character: Optional[Character]=None,
    ):
        skill = config["skill"]
        self.config = config
        self.skill = skill
        self.dataset = dataset
        self.logger = run_logger
        self.seed = int(seed)
        self.config_hash = config_hash
        self.aligner = aligner
        self.character = character or Character.from_config(config["character"])

        self.num_envs = int(skill["num_envs"])
        self.horizon = int(skill["horizon"])
        self.latent_dim = int(skill["latent_dim"])
        self.envs = [SkillEnv.from_config(config, dataset, self.character) for _ in range(self.num_envs)]

        self.space = SkillSpace.from_config(config)
        self.actor_optim = SkillAdam(self.space.actor.parameters(), lr=skill["lr"], name="skill.actor")
        self.critic_optim = SkillAdam(self.space.critic.parameters(), lr=skill["lr"], name="skill.critic")
        self.disc_optim = make_disc_optimizer(
            self.space.disc_enc, skill["lr"], skill["disc_weight_decay"], skill["enc_weight_decay"], name="skill.disc_enc",
        )
        self.ppo = PpoConfig.from_config(skill)
        self.buffer = RolloutBuffer(self.horizon, self.num_envs, {
            "obs": {"shape": [OBS_DIM], "dtype": np.float32},
            "next_obs": {"shape": [OBS_DIM], "dtype": np.float32},
            "latent": {"shape": [self.latent_dim], "dtype": np.float32},
            "action": {"shape": [NUM_ACTUATED], "dtype": np.float32},
            "logp": {"shape": [], "dtype": np.float32},
            "align_reward": {"shape": [], "dtype": np.float64},
            "truncated": {"shape": [], "dtype": np.float64},
        })
        self.real_s, self.real_next = transition_pairs(self.character, dataset)

        self.window = aligner.window if aligner is not None else int(config["align"]["window"])
        self.iteration = 0
        self.episodes = [0] * self.num_envs
        self.obs = np.zeros((self.num_envs, OBS_DIM))
        self.latents = np.zeros((self.num_envs, self.latent_dim))
        self.history = [deque(maxlen=self.window) for _ in range(self.num_envs)]
        self.started = False

    # episodes
    def _start_episode(self, idx: int):
        k = self.episodes[idx]
        obs, _ = self.envs[idx].reset(seed=derive_seed(self.seed, "skill.env", idx, k))
        rng = np.random.default_rng(derive_seed(self.seed, "skill.latent", idx, k))
        self.latents[idx] = unit_sphere(rng, 1, self.latent_dim)[0]
        self.obs[idx] = obs
        self.history[idx].clear()
        self.history[idx].append(obs)

    def start(self):
        for idx in range(self.num_envs):
            self._start_episode(idx)
        self.started = True

    # one iteration
    def collect(self, generator: torch.Generator) -> Dict[str, float]:
        """Fill the rollout buffer and compute rewards, advantages and returns. """
        self.buffer.reset()
        lengths, falls = [], 0
        for _ in range(self.horizon):
            obs_t = torch.as_tensor(self.obs, dtype=torch.float32)
            z_t = torch.as_tensor(self.latents, dtype=torch.float32)
            with torch.no_grad():
                action, logp, _ = self.space.actor.sample(torch.cat([obs_t, z_t], dim=-1), generator=generator)
                value = self.space.critic(obs_t, z_t)
            actions = action.numpy().astype(np.float64)
            next_obs = np.zeros_like(self.obs)
            done = np.zeros(self.num_envs)
            truncated = np.zeros(self.num_envs)
            for idx, env in enumerate(self.envs):
                o, _, terminated, trunc, _ = env.step(actions[idx])
                next_obs[idx] = o
                done[idx] = float(terminated or trunc)
                truncated[idx] = float(trunc and not terminated)
                self.history[idx].append(o)
                falls += int(terminated)
            if self.aligner is not None:
                align = self.aligner.reward([np.stack(h) for h in self.history], self.latents)
            else:
                align = np.zeros(self.num_envs)
            self.buffer.add_sample({
                "obs": self.obs, "next_obs": next_obs, "latent": self.latents.copy(),
                "action": actions, "logp": logp.numpy(), "align_reward": align, "truncated": truncated,
                "reward": np.zeros(self.num_envs), "done": done, "value": value.numpy(),
            })
            for idx in range(self.num_envs):
                if done[idx]:
                    lengths.append(self.envs[idx].t)
                    self.episodes[idx] += 1
                    self._start_episode(idx)
                else:
                    self.obs[idx] = next_obs[idx]

        f = self.buffer.fields
        n = self.horizon * self.num_envs
        s = torch.as_tensor(f["obs"].reshape(n, OBS_DIM))
        s_next = torch.as_tensor(f["next_obs"].reshape(n, OBS_DIM))
        z = torch.as_tensor(f["latent"].reshape(n, self.latent_dim))
        style = low_level_reward(
            self.space.disc_enc, s, s_next, z, self.skill["disc_reward_weight"], self.skill["enc_reward_weight"],
        ).reshape(self.horizon, self.num_envs)
        with torch.no_grad():
            d = self.space.disc_enc.discriminate(s, s_next)
            boot = self.space.critic(s_next, z).numpy().astype(np.float64).reshape(self.horizon, self.num_envs)
            last_value = self.space.critic(
                torch.as_tensor(self.obs, dtype=torch.float32), torch.as_tensor(self.latents, dtype=torch.float32),
            ).numpy()
        # time-limit ends bootstrap from the value of the last observation
        f["reward"][:] = style + f["align_reward"] + self.ppo.gamma * boot * f["truncated"]
        self.buffer.finish(last_value, self.ppo.gamma, self.ppo.lam)
        return {
            "reward": float(f["reward"].mean()),
            "style_reward": float(style.mean()),
            "disc_reward": float(disc_reward(d).mean()),
            "align_reward": float(f["align_reward"].mean()),
            "episodes": len(lengths),
            "episode_length": float(np.mean(lengths)) if lengths else float("nan"),
            "falls": falls,
        }

    def update_policy(self, generator: torch.Generator) -> Dict[str, float]:
        batch = self.buffer.flatten(["obs", "latent", "action", "logp"])
        batch["actor_in"] = torch.cat([batch["obs"], batch["latent"]], dim=-1)
        weight = float(self.skill["diversity_bonus"])

        def diversity_loss(mb: Dict[str, torch.Tensor]) -> torch.Tensor:
            z2 = torch.randn(mb["latent"].shape, generator=generator)
            z2 = z2 / z2.norm(dim=-1, keepdim=True)
            return -diversity_bonus(self.space.actor, mb["obs"], mb["latent"], z2, weight)

        return ppo_update(
            self.space.actor, self.space.critic, batch, self.ppo, self.actor_optim, self.critic_optim,
            generator, aux_loss=diversity_loss if weight > 0 else None,
        )

    def update_discriminator(self, rng: np.random.Generator) -> Dict[str, float]:
        """One pass over the collected transitions, each minibatch against as many reference transitions. """
        f = self.buffer.fields
        n = self.horizon * self.num_envs
        s = f["obs"].reshape(n, OBS_DIM)
        s_next = f["next_obs"].reshape(n, OBS_DIM)
        z = f["latent"].reshape(n, self.latent_dim)
        perm = rng.permutation(n)
        size = int(self.skill["disc_minibatch"])
        rows = []
        for start in range(0, n, size):
            idx = perm[start:start + size]
            clips, frames = self.dataset.sample_indices(rng, len(idx))
            real_s = np.stack([self.real_s[c][k] for c, k in zip(clips, frames)])
            real_next = np.stack([self.real_next[c][k] for c, k in zip(clips, frames)])
            rows.append(disc_update(
                self.space.disc_enc, self.disc_optim,
                torch.as_tensor(real_s, dtype=torch.float32), torch.as_tensor(real_next, dtype=torch.float32),
                torch.as_tensor(s[idx]), torch.as_tensor(s_next[idx]), z=torch.as_tensor(z[idx]),
                grad_penalty=self.skill["grad_penalty"],
            ))
        stats = _mean_stats(rows)
        stats["disc_skipped"] = float(sum(row["disc_skipped"] for row in rows))
        if "disc_real" in stats and "disc_policy" in stats:
            stats["disc_gap"] = stats["disc_real"] - stats["disc_policy"]
        return stats

    def run_iteration(self) -> Dict[str, float]:
        if not self.started:
            self.start()
        it = self.iteration
        generator = torch.Generator().manual_seed(derive_seed(self.seed, "skill.ppo", it))
        rng = np.random.default_rng(derive_seed(self.seed, "skill.disc", it))
        row = {}
        row.update(self.collect(generator))
        row.update(self.update_policy(generator))
        row.update(self.update_discriminator(rng))
        self.iteration += 1
        return row

    def train(self, iterations: int, checkpoint_dir: Optional[str]=None, tag: str="skill") -> Optional[str]:
        """
        Run until `iterations` iterations have been completed in total, writing metrics every
        iteration and a checkpoint every `checkpoint_every` iterations and at the end.

        Returns
        -------
        The path of the last checkpoint, or None without a `checkpoint_dir`.
        """
        every = int(self.skill["checkpoint_every"])
        if checkpoint_dir is None:
            checkpoint = lambda: None
        else:
            checkpoint = lambda: self.save(os.path.join(checkpoint_dir, f"{tag}_{self.iteration:06d}.skf"))
        path, saved_at = None, None
        for _ in trange(self.iteration, iterations, desc=tag, disable=iterations - self.iteration < 2):
            row = self.run_iteration()
            self.logger.log_scalars(tag, row, step=self.iteration)
            if self.iteration % every == 0:
                path, saved_at = checkpoint(), self.iteration
        if saved_at != self.iteration:
            path = checkpoint()
        return path

    # checkpoints
    def save(self, path: str) -> str:
        if not self.started:
            self.start()
        tensors = self.space.tensors()
        optimizers = {}
        for name, optim in (("actor", self.actor_optim), ("critic", self.critic_optim), ("disc_enc", self.disc_optim)):
            table, meta = optimizer_tensors(optim, f"optim/{name}")
            tensors.update(table)
            optimizers[name] = meta
        meta = {
            "kind": "skill",
            "config_hash": self.config_hash,
            "seed": self.seed,
            "iteration": self.iteration,
            "latent_dim": self.latent_dim,
            "dataset_hash": self.dataset.hash(),
            "optimizers": optimizers,
            "episodes": list(self.episodes),
            "latents": self.latents.tolist(),
            "envs": [env.snapshot() for env in self.envs],
            "history": [[row.tolist() for row in h] for h in self.history],
        }
        save_checkpoint(path, tensors, meta)
        self.logger.info(f"checkpoint {path} at iteration {self.iteration}")
        return path

    def load(self, path: str, resume: bool=True, force: bool=False) -> Dict[str, Any]:
        """
        Load networks and optimizer moments from a skill checkpoint. With `resume` the iteration
        count, episode counters, latents and environment states are restored too, so training
        continues exactly where the checkpoint was written; without it a fresh training stage
        starts from the loaded weights.
        """
        tensors, meta = load_checkpoint(path, self.config_hash or None, force)
        if meta.get("kind") != "skill":
            raise CheckpointError(path, None, f"expected a skill-space checkpoint, found kind {meta.get('kind')!r}")
        self.space.load_tensors(tensors)
        for name, optim in (("actor", self.actor_optim), ("critic", self.critic_optim), ("disc_enc", self.disc_optim)):
            load_optimizer_tensors(optim, tensors, meta["optimizers"][name], f"optim/{name}")
        if not resume:
            return meta
        if len(meta["envs"]) != self.num_envs:
            raise CheckpointError(path, None, f"checkpoint holds {len(meta['envs'])} environments, config asks for {self.num_envs}")
        self.iteration = int(meta["iteration"])
        self.episodes = [int(k) for k in meta["episodes"]]
        self.latents = np.array(meta["latents"], dtype=np.float64)
        for idx, env in enumerate(self.envs):
            env.restore(meta["envs"][idx])
            self.obs[idx] = env.observe()
            self.history[idx] = deque((np.array(row) for row in meta["history"][idx]), maxlen=self.window)
        self.started = True
        return meta
