from typing import Any, Dict, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

from SkillRL.env.grasp_env import TASK_OBS_DIM
from SkillRL.misc.errors import CheckpointError
from SkillRL.net import load_checkpoint, load_module_tensors, module_tensors
from SkillRL.rl import Critic, GaussianActor

PREFIX = "task"


def normalize_latent(raw: torch.Tensor, eps: float=1e-8) -> torch.Tensor:
    return raw / raw.norm(dim=-1, keepdim=True).clamp_min(eps)


class HighLevelPolicy(nn.Module):
    """
    ``pi_H(z | s)``: a Gaussian over unnormalized latents whose samples are projected onto the
    unit sphere before they reach the low-level policy. PPO works on the unnormalized samples.

    Parameters
    ----------
    latent_dim :  Dimension of the skill latents.
    action_std :  Fixed standard deviation of the unnormalized latents.
    hidden_dims :  Hidden sizes of both the actor and the critic.
    obs_dim :  Task observation size.
    """
    def __init__(
        self,
        latent_dim: int,
        action_std: float,
        hidden_dims,
        obs_dim: int=TASK_OBS_DIM,
    ) -> None:
        super().__init__()
        self.latent_dim = int(latent_dim)
        self.obs_dim = int(obs_dim)
        self.actor = GaussianActor(obs_dim, latent_dim, action_std, hidden_dims)
        self.critic = Critic(obs_dim, hidden_dims)

    @classmethod
    def from_config(cls, config: Any) -> "HighLevelPolicy":
        return cls(
            latent_dim=config["skill"]["latent_dim"], action_std=config["task"]["action_std"],
            hidden_dims=config["net"]["high_level_hidden"],
        )

    @torch.no_grad()
    def act(
        self,
        obs: np.ndarray,
        deterministic: bool=False,
        generator: Optional[torch.Generator]=None,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Returns
        -------
        (raw, logp, z) :  The unnormalized sample, its log-probability and the unit latent.
        """
        raw, logp, _ = self.actor.sample(torch.as_tensor(obs, dtype=torch.float32), deterministic, generator)
        z = normalize_latent(raw)
        return raw.numpy(), logp.numpy(), z.numpy().astype(np.float64)

    @torch.no_grad()
    def value(self, obs: np.ndarray) -> np.ndarray:
        return self.critic(torch.as_tensor(obs, dtype=torch.float32)).numpy().astype(np.float64)

    def tensors(self):
        return module_tensors(self, PREFIX)

    def load_tensors(self, tensors) -> "HighLevelPolicy":
        load_module_tensors(self, tensors, PREFIX)
        return self


def load_task_policy(
    path: str,
    config: Any,
    config_hash: Optional[str]=None,
    force: bool=False,
) -> Tuple[HighLevelPolicy, Dict[str, Any]]:
    tensors, meta = load_checkpoint(path, config_hash, force)
    if meta.get("kind") != "task":
        raise CheckpointError(path, None, f"expected a task-policy checkpoint, found kind {meta.get('kind')!r}")
    policy = HighLevelPolicy.from_config(config)
    policy.load_tensors(tensors)
    return policy, meta
