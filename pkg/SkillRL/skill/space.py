from typing import Any, Dict, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

from SkillRL.env.character import NUM_ACTUATED, OBS_DIM, part_slices
from SkillRL.misc.errors import CheckpointError
from SkillRL.net import load_checkpoint, load_module_tensors, module_tensors
from SkillRL.rl import GaussianActor, PartwiseCritic
from SkillRL.skill.disc_enc import DiscEnc

PREFIX = "skill"


class SkillSpace(nn.Module):
    """
    The networks of the low-level skill space: the latent-conditioned actor ``pi_L(a | s, z)``,
    the part-wise critic ``V(s, z)`` and the discriminator / encoder.

    Parameters
    ----------
    latent_dim :  Dimension of the unit latents.
    action_std :  Fixed standard deviation of the actor.
    actor_hidden :  Hidden sizes of the actor.
    part_dim :  Width of every per-part critic layer.
    critic_hidden :  Trunk widths of the critic (f1, f2, f3).
    disc_hidden :  Trunk widths of the discriminator / encoder.
    """
    def __init__(
        self,
        latent_dim: int,
        action_std: float,
        actor_hidden,
        part_dim: int,
        critic_hidden,
        disc_hidden,
        obs_dim: int=OBS_DIM,
        action_dim: int=NUM_ACTUATED,
    ) -> None:
        super().__init__()
        self.latent_dim = int(latent_dim)
        self.obs_dim = int(obs_dim)
        self.actor = GaussianActor(obs_dim + latent_dim, action_dim, action_std, actor_hidden)
        self.critic = PartwiseCritic(part_slices(), latent_dim, part_dim, critic_hidden)
        self.disc_enc = DiscEnc(obs_dim, latent_dim, disc_hidden)

    @classmethod
    def from_config(cls, config: Any) -> "SkillSpace":
        net, skill = config["net"], config["skill"]
        return cls(
            latent_dim=skill["latent_dim"], action_std=skill["action_std"],
            actor_hidden=net["actor_hidden"], part_dim=net["critic_part_dim"],
            critic_hidden=net["critic_hidden"], disc_hidden=net["disc_hidden"],
        )

    @torch.no_grad()
    def act(self, obs: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Mean actions of the low-level policy for (B, obs_dim) observations and (B, latent_dim) latents. """
        x = torch.cat([torch.as_tensor(obs, dtype=torch.float32), torch.as_tensor(z, dtype=torch.float32)], dim=-1)
        return self.actor(x).numpy().astype(np.float64)

    def tensors(self):
        return module_tensors(self, PREFIX)

    def load_tensors(self, tensors) -> "SkillSpace":
        load_module_tensors(self, tensors, PREFIX)
        return self


def load_skill_space(
    path: str,
    config: Any,
    config_hash: Optional[str]=None,
    force: bool=False,
) -> Tuple[SkillSpace, Dict[str, Any]]:
    """Rebuild the skill-space networks of a low-level checkpoint. """
    tensors, meta = load_checkpoint(path, config_hash, force)
    if meta.get("kind") != "skill":
        raise CheckpointError(path, None, f"expected a skill-space checkpoint, found kind {meta.get('kind')!r}")
    space = SkillSpace.from_config(config)
    space.load_tensors(tensors)
    return space, meta


def freeze(module: nn.Module) -> nn.Module:
    module.eval()
    for p in module.parameters():
        p.requires_grad_(False)
    return module
