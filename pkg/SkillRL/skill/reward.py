"""
Rewards of the latent skill space: the discriminator reward, the skill reward that combines it
with the encoder agreement ``mu_q . z``, and the diversity bonus of the policy objective.
"""

from typing import Union

import numpy as np
import torch
import torch.nn.functional as F

from SkillRL.skill.disc_enc import DiscEnc

D_CLAMP = (1e-6, 1.0 - 1e-6)

ArrayLike = Union[float, np.ndarray, torch.Tensor]


def _as_float64(x: ArrayLike) -> np.ndarray:
    if isinstance(x, torch.Tensor):
        x = x.detach().cpu().numpy()
    return np.asarray(x, dtype=np.float64)


def clamp_disc(d: ArrayLike) -> np.ndarray:
    return np.clip(_as_float64(d), *D_CLAMP)


def disc_reward(d: ArrayLike) -> np.ndarray:
    """``-log(1 - D)`` with D clamped to [1e-6, 1 - 1e-6]; finite, positive and increasing in D. """
    return -np.log1p(-clamp_disc(d))


def skill_reward(d: ArrayLike, enc_agreement: ArrayLike, w_disc: float=0.5, w_enc: float=0.5) -> np.ndarray:
    """``w_disc * (-log(1 - D)) + w_enc * (mu_q . z)`` """
    return w_disc * disc_reward(d) + w_enc * _as_float64(enc_agreement)


@torch.no_grad()
def low_level_reward(
    disc_enc: DiscEnc,
    s: torch.Tensor,
    s_next: torch.Tensor,
    z: torch.Tensor,
    w_disc: float=0.5,
    w_enc: float=0.5,
) -> np.ndarray:
    """
    Reward of the transitions ``(s, s_next)`` generated under the unit latents `z`: the
    discriminator's style reward plus the encoder's agreement with `z`, evaluated in float64.
    """
    d, mu = disc_enc(s, s_next)
    agreement = (mu * z).sum(-1)
    return skill_reward(d, agreement, w_disc, w_enc)


def diversity_bonus(
    actor: torch.nn.Module,
    s: torch.Tensor,
    z1: torch.Tensor,
    z2: torch.Tensor,
    weight: float=0.01,
) -> torch.Tensor:
    """
    ``weight * mean[(1 - cos(a(s, z1), a(s, z2))) * (1 - z1 . z2) / 2]`` with ``a`` the action
    mean. Differentiable; maximizing it spreads the actions of dissimilar latents apart. Lies in
    ``[0, 2 * weight]``.
    """
    mean1 = actor(torch.cat([s, z1], dim=-1))
    mean2 = actor(torch.cat([s, z2], dim=-1))
    cos = F.cosine_similarity(mean1, mean2, dim=-1, eps=1e-8)
    dissimilarity = 0.5 * (1.0 - (z1 * z2).sum(-1))
    return weight * ((1.0 - cos) * dissimilarity).mean()
