"""
Clipped-surrogate PPO with GAE(lambda) advantages and a fixed-std Gaussian policy.
"""

from typing import Any, Callable, Dict, Optional, Tuple

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from SkillRL.logger import logger
from SkillRL.misc.errors import ShapeError
from SkillRL.net.optim import SkillAdam


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip_ratio: float = 0.2
    epochs: int = 5
    minibatch: int = 1024
    max_grad_norm: float = 1.0
    value_coef: float = 1.0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0 <= self.lam <= 1:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if self.epochs < 1 or self.minibatch < 1:
            raise ValueError("epochs and minibatch must be positive")

    @classmethod
    def from_config(cls, section: Any) -> "PpoConfig":
        """Build from a `skill` or `task` config section. """
        return cls(
            gamma=section["gamma"], lam=section["lam"], clip_ratio=section["clip_ratio"],
            epochs=int(section["epochs"]), minibatch=int(section["policy_minibatch"]),
            max_grad_norm=section["max_grad_norm"],
        )


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    lam: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generalized advantage estimation in float64.

    ``delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t`` and
    ``A_t = delta_t + gamma * lam * (1 - done_t) * A_{t+1}``; returns are ``A + V``.

    Parameters
    ----------
    rewards :  (T, ...) rewards.
    values :  (T + 1, ...) values, the last row being the bootstrap value after step T - 1.
    dones :  (T, ...) episode-end flags of each step.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    T = rewards.shape[0]
    if values.shape != (T + 1, ) + rewards.shape[1:] or dones.shape != rewards.shape:
        raise ShapeError(
            f"expected values of shape {(T + 1, ) + rewards.shape[1:]} and dones of shape {rewards.shape}, "
            f"got {values.shape} and {dones.shape}"
        )
    advantages = np.zeros_like(rewards)
    last = np.zeros_like(rewards[0])
    for t in reversed(range(T)):
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t+1] * nonterminal - values[t]
        last = delta + gamma * lam * nonterminal * last
        advantages[t] = last
    return advantages, advantages + values[:-1]


def normalize_advantages(adv: torch.Tensor, eps: float=1e-8) -> torch.Tensor:
    if adv.numel() < 2:
        return adv - adv.mean()
    return (adv - adv.mean()) / (adv.std() + eps)


def ppo_update(
    actor: nn.Module,
    critic: nn.Module,
    batch: Dict[str, torch.Tensor],
    config: PpoConfig,
    actor_optim: SkillAdam,
    critic_optim: SkillAdam,
    generator: torch.Generator,
    aux_loss: Optional[Callable[[Dict[str, torch.Tensor]], torch.Tensor]]=None,
) -> Dict[str, float]:
    """
    Run `config.epochs` passes of minibatch updates over a flattened rollout.

    `batch` must hold `actor_in` (actor inputs), `obs` (critic inputs), `action`, `logp`,
    `advantage` and `return`; `latent`, when present, conditions the critic. Advantages are
    normalized over the whole batch first. `aux_loss` adds a term to the policy loss.

    Returns
    -------
    Averaged `policy_loss`, `value_loss`, `clip_frac`, `approx_kl`, `entropy`, and `aborted`
    which is 1 when a non-finite loss stopped the update.
    """
    n = batch["action"].shape[0]
    advantages = normalize_advantages(batch["advantage"])
    latent = batch.get("latent")
    stats = {"policy_loss": [], "value_loss": [], "clip_frac": [], "approx_kl": [], "entropy": []}
    aborted = 0
    for _ in range(config.epochs):
        perm = torch.randperm(n, generator=generator)
        for start in range(0, n, config.minibatch):
            idx = perm[start:start + config.minibatch]
            mb = {key: value[idx] for key, value in batch.items()}
            logp, entropy = actor.evaluate(mb["actor_in"], mb["action"])
            ratio = torch.exp(logp - mb["logp"])
            adv = advantages[idx]
            surr1 = ratio * adv
            surr2 = torch.clamp(ratio, 1 - config.clip_ratio, 1 + config.clip_ratio) * adv
            policy_loss = -torch.min(surr1, surr2).mean()
            if aux_loss is not None:
                policy_loss = policy_loss + aux_loss(mb)
            values = critic(mb["obs"], mb["latent"] if latent is not None else None)
            value_loss = ((values - mb["return"])**2).mean()

            if not (torch.isfinite(policy_loss) and torch.isfinite(value_loss)):
                logger.warning(f"non-finite PPO loss (policy {policy_loss.item()}, value {value_loss.item()}), update aborted")
                aborted = 1
                break
            actor_optim.zero_grad()
            critic_optim.zero_grad()
            (policy_loss + config.value_coef * value_loss).backward()
            nn.utils.clip_grad_norm_(actor.parameters(), config.max_grad_norm)
            nn.utils.clip_grad_norm_(critic.parameters(), config.max_grad_norm)
            actor_optim.step()
            critic_optim.step()

            with torch.no_grad():
                stats["policy_loss"].append(policy_loss.item())
                stats["value_loss"].append(value_loss.item())
                stats["clip_frac"].append(((ratio - 1).abs() > config.clip_ratio).float().mean().item())
                stats["approx_kl"].append((mb["logp"] - logp).mean().item())
                stats["entropy"].append(entropy.mean().item())
        if aborted:
            break
    result = {key: float(np.mean(values)) if values else float("nan") for key, values in stats.items()}
    result["aborted"] = aborted
    result["skipped_steps"] = actor_optim.skipped + critic_optim.skipped
    return result
