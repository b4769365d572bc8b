from typing import Dict, Optional, Sequence, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from SkillRL.logger import logger
from SkillRL.net import MLP, SkillAdam


class DiscEnc(nn.Module):
    """
    Discriminator and skill encoder over state transitions ``(s_t, s_{t+1})`` sharing one trunk.

    The discriminator head outputs the probability that a transition comes from the reference
    data; the encoder head outputs the unit mean direction ``mu_q`` of the latent that produced
    it.

    Parameters
    ----------
    obs_dim :  Width of one observation.
    latent_dim :  Dimension of the latent space, 0 for a discriminator without encoder.
    hidden_dims :  Hidden layer sizes of the shared trunk.
    """
    def __init__(self, obs_dim: int, latent_dim: int, hidden_dims: Sequence[int]) -> None:
        super().__init__()
        if not hidden_dims:
            raise ValueError("the shared trunk needs at least one hidden layer")
        self.obs_dim = obs_dim
        self.latent_dim = latent_dim
        self.trunk = MLP(input_dim=2*obs_dim, output_dim=0, hidden_dims=hidden_dims)
        self.disc_head = MLP(input_dim=hidden_dims[-1], output_dim=1)
        self.enc_head = MLP(input_dim=hidden_dims[-1], output_dim=latent_dim, head="unit", output_scale=1.0) \
            if latent_dim > 0 else None

    def trunk_features(self, s: torch.Tensor, s_next: torch.Tensor) -> torch.Tensor:
        return self.trunk(torch.cat([s, s_next], dim=-1))

    def logits(self, s: torch.Tensor, s_next: torch.Tensor) -> torch.Tensor:
        return self.disc_head(self.trunk_features(s, s_next)).squeeze(-1)

    def forward(self, s: torch.Tensor, s_next: torch.Tensor) -> Tuple[torch.Tensor, Optional[torch.Tensor]]:
        """Returns the discriminator probability (B, ) and the encoder mean (B, latent_dim). """
        h = self.trunk_features(s, s_next)
        d = torch.sigmoid(self.disc_head(h).squeeze(-1))
        mu = self.enc_head(h) if self.enc_head is not None else None
        return d, mu

    def discriminate(self, s: torch.Tensor, s_next: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.logits(s, s_next))

    def encode(self, s: torch.Tensor, s_next: torch.Tensor) -> torch.Tensor:
        if self.enc_head is None:
            raise ValueError("this discriminator has no encoder head")
        return self.enc_head(self.trunk_features(s, s_next))

    def disc_parameters(self):
        return list(self.trunk.parameters()) + list(self.disc_head.parameters())

    def enc_parameters(self):
        return list(self.enc_head.parameters()) if self.enc_head is not None else []


def make_disc_optimizer(
    disc_enc: DiscEnc,
    lr: float,
    disc_weight_decay: float,
    enc_weight_decay: float=0.0,
    name: str="disc_enc",
) -> SkillAdam:
    """One optimizer, with the trunk and discriminator head decayed separately from the encoder head. """
    groups = [{"params": disc_enc.disc_parameters(), "weight_decay": disc_weight_decay}]
    if disc_enc.enc_head is not None:
        groups.append({"params": disc_enc.enc_parameters(), "weight_decay": enc_weight_decay})
    return SkillAdam(groups, lr=lr, name=name)


def gradient_penalty(disc_enc: DiscEnc, s: torch.Tensor, s_next: torch.Tensor) -> torch.Tensor:
    """``E[||d logit / d (s, s_next)||^2]`` over the batch. """
    s = s.detach().requires_grad_(True)
    s_next = s_next.detach().requires_grad_(True)
    logits = disc_enc.logits(s, s_next)
    grad_s, grad_next = torch.autograd.grad(logits.sum(), [s, s_next], create_graph=True)
    return (grad_s.pow(2).sum(-1) + grad_next.pow(2).sum(-1)).mean()


def disc_update(
    disc_enc: DiscEnc,
    optimizer: SkillAdam,
    real_s: torch.Tensor,
    real_next: torch.Tensor,
    policy_s: torch.Tensor,
    policy_next: torch.Tensor,
    z: Optional[torch.Tensor]=None,
    grad_penalty: float=5.0,
) -> Dict[str, float]:
    """
    One gradient step of the discriminator and encoder.

    The discriminator minimizes binary cross-entropy with reference transitions labelled 1 and
    policy transitions labelled 0, plus `grad_penalty` times the squared input gradient norm on
    reference transitions. When `z` is given the encoder maximizes ``mu_q(s, s') . z`` on the
    policy transitions generated under `z`. A non-finite loss skips the step with a warning.
    """
    if real_s.shape[0] == 0 or policy_s.shape[0] == 0:
        raise ValueError("discriminator batches must be non-empty")
    real_logits = disc_enc.logits(real_s, real_next)
    h_policy = disc_enc.trunk_features(policy_s, policy_next)
    policy_logits = disc_enc.disc_head(h_policy).squeeze(-1)
    bce_real = F.binary_cross_entropy_with_logits(real_logits, torch.ones_like(real_logits))
    bce_policy = F.binary_cross_entropy_with_logits(policy_logits, torch.zeros_like(policy_logits))
    disc_loss = 0.5 * (bce_real + bce_policy)
    gp = gradient_penalty(disc_enc, real_s, real_next) if grad_penalty > 0 else torch.zeros(())
    loss = disc_loss + grad_penalty * gp
    enc_loss = torch.zeros(())
    if z is not None:
        mu = disc_enc.enc_head(h_policy)
        enc_loss = -(mu * z).sum(-1).mean()
        loss = loss + enc_loss

    stats = {
        "disc_loss": disc_loss.item(),
        "enc_loss": enc_loss.item(),
        "grad_penalty": gp.item(),
        "disc_skipped": 0,
    }
    if not torch.isfinite(loss):
        logger.warning(f"non-finite discriminator loss {loss.item()}, update skipped")
        stats["disc_skipped"] = 1
        return stats
    optimizer.zero_grad()
    loss.backward()
    if not optimizer.step():
        stats["disc_skipped"] = 1
    with torch.no_grad():
        d_real = torch.sigmoid(real_logits)
        d_policy = torch.sigmoid(policy_logits)
        stats["disc_real"] = d_real.mean().item()
        stats["disc_policy"] = d_policy.mean().item()
        stats["disc_acc"] = 0.5 * ((d_real > 0.5).float().mean() + (d_policy < 0.5).float().mean()).item()
    return stats
