from typing import Dict, Optional, Sequence, Tuple

from collections import OrderedDict

import torch
import torch.nn as nn

from SkillRL.net import MLP, miniblock, orthogonal_init_

TAP_NAMES = ("f0_torso", "f0_arm_upper", "f0_arm_lower", "f0_front_leg", "f0_rear_leg", "f1", "f2", "f3")


class Critic(nn.Module):
    """
    A vanilla critic module used as V(s) or V(s, z).

    Parameters
    ----------
    input_dim :  The dimensions of input, including the latent when one is passed.
    hidden_dims :  Hidden layer sizes.
    """
    def __init__(
        self,
        input_dim: int,
        hidden_dims: Sequence[int] = [],
    ) -> None:
        super().__init__()
        self.critic_type = "Critic"
        self.input_dim = input_dim
        self.output_layer = MLP(input_dim=input_dim, output_dim=1, hidden_dims=hidden_dims, output_scale=1.0)

    def forward(self, obs: torch.Tensor, latent: Optional[torch.Tensor]=None, *args, **kwargs) -> torch.Tensor:
        """Compute V(s), or V(s, z) when `latent` is given.

        Returns
        -------
        torch.Tensor :  Values of shape (B, ).
        """
        if latent is not None:
            obs = torch.cat([obs, latent], dim=-1)
        return self.output_layer(obs).squeeze(-1)


class PartwiseCritic(nn.Module):
    """
    A value network whose first layer sees each body part on its own.

    The observation is split by `part_slices`; every part passes through its own linear + ReLU
    layer (taps ``f0_<part>``). The part features are concatenated with the latent and fed to a
    shared trunk whose hidden activations are the taps ``f1``, ``f2``, ``f3``, followed by a
    scalar value head. All taps are post-ReLU activations.

    Parameters
    ----------
    part_slices :  The five observation slices, in `TAP_NAMES` order.
    latent_dim :  Dimension of the conditioning latent, 0 for an unconditioned critic.
    part_dim :  Width of every per-part layer.
    hidden_dims :  Widths of the trunk layers producing f1, f2 and f3.
    """
    def __init__(
        self,
        part_slices: Sequence[slice],
        latent_dim: int,
        part_dim: int,
        hidden_dims: Sequence[int],
    ) -> None:
        super().__init__()
        if len(part_slices) != 5 or len(hidden_dims) != 3:
            raise ValueError("expected five part slices and three trunk layers")
        self.critic_type = "PartwiseCritic"
        self.part_slices = list(part_slices)
        self.latent_dim = latent_dim
        self.part_dim = part_dim
        self.hidden_dims = list(hidden_dims)
        self.input_dim = max(s.stop for s in self.part_slices)
        parts = []
        for s in self.part_slices:
            block = miniblock(s.stop - s.start, part_dim, nn.ReLU)
            orthogonal_init_(block[0])
            parts.append(nn.Sequential(*block))
        self.parts = nn.ModuleList(parts)
        self.trunk = MLP(input_dim=5*part_dim + latent_dim, output_dim=0, hidden_dims=hidden_dims)
        self.value_head = orthogonal_init_(nn.Linear(hidden_dims[-1], 1), gain=1.0)

    @property
    def tap_dims(self) -> Dict[str, int]:
        dims = OrderedDict((name, self.part_dim) for name in TAP_NAMES[:5])
        dims.update(zip(TAP_NAMES[5:], self.hidden_dims))
        return dims

    def features(self, obs: torch.Tensor, latent: Optional[torch.Tensor]=None) -> Tuple["OrderedDict[str, torch.Tensor]", torch.Tensor]:
        """
        Forward pass exposing every tap.

        Returns
        -------
        (taps, value) :  An ordered map from tap name to (B, dim) activations, and the (B, ) values.
        """
        if obs.shape[-1] != self.input_dim:
            raise ValueError(f"expected observations of width {self.input_dim}, got {obs.shape[-1]}")
        taps = OrderedDict()
        for name, s, part in zip(TAP_NAMES[:5], self.part_slices, self.parts):
            taps[name] = part(obs[..., s])
        x = torch.cat(list(taps.values()), dim=-1)
        if self.latent_dim > 0:
            if latent is None:
                raise ValueError("this critic is conditioned on a latent")
            x = torch.cat([x, latent], dim=-1)
        hidden = self.trunk.activations(x)
        taps.update(zip(TAP_NAMES[5:], hidden))
        return taps, self.value_head(hidden[-1]).squeeze(-1)

    def forward(self, obs: torch.Tensor, latent: Optional[torch.Tensor]=None, *args, **kwargs) -> torch.Tensor:
        return self.features(obs, latent)[1]
