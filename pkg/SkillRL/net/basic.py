from typing import List, Optional, Type

import math
import torch
import torch.nn as nn
import torch.nn.functional as F

ModuleType = Type[nn.Module]


def miniblock(
    input_dim: int,
    output_dim: int = 0,
    activation: Optional[ModuleType] = None,
    linear_layer: ModuleType = nn.Linear,
    *args,
    **kwargs
) -> List[nn.Module]:
    """
    Construct a miniblock with given input and output: a linear layer optionally followed by
    an activation.

    Parameters
    ----------
    input_dim :  Number of input features.
    output_dim :  Number of output features. Default is 0.
    activation :  Module class to use for activation. No activation when None.
    linear_layer :  Module to use for linear layer. Default is nn.Linear.

    Returns
    -------
    List of modules for miniblock.
    """
    layers: List[nn.Module] = [linear_layer(input_dim, output_dim, *args, **kwargs)]
    if activation is not None:
        layers += [activation()]
    return layers


def orthogonal_init_(layer: nn.Linear, gain: float=math.sqrt(2), scale: float=1.0) -> nn.Linear:
    """Orthogonal weights scaled by `gain * scale`, zero bias. """
    nn.init.orthogonal_(layer.weight, gain=gain)
    with torch.no_grad():
        layer.weight.mul_(scale)
    if layer.bias is not None:
        nn.init.zeros_(layer.bias)
    return layer


class UnitNorm(nn.Module):
    """Project the last axis onto the unit sphere. """
    def __init__(self, eps: float=1e-12):
        super().__init__()
        self.eps = eps

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.normalize(x, dim=-1, eps=self.eps)


HEADS = {
    "identity": nn.Identity,
    "sigmoid": nn.Sigmoid,
    "unit": UnitNorm,
}


def make_head(name: str) -> nn.Module:
    if name not in HEADS:
        raise ValueError(f"unknown head {name!r}, expected one of {list(HEADS)}")
    return HEADS[name]()
