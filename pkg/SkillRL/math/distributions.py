from typing import Union

from torch.distributions import Normal

import torch
import math
import numpy as np


def gaussian_log_prob(action: np.ndarray, mean: np.ndarray, std: float) -> np.ndarray:
    """
    Log-density of a diagonal Gaussian with a shared fixed std, summed over the last axis:
    ``-sum((a - mu)^2 / (2 std^2)) - k * log(std * sqrt(2 pi))``.
    """
    action = np.asarray(action, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    k = action.shape[-1]
    return -np.sum((action - mean)**2, axis=-1) / (2*std*std) - k * math.log(std * math.sqrt(2*math.pi))


class FixedStdNormal(Normal):
    """
    A diagonal Gaussian whose scale is a constant and not a function of the input. Log-probs and
    entropies are summed over the action dimension.
    """
    def __init__(self, loc: torch.Tensor, std: Union[float, torch.Tensor]):
        if not isinstance(std, torch.Tensor):
            std = torch.full_like(loc, float(std))
        super().__init__(loc, std)

    def log_prob(self, value: torch.Tensor) -> torch.Tensor:
        return super().log_prob(value).sum(-1)

    def entropy(self) -> torch.Tensor:
        return super().entropy().sum(-1)
