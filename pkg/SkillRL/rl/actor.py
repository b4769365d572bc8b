from typing import Dict, Optional, Sequence, Tuple

import torch
import torch.nn as nn

from SkillRL.math.distributions import FixedStdNormal
from SkillRL.net import MLP


class GaussianActor(nn.Module):
    """
    Gaussian Actor with a constant standard deviation: the network only predicts the mean.

    Parameters
    ----------
    input_dim :  The dimension of the actor input (observation, plus latent for the skill policy).
    output_dim :  The dimension of actor's output.
    std :  The fixed action standard deviation.
    hidden_dims :  Hidden layer sizes of the mean network.
    """
    def __init__(
        self,
        input_dim: int,
        output_dim: int,
        std: float,
        hidden_dims: Sequence[int] = [],
    ) -> None:
        super().__init__()
        if not std > 0:
            raise ValueError(f"action std must be positive, got {std}")
        self.actor_type = "GaussianActor"
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.std = float(std)
        self.output_layer = MLP(input_dim=input_dim, output_dim=output_dim, hidden_dims=hidden_dims)

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        """The action mean. """
        return self.output_layer(input)

    def dist(self, input: torch.Tensor) -> FixedStdNormal:
        return FixedStdNormal(self(input), self.std)

    def sample(
        self,
        obs: torch.Tensor,
        deterministic: bool=False,
        generator: Optional[torch.Generator]=None,
    ) -> Tuple[torch.Tensor, torch.Tensor, Dict]:
        """Sampling procedure.

        Parameters
        ----------
        obs :  The actor input, should be torch.Tensor.
        deterministic :  Whether to return the mean instead of a sample.
        generator :  Source of the sampling noise.

        Returns
        -------
        (torch.Tensor, torch.Tensor, Dict) :  The sampled action, logprob and info dict.
        """
        mean = self(obs)
        if deterministic:
            action = mean
        else:
            action = mean + self.std * torch.randn(mean.shape, generator=generator, dtype=mean.dtype)
        logprob = FixedStdNormal(mean, self.std).log_prob(action)
        return action, logprob, {"mean": mean}

    def evaluate(self, obs: torch.Tensor, action: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """Log-prob and entropy of `action` under the current policy. """
        dist = self.dist(obs)
        return dist.log_prob(action), dist.entropy()
