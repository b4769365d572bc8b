from typing import List, Optional, Sequence, Type, Union

import torch
import torch.nn as nn

from SkillRL.net.basic import miniblock, orthogonal_init_, make_head

ModuleType = Type[nn.Module]


class MLP(nn.Module):
    """
    Creates an MLP module.

    Parameters
    ----------
    input_dim :  The number of input dimensions.
    output_dim :  The number of output dimensions. The value of 0 indicates a cascade model, and the
                output is activated; while other positive values indicate a standalone module
                whose last linear layer is followed by `head`. Default to 0.
    hidden_dims :  The list of numbers of hidden dimensions. Default is [].
    activation :  Module class used after every hidden layer. Default is nn.ReLU.
    head :  Output transform of a standalone module, one of `identity`, `sigmoid` or `unit`
                (projection onto the unit sphere). Default is `identity`.
    output_scale :  Multiplier applied to the orthogonal init of the output layer. Default is 0.01.
    dtype :  Parameter dtype. Default is torch.float32.
    """
    def __init__(
        self,
        input_dim: int,
        output_dim: int = 0,
        hidden_dims: Sequence[int] = [],
        activation: Optional[ModuleType] = nn.ReLU,
        head: str = "identity",
        output_scale: float = 0.01,
        dtype: torch.dtype = torch.float32,
    ) -> None:
        super().__init__()
        if isinstance(hidden_dims, int):
            hidden_dims = [hidden_dims]
        self.input_dim = input_dim
        self.hidden_dims = list(hidden_dims)
        self.head_name = head

        dims = [input_dim] + list(hidden_dims)
        model = []
        for in_dim, out_dim in zip(dims[:-1], dims[1:]):
            block = miniblock(in_dim, out_dim, activation, dtype=dtype)
            orthogonal_init_(block[0])
            model += block
        if output_dim > 0:
            model += [orthogonal_init_(nn.Linear(dims[-1], output_dim, dtype=dtype), gain=1.0, scale=output_scale)]
            model += [make_head(head)]
        self.output_dim = output_dim or dims[-1]

        self.model = nn.Sequential(*model)

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        if input.shape[-1] != self.input_dim:
            raise ValueError(f"expected input width {self.input_dim}, got {input.shape[-1]}")
        return self.model(input)

    def activations(self, input: torch.Tensor) -> List[torch.Tensor]:
        """Outputs of every hidden activation, in order. """
        outs = []
        x = input
        for module in self.model:
            if len(outs) == len(self.hidden_dims):
                break
            x = module(x)
            if not isinstance(module, nn.Linear):
                outs.append(x)
        return outs
