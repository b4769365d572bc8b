from typing import Dict, Optional, Tuple

import copy

import numpy as np
import torch
import torch.nn as nn

from SkillRL.misc.errors import ShapeError


def forward_backward(
    net: nn.Module,
    inputs: torch.Tensor,
    upstream: torch.Tensor,
) -> Tuple[torch.Tensor, Dict[str, torch.Tensor], torch.Tensor]:
    """
    One forward pass followed by reverse-mode differentiation of ``sum(outputs * upstream)``.

    Returns
    -------
    (outputs, parameter gradients by name, input gradients). Nothing is accumulated into the
    `.grad` fields of `net`.
    """
    in_dim = getattr(net, "input_dim", None)
    if inputs.dim() != 2 or (in_dim is not None and inputs.shape[-1] != in_dim):
        raise ShapeError(f"expected inputs of shape (B, {in_dim}), got {tuple(inputs.shape)}")
    inputs = inputs.detach().clone().requires_grad_(True)
    outputs = net(inputs)
    if upstream.shape != outputs.shape:
        raise ShapeError(f"upstream gradient shape {tuple(upstream.shape)} does not match outputs {tuple(outputs.shape)}")
    names, params = zip(*[(n, p) for n, p in net.named_parameters() if p.requires_grad])
    grads = torch.autograd.grad(outputs, list(params) + [inputs], grad_outputs=upstream, allow_unused=True)
    param_grads = {
        name: (torch.zeros_like(p) if g is None else g) for name, p, g in zip(names, params, grads[:-1])
    }
    return outputs.detach(), param_grads, grads[-1]


def grad_check(
    net: nn.Module,
    seed: int,
    batch_size: int=4,
    h: float=1e-5,
    max_entries: Optional[int]=64,
) -> float:
    """
    Compare the reverse-mode gradients of a float64 copy of `net` with central finite
    differences of step `h`, on a random batch and a random upstream gradient drawn from `seed`.

    Parameters
    ----------
    max_entries :  Number of entries checked per parameter tensor, sampled without replacement.
                    None checks every entry.

    Returns
    -------
    The maximum relative error ``|a - n| / max(|a|, |n|, 1e-6)`` over the checked entries.
    """
    net = copy.deepcopy(net).double()
    gen = torch.Generator().manual_seed(int(seed))
    x = torch.randn(batch_size, net.input_dim, generator=gen, dtype=torch.float64)
    with torch.no_grad():
        out_shape = net(x).shape
    upstream = torch.randn(out_shape, generator=gen, dtype=torch.float64)
    _, analytic, _ = forward_backward(net, x, upstream)

    def objective() -> float:
        with torch.no_grad():
            return float((net(x) * upstream).sum())

    max_err = 0.0
    for name, param in net.named_parameters():
        flat = param.data.view(-1)
        grad = analytic[name].reshape(-1)
        n = flat.numel()
        if max_entries is None or max_entries >= n:
            entries = torch.arange(n)
        else:
            entries = torch.randperm(n, generator=gen)[:max_entries]
        for i in entries.tolist():
            orig = flat[i].item()
            flat[i] = orig + h
            plus = objective()
            flat[i] = orig - h
            minus = objective()
            flat[i] = orig
            numeric = (plus - minus) / (2*h)
            a = grad[i].item()
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
            max_err = max(max_err, err)
    return max_err


def count_parameters(net: nn.Module) -> int:
    return int(sum(np.prod(p.shape) for p in net.parameters()))
