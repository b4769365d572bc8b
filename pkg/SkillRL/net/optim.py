from typing import Iterable, Optional, Sequence

import torch

from SkillRL.logger import logger


class SkillAdam(torch.optim.AdamW):
    """
    Bias-corrected Adam with decoupled weight decay that refuses non-finite gradients: if any
    gradient holds a NaN or Inf the whole step is skipped, `skipped` is incremented and a
    warning is logged.

    Parameters
    ----------
    params :  Parameters or parameter groups to optimize.
    lr :  Learning rate, constant over training.
    weight_decay :  Decoupled weight decay, ``p <- p - lr * weight_decay * p`` on every step.
    name :  Label used in warnings.
    """
    def __init__(
        self,
        params: Iterable,
        lr: float=1e-4,
        betas=(0.9, 0.999),
        eps: float=1e-8,
        weight_decay: float=0.0,
        name: str="adam",
    ):
        super().__init__(params, lr=lr, betas=betas, eps=eps, weight_decay=weight_decay, foreach=False)
        self.name = name
        self.skipped = 0

    def grads_finite(self) -> bool:
        for group in self.param_groups:
            for p in group["params"]:
                if p.grad is not None and not torch.isfinite(p.grad).all():
                    return False
        return True

    @torch.no_grad()
    def step(self, closure=None) -> bool:
        """Apply one update. Returns False when the step was skipped. """
        if not self.grads_finite():
            self.skipped += 1
            logger.warning(f"[{self.name}] non-finite gradient, step skipped ({self.skipped} so far)")
            return False
        super().step(closure)
        return True


def adam_step(optimizer: SkillAdam, params: Sequence[torch.Tensor], grads: Sequence[Optional[torch.Tensor]]) -> bool:
    """Assign `grads` to `params` and take one optimizer step. """
    if len(params) != len(grads):
        raise ValueError(f"got {len(grads)} gradients for {len(params)} parameters")
    for p, g in zip(params, grads):
        if g is not None and g.shape != p.shape:
            raise ValueError(f"gradient shape {tuple(g.shape)} does not match parameter {tuple(p.shape)}")
        p.grad = None if g is None else g.detach().clone()
    return optimizer.step()
