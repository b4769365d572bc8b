from typing import Dict, Optional, Sequence

import numpy as np
import torch

from .base import SimpleReplay
from SkillRL.misc.errors import ShapeError, SimulationError
from SkillRL.rl.ppo import compute_gae


class RolloutBuffer(SimpleReplay):
    """
    On-policy storage for `horizon` steps of `num_envs` environments. Every field has shape
    ``(horizon, num_envs, *shape)``. The fields `reward`, `value` and `done` are always present;
    `value` holds one extra row for the bootstrap value after the last step.

    Parameters
    ----------
    horizon :  Steps per environment between updates.
    num_envs :  Number of environments stepped in lockstep.
    field_specs :  Additional per-step fields, e.g. observations, latents, actions, log-probs.
    """
    def __init__(self, horizon: int, num_envs: int, field_specs: Optional[Dict]=None):
        self.horizon = int(horizon)
        self.num_envs = int(num_envs)
        specs = {
            "reward": {"shape": [], "dtype": np.float64},
            "done": {"shape": [], "dtype": np.float64},
        }
        specs.update(field_specs or {})
        super().__init__(horizon, specs)
        self.reset()

    def reset(self):
        self._size = 0
        for key, spec in self.field_specs.items():
            self.fields[key] = np.zeros([self.horizon, self.num_envs] + list(spec["shape"]), dtype=spec["dtype"])
        self.fields["value"] = np.zeros([self.horizon + 1, self.num_envs], dtype=np.float64)
        self.advantages: Optional[np.ndarray] = None
        self.returns: Optional[np.ndarray] = None

    def add_fields(self, new_field_specs: Optional[Dict]=None):
        for key, spec in (new_field_specs or {}).items():
            self.field_specs[key] = spec

    @property
    def full(self) -> bool:
        return self._size == self.horizon

    def add_sample(self, step: Dict[str, np.ndarray]):
        """Store one step of every environment. `step` must carry every field plus `value`. """
        if self.full:
            raise ShapeError("rollout buffer is full")
        t = self._size
        for key in list(self.field_specs.keys()) + ["value"]:
            if key not in step:
                raise ShapeError(f"step is missing field {key!r}")
            data = np.asarray(step[key])
            if data.shape[0] != self.num_envs:
                raise ShapeError(f"field {key!r} has leading size {data.shape[0]}, expected {self.num_envs}")
            self.fields[key][t] = data
        self._size += 1

    def finish(self, last_value: np.ndarray, gamma: float, lam: float):
        """Store the bootstrap value and compute advantages and returns. """
        if not self.full:
            raise ShapeError(f"rollout holds {self._size} of {self.horizon} steps")
        self.fields["value"][self.horizon] = last_value
        self.advantages, self.returns = compute_gae(
            self.fields["reward"], self.fields["value"], self.fields["done"], gamma, lam
        )
        if not (np.all(np.isfinite(self.advantages)) and np.all(np.isfinite(self.returns))):
            raise SimulationError("non-finite rewards or values in the rollout")

    def flatten(self, keys: Optional[Sequence[str]]=None) -> Dict[str, torch.Tensor]:
        """Merge the time and environment axes and convert to float32 tensors. """
        if self.advantages is None:
            raise ShapeError("call finish() before flatten()")
        keys = keys or list(self.field_specs.keys())
        n = self.horizon * self.num_envs
        batch = {}
        for key in keys:
            arr = self.fields[key]
            batch[key] = torch.as_tensor(arr.reshape([n] + list(arr.shape[2:])), dtype=torch.float32)
        batch["value"] = torch.as_tensor(self.fields["value"][:-1].reshape(n), dtype=torch.float32)
        batch["advantage"] = torch.as_tensor(self.advantages.reshape(n), dtype=torch.float32)
        batch["return"] = torch.as_tensor(self.returns.reshape(n), dtype=torch.float32)
        return batch
