from typing import Mapping, Optional, Sequence, Union

import numpy as np
import torch

from SkillRL.align.presets import AlignConfig
from SkillRL.align.stats import FeatureStats, TapStats
from SkillRL.misc.errors import InsufficientDataError, ShapeError
from SkillRL.rl.critic import PartwiseCritic, TAP_NAMES
from SkillRL.skill.features import critic_features


def mahalanobis(f: np.ndarray, stats: TapStats) -> Union[float, np.ndarray]:
    """
    ``sqrt((f - mu)^T (cov + eps I)^-1 (f - mu))`` for one feature vector or a batch (..., dim).
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] != stats.dim:
        raise ShapeError(f"feature of width {f.shape[-1]} against statistics of width {stats.dim}")
    diff = f - stats.mean
    sq = np.einsum("...i,ij,...j->...", diff, stats.inv, diff)
    d = np.sqrt(np.maximum(sq, 0.0))
    return float(d) if d.ndim == 0 else d


def tap_distances(window_taps: Mapping[str, np.ndarray], stats: FeatureStats, names: Sequence[str]) -> dict:
    """Distance of the window-mean feature of each tap in `names`; windows are the axis before the last. """
    out = {}
    for name in names:
        if name not in stats:
            raise InsufficientDataError(f"no feature statistics for weighted tap {name!r}")
        mean = np.asarray(window_taps[name], dtype=np.float64).mean(axis=-2)
        out[name] = mahalanobis(mean, stats[name])
    return out


def feats_reward(
    window_taps: Mapping[str, np.ndarray],
    stats: FeatureStats,
    config: AlignConfig=AlignConfig(),
) -> Union[float, np.ndarray]:
    """
    The alignment penalty of the last steps' features.

    Every weighted tap's features of shape (W, dim) (or (B, W, dim) for a batch) are averaged
    over the window, the Mahalanobis distance `d` to the walking statistics is taken and the tap
    contributes ``-w * d`` when ``d >= threshold``. The sum is scaled by `config.reward_weight`.
    The result is never positive.
    """
    names = config.weighted_taps
    distances = tap_distances(window_taps, stats, names)
    total = 0.0
    for name in names:
        i = TAP_NAMES.index(name)
        d = distances[name]
        total = total - config.weights[i] * d * (np.asarray(d) >= config.thresholds[i])
    total = config.reward_weight * np.asarray(total, dtype=np.float64)
    return float(total) if total.ndim == 0 else total


class FeatureAligner:
    """
    Reward hook that keeps the features of tuned motion close to the walking features.

    The critic is the frozen walking-only critic the statistics were fitted with; it is never
    updated by the trainer that owns this hook.

    Parameters
    ----------
    critic :  The walking-only critic.
    stats :  Walking statistics of the weighted taps.
    config :  Tap weights, thresholds and global weight.
    """
    def __init__(self, critic: PartwiseCritic, stats: FeatureStats, config: AlignConfig):
        self.critic = critic.eval()
        for p in self.critic.parameters():
            p.requires_grad_(False)
        self.stats = stats
        self.config = config
        self.window = stats.window
        missing = [name for name in config.weighted_taps if name not in stats]
        if missing:
            raise InsufficientDataError(f"no feature statistics for weighted taps {missing}")

    def reward(self, windows: Sequence[np.ndarray], z: Optional[np.ndarray]=None) -> np.ndarray:
        """
        Alignment reward of every environment.

        Parameters
        ----------
        windows :  Per environment, the (w, obs_dim) observations of the last ``w <= window`` steps.
        z :  (B, latent_dim) latents the frozen critic is conditioned on.
        """
        rewards = np.zeros(len(windows), dtype=np.float64)
        for idx, obs in enumerate(windows):
            obs_t = torch.as_tensor(np.asarray(obs)[-self.window:], dtype=torch.float32)
            z_t = torch.as_tensor(z[idx], dtype=torch.float32) if z is not None and self.critic.latent_dim > 0 else None
            taps, _ = critic_features(self.critic, obs_t, z_t)
            window_taps = {name: taps[name].numpy() for name in self.config.weighted_taps}
            rewards[idx] = feats_reward(window_taps, self.stats, self.config)
        return rewards
