"""
Walking-feature statistics of the critic taps.

Features are averaged over sliding windows of `window` consecutive steps before the
statistics are taken; every tap keeps its mean, covariance and the regularized inverse
``(cov + epsilon * I)^-1``, computed once when fitting.
"""

from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from SkillRL.misc.errors import InsufficientDataError, ShapeError
from SkillRL.net.checkpoint import load_checkpoint, save_checkpoint
from SkillRL.rl.critic import PartwiseCritic, TAP_NAMES
from SkillRL.skill.features import sequence_taps


@dataclass(frozen=True)
class TapStats:
    mean: np.ndarray
    cov: np.ndarray
    inv: np.ndarray
    count: int

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


@dataclass(frozen=True)
class FeatureStats:
    taps: "OrderedDict[str, TapStats]"
    epsilon: float = 1e-5
    window: int = 10

    def __getitem__(self, name: str) -> TapStats:
        return self.taps[name]

    def __contains__(self, name: str) -> bool:
        return name in self.taps

    def tensors(self) -> "OrderedDict[str, np.ndarray]":
        """The named tensor table ``mu/i``, ``cov/i``, ``inv/i`` with `i` the tap index in `TAP_NAMES`. """
        table = OrderedDict()
        for name, tap in self.taps.items():
            i = TAP_NAMES.index(name)
            table[f"mu/{i}"] = tap.mean
            table[f"cov/{i}"] = tap.cov
            table[f"inv/{i}"] = tap.inv
        return table


def window_means(features: np.ndarray, window: int) -> np.ndarray:
    """Means over every run of `window` consecutive rows of a (T, dim) array; (T - window + 1, dim). """
    if features.shape[0] < window:
        return np.zeros((0, ) + features.shape[1:], dtype=np.float64)
    csum = np.cumsum(np.concatenate([np.zeros((1, ) + features.shape[1:]), features], axis=0), axis=0)
    return (csum[window:] - csum[:-window]) / window


def tap_stats(samples: np.ndarray, epsilon: float=1e-5) -> TapStats:
    """
    Mean, population covariance and regularized inverse of (N, dim) samples. Needs at least
    ``dim + 1`` samples.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise ShapeError(f"expected (N, dim) samples, got shape {samples.shape}")
    n, dim = samples.shape
    if n < dim + 1:
        raise InsufficientDataError(f"{n} samples for a {dim}-dim tap, at least {dim + 1} required")
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / n
    cov = 0.5 * (cov + cov.T)
    inv = scipy.linalg.inv(cov + epsilon * np.eye(dim))
    return TapStats(mean=mean, cov=cov, inv=0.5 * (inv + inv.T), count=n)


def fit_tap_samples(
    samples: Mapping[str, np.ndarray],
    epsilon: float=1e-5,
    window: int=10,
) -> FeatureStats:
    """Statistics of already windowed samples, one (N, dim) array per tap. """
    taps = OrderedDict((name, tap_stats(samples[name], epsilon)) for name in TAP_NAMES if name in samples)
    return FeatureStats(taps=taps, epsilon=epsilon, window=window)


def fit_feature_stats(
    critic: PartwiseCritic,
    sequences: Iterable[Tuple[np.ndarray, np.ndarray]],
    taps: Sequence[str]=TAP_NAMES,
    window: int=10,
    epsilon: float=1e-5,
) -> FeatureStats:
    """
    Fit the statistics of `taps` over walking sequences.

    Parameters
    ----------
    critic :  The walking-only critic; it is only read.
    sequences :  ``(obs, z)`` pairs of arrays, one per walking sequence, e.g. from `dataset_sequences`.
    taps :  The taps to fit.
    window :  Number of steps averaged into one sample.
    epsilon :  Regularizer added to the covariance diagonal before inversion.
    """
    pooled: Dict[str, list] = {name: [] for name in taps}
    for obs, z in sequences:
        per_step = sequence_taps(critic, obs, z)
        for name in taps:
            pooled[name].append(window_means(per_step[name], window))
    samples = {}
    for name in taps:
        dim = critic.tap_dims[name]
        samples[name] = np.concatenate(pooled[name], axis=0) if pooled[name] else np.zeros((0, dim))
    return fit_tap_samples(samples, epsilon, window)


def save_feature_stats(stats: FeatureStats, path: str, meta: Optional[Dict[str, Any]]=None) -> str:
    doc = dict(meta or {})
    doc.update({
        "kind": "feature_stats",
        "epsilon": float(stats.epsilon),
        "window": int(stats.window),
        "counts": {name: int(tap.count) for name, tap in stats.taps.items()},
    })
    return save_checkpoint(path, stats.tensors(), doc)


def load_feature_stats(path: str, config_hash: Optional[str]=None, force: bool=False) -> FeatureStats:
    tensors, meta = load_checkpoint(path, config_hash, force)
    counts = meta.get("counts") or {}
    taps = OrderedDict()
    for i, name in enumerate(TAP_NAMES):
        if f"mu/{i}" not in tensors:
            continue
        taps[name] = TapStats(
            mean=tensors[f"mu/{i}"].astype(np.float64),
            cov=tensors[f"cov/{i}"].astype(np.float64),
            inv=tensors[f"inv/{i}"].astype(np.float64),
            count=int(counts.get(name, 0)),
        )
    return FeatureStats(taps=taps, epsilon=float(meta.get("epsilon", 1e-5)), window=int(meta.get("window", 10)))
