from typing import Tuple

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from SkillRL.misc.errors import InsufficientDataError, ShapeError


@dataclass(frozen=True)
class FeatureSet:
    """
    Samples of one critic tap on one dataset.

    Parameters
    ----------
    tap :  Name of the tap.
    samples :  (N, dim) feature matrix.
    source :  Tag of the dataset the samples come from.
    """
    tap: str
    samples: np.ndarray
    source: str

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ShapeError(f"feature samples of {self.tap}/{self.source} must be 2-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"non-finite features in {self.tap}/{self.source}")
        object.__setattr__(self, "samples", samples)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def statistics(self) -> Tuple[np.ndarray, np.ndarray]:
        n = self.samples.shape[0]
        if n < self.dim + 1:
            raise InsufficientDataError(f"{self.tap}/{self.source}: FID needs {self.dim + 1} samples, got {n}")
        return self.samples.mean(axis=0), np.atleast_2d(np.cov(self.samples, rowvar=False))


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = linalg.eigh(cov)
    w = np.maximum(w, 0.0)
    return (v * np.sqrt(w)) @ v.T


def frechet_distance(mu_a: np.ndarray, cov_a: np.ndarray, mu_b: np.ndarray, cov_b: np.ndarray) -> float:
    """
    ``||mu_a - mu_b||^2 + Tr(cov_a + cov_b - 2 (cov_a cov_b)^(1/2))``.

    The trace of the product root is taken from the eigenvalues of the symmetric matrix
    ``cov_a^(1/2) cov_b cov_a^(1/2)``, which has the same spectrum; round-off negative
    eigenvalues count as 0.
    """
    mu_a, mu_b = np.atleast_1d(mu_a), np.atleast_1d(mu_b)
    cov_a, cov_b = np.atleast_2d(cov_a), np.atleast_2d(cov_b)
    if mu_a.shape != mu_b.shape or cov_a.shape != cov_b.shape or cov_a.shape[0] != mu_a.shape[0]:
        raise ShapeError(f"feature dimensions differ: {mu_a.shape} / {cov_a.shape} vs {mu_b.shape} / {cov_b.shape}")
    root_a = _psd_sqrt(cov_a)
    middle = root_a @ cov_b @ root_a
    w = linalg.eigvalsh(0.5 * (middle + middle.T))
    w = np.maximum(w, 0.0)
    diff = mu_a - mu_b
    value = diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.sqrt(w).sum()
    return float(max(value, 0.0))


def fid(a: FeatureSet, b: FeatureSet) -> float:
    if a.dim != b.dim:
        raise ShapeError(f"cannot compare {a.tap} ({a.dim}-D) with {b.tap} ({b.dim}-D)")
    return frechet_distance(*a.statistics(), *b.statistics())
