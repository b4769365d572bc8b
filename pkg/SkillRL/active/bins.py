"""
Task discretization by table height and per-bin performance scoring.
"""

from typing import Any, List, Optional, Sequence, Tuple

from dataclasses import dataclass

import numpy as np
import pandas as pd

from SkillRL.env.character import Character
from SkillRL.exp import derive_seed
from SkillRL.misc.errors import ConfigError, InsufficientDataError
from SkillRL.skill.space import SkillSpace
from SkillRL.task.episode import EpisodeStats, run_task_episodes
from SkillRL.task.policy import HighLevelPolicy

STRATEGIES = ("both", "success", "disc", "random")


@dataclass
class TaskBin:
    """
    One table-height interval ``[lo, hi)`` with its measured performance.

    `sr` is the SR(Grasp) fraction, `p_bar` the mean of ``log r_p1`` over all episode steps,
    `score` the overall score W and `weight` the sampling weight allotted to its generated clips.
    """
    lo: float
    hi: float
    episodes: int = 0
    sr: float = float("nan")
    p_bar: float = float("nan")
    score: float = float("nan")
    weight: float = 0.0

    def contains(self, height: float) -> bool:
        return self.lo <= height < self.hi

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)


def make_bins(height_range: Sequence[float], num_bins: int) -> List[TaskBin]:
    lo, hi = float(height_range[0]), float(height_range[1])
    if num_bins < 1 or not hi > lo:
        raise ValueError(f"cannot split [{lo}, {hi}] into {num_bins} bins")
    edges = np.linspace(lo, hi, num_bins + 1)
    return [TaskBin(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]


def bin_index(bins: Sequence[TaskBin], height: float) -> Optional[int]:
    """Index of the bin holding `height`; the top edge of the last bin belongs to it. """
    for j, b in enumerate(bins):
        if b.contains(height):
            return j
    if bins and height == bins[-1].hi:
        return len(bins) - 1
    return None


def summarize_bin(b: TaskBin, stats: Sequence[EpisodeStats], lift: float=0.1) -> TaskBin:
    if not stats:
        raise InsufficientDataError(f"no episodes in bin [{b.lo:.3f}, {b.hi:.3f})")
    steps = sum(s.steps for s in stats)
    b.episodes = len(stats)
    b.sr = float(np.mean([s.grasp_success(lift) for s in stats]))
    b.p_bar = float(sum(s.log_r_p1 for s in stats) / max(steps, 1))
    return b


def estimate_performance(
    policy: HighLevelPolicy,
    space: SkillSpace,
    config: Any,
    bins: Sequence[TaskBin],
    episodes_per_bin: int,
    seed: int,
    character: Optional[Character]=None,
) -> List[TaskBin]:
    """
    Run `episodes_per_bin` deterministic episodes per bin, with table heights drawn uniformly
    inside the bin, and fill in `episodes`, `sr` and `p_bar`.
    """
    if episodes_per_bin < 1:
        raise InsufficientDataError("performance estimation needs at least one episode per bin")
    lift = float(config["analysis"]["sr_lift"])
    for j, b in enumerate(bins):
        rng = np.random.default_rng(derive_seed(seed, "active.heights", j))
        heights = rng.uniform(b.lo, b.hi, size=episodes_per_bin)
        seeds = [derive_seed(seed, "active.episode", j, e) for e in range(episodes_per_bin)]
        stats = run_task_episodes(
            policy, space, config, seeds, [{"table_height": float(h)} for h in heights], character=character,
        )
        summarize_bin(b, stats, lift)
    return list(bins)


def score_weights(active: Any, strategy: str) -> Tuple[float, float, float]:
    """``(s0, w_succ, w_disc)`` of a strategy. `success` and `disc` drop the other term. """
    if strategy not in STRATEGIES:
        raise ConfigError("active.strategy", f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    s0, w_succ, w_disc = float(active["s0"]), float(active["w_succ"]), float(active["w_disc"])
    if strategy == "success":
        w_disc = 0.0
    elif strategy == "disc":
        w_succ = 0.0
    return s0, w_succ, w_disc


def _spread(values: np.ndarray) -> np.ndarray:
    """``(max - v) / (max - min)``, all zeros when every value is the same. """
    span = values.max() - values.min()
    if span <= 0:
        return np.zeros_like(values)
    return (values.max() - values) / span


def compute_task_score(
    bins: Sequence[TaskBin],
    s0: float=0.2,
    w_succ: float=0.4,
    w_disc: float=0.4,
) -> np.ndarray:
    """
    The overall score of every bin,
    ``W_j = s0 + w_succ * (max sr - sr_j) / (max sr - min sr) + w_disc * (max p - p_j) / (max p - min p)``.
    A term whose metric is the same in every bin contributes 0. The scores are also written
    into the bins.
    """
    if len(bins) < 2:
        raise InsufficientDataError(f"task scores need at least two bins, got {len(bins)}")
    sr = np.array([b.sr for b in bins], dtype=np.float64)
    p = np.array([b.p_bar for b in bins], dtype=np.float64)
    if not (np.all(np.isfinite(sr)) and np.all(np.isfinite(p))):
        raise InsufficientDataError("every bin needs measured performance before scoring")
    scores = s0 + w_succ * _spread(sr) + w_disc * _spread(p)
    for b, w in zip(bins, scores):
        b.score = float(w)
    return scores


def bin_report(bins: Sequence[TaskBin]) -> pd.DataFrame:
    total = sum(b.weight for b in bins)
    return pd.DataFrame([{
        "bin": j,
        "lo": b.lo,
        "hi": b.hi,
        "episodes": b.episodes,
        "sr": b.sr,
        "p_bar": b.p_bar,
        "W": b.score,
        "share": b.weight / total if total > 0 else 0.0,
        "weight": b.weight,
    } for j, b in enumerate(bins)])
