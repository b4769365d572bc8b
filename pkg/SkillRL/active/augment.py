"""
Sampling-weight assignment and dataset augmentation with generated reach clips.
"""

from typing import Any, List, Optional, Sequence

import numpy as np

from SkillRL.data import Dataset, MotionClip, generate_reach_clip
from SkillRL.env.character import Character
from SkillRL.env.sim2d import Scene
from SkillRL.exp import derive_seed
from SkillRL.logger import logger
from SkillRL.misc.errors import UnreachableError
from SkillRL.active.bins import STRATEGIES, TaskBin

GENERATED = "interpolated"


def assign_sampling_weights(
    bins: Sequence[TaskBin],
    data_ratio: float,
    original_weight: float,
    strategy: str="both",
) -> np.ndarray:
    """
    Split the added-weight budget ``data_ratio * original_weight`` over the bins.

    Every bin gets a share proportional to ``1 - exp(-W_j)``, which grows with its score; the
    `random` strategy gives every bin the same share. The weights are also written into the bins.
    """
    if data_ratio < 0:
        raise ValueError(f"data_ratio must be non-negative, got {data_ratio}")
    if strategy == "random":
        u = np.ones(len(bins))
    elif strategy in STRATEGIES:
        u = 1.0 - np.exp(-np.array([b.score for b in bins], dtype=np.float64))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    budget = data_ratio * original_weight
    weights = budget * u / u.sum() if u.sum() > 0 and budget > 0 else np.zeros(len(bins))
    for b, w in zip(bins, weights):
        b.weight = float(w)
    return weights


def original_clips(dataset: Dataset) -> Dataset:
    return Dataset(clip for clip in dataset if clip.source != GENERATED)


def _bin_clip(
    b: TaskBin,
    j: int,
    k: int,
    rng: np.random.Generator,
    config: Any,
    character: Optional[Character],
    weight: float,
) -> MotionClip:
    retry_cap = int(config["active"]["retry_cap"])
    last = None
    for _ in range(retry_cap):
        scene = Scene.sample(config["scene"], rng, config["sim"]["object_size"], table_height=float(rng.uniform(b.lo, b.hi)))
        side = "left" if scene.facing > 0 else "right"
        try:
            return generate_reach_clip(
                scene, side, rng, character, config["grasp"], T=int(config["data"]["interp_frames"]),
                fps=config["data"]["fps"], weight=weight, name=f"reach_bin{j}_{k}",
            )
        except UnreachableError as e:
            last = e
            logger.debug(f"bin {j}: resampling unreachable scene ({e})")
    raise UnreachableError(f"bin [{b.lo:.3f}, {b.hi:.3f}): no reachable scene in {retry_cap} draws, last: {last}")


def augment_dataset(
    dataset: Dataset,
    bins: Sequence[TaskBin],
    config: Any,
    seed: int,
    character: Optional[Character]=None,
) -> Dataset:
    """
    The original clips of `dataset` plus `active.clips_per_bin` generated reach clips for every
    bin with a positive weight, each carrying an equal part of the bin's weight. Generated clips
    from earlier rounds are replaced, so the generated weight always equals the assigned budget.
    Original clip weights are left untouched.
    """
    per_bin = int(config["active"]["clips_per_bin"])
    clips: List[MotionClip] = list(original_clips(dataset))
    for j, b in enumerate(bins):
        if b.weight <= 0:
            continue
        rng = np.random.default_rng(derive_seed(seed, "active.augment", j))
        for k in range(per_bin):
            clips.append(_bin_clip(b, j, k, rng, config, character, b.weight / per_bin))
    return Dataset(clips)


def generated_ratio(dataset: Dataset) -> float:
    """Total weight of generated clips over total weight of the original clips. """
    generated = sum(clip.weight for clip in dataset if clip.source == GENERATED)
    return generated / original_clips(dataset).total_weight
