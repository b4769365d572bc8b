"""
Success-rate, foot-skate and walk-likeness evaluation of a trained task policy.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from SkillRL.active.bins import TaskBin, bin_index
from SkillRL.data import Dataset
from SkillRL.env.character import Character
from SkillRL.exp import derive_seed
from SkillRL.skill.features import transition_pairs
from SkillRL.skill.reward import disc_reward
from SkillRL.skill.space import SkillSpace
from SkillRL.task.episode import EpisodeStats, run_task_episodes
from SkillRL.task.policy import HighLevelPolicy


def foot_skate_ratio(feet_x: np.ndarray, contact: np.ndarray, dt: float, threshold: float=0.1) -> float:
    """
    Fraction of foot-contact frames in which the foot moves horizontally faster than `threshold`.

    Parameters
    ----------
    feet_x :  (T, F) horizontal positions of F foot points.
    contact :  (T, F) contact flags.
    dt :  Time between frames.
    """
    feet_x = np.asarray(feet_x, dtype=np.float64)
    contact = np.asarray(contact, dtype=bool)[1:]
    speed = np.abs(np.diff(feet_x, axis=0)) / dt
    frames = contact.sum()
    if frames == 0:
        return 0.0
    return float((contact & (speed > threshold)).sum() / frames)


def success_metrics(stats: Sequence[EpisodeStats], lift: float=0.1) -> Dict[str, float]:
    contact = sum(s.contact_frames for s in stats)
    loco_steps = sum(s.loco_steps for s in stats)
    steps = sum(s.steps for s in stats)
    return {
        "episodes": len(stats),
        "sr_grasp": float(np.mean([s.grasp_success(lift) for s in stats])) if stats else float("nan"),
        "sr_goal": float(np.mean([s.goal_success() for s in stats])) if stats else float("nan"),
        "foot_skate": sum(s.skate_frames for s in stats) / contact if contact else 0.0,
        "mean_log_r_p1": sum(s.log_r_p1 for s in stats) / steps if steps else float("nan"),
        "walk_likeness": sum(s.loco_r_p1 for s in stats) / loco_steps if loco_steps else float("nan"),
    }


@torch.no_grad()
def reference_walk_likeness(space: SkillSpace, character: Character, dataset: Dataset) -> float:
    """Mean frozen-discriminator reward r_p1 over every transition of the reference data. """
    starts, nexts = transition_pairs(character, dataset)
    s = torch.as_tensor(np.concatenate(starts), dtype=torch.float32)
    s_next = torch.as_tensor(np.concatenate(nexts), dtype=torch.float32)
    return float(disc_reward(space.disc_enc.discriminate(s, s_next)).mean())


def evaluate_success(
    policy: HighLevelPolicy,
    space: SkillSpace,
    config: Any,
    episodes: int,
    seed: int,
    table_heights: Optional[Sequence[float]]=None,
    character: Optional[Character]=None,
) -> Tuple[Dict[str, float], pd.DataFrame]:
    """
    Run `episodes` deterministic episodes on scenes drawn from the configured ranges.

    Returns
    -------
    (metrics, frame) :  SR(Grasp), SR(Goal), foot-skate ratio and walk-likeness, and one row per episode.
    """
    if episodes < 1:
        raise ValueError("evaluation needs at least one episode")
    seeds = [derive_seed(seed, "evaluate", e) for e in range(episodes)]
    options = None
    if table_heights is not None:
        options = [{"table_height": float(table_heights[e % len(table_heights)])} for e in range(episodes)]
    lift = float(config["analysis"]["sr_lift"])
    stats = run_task_episodes(policy, space, config, seeds, options, character=character)
    frame = pd.DataFrame([dict(episode=e, seed=s, **st.row(lift)) for e, (s, st) in enumerate(zip(seeds, stats))])
    return success_metrics(stats, lift), frame


def per_bin_report(frame: pd.DataFrame, bins: Sequence[TaskBin]) -> pd.DataFrame:
    """Per table-height bin: episodes, SR(Grasp), SR(Goal) and mean log r_p1 of the episodes in it. """
    rows: List[Dict[str, float]] = []
    index = np.array([bin_index(bins, h) if bin_index(bins, h) is not None else -1 for h in frame["table_height"]])
    for j, b in enumerate(bins):
        part = frame[index == j]
        steps = part["steps"].sum()
        rows.append({
            "lo": b.lo,
            "hi": b.hi,
            "episodes": len(part),
            "sr_grasp": part["grasp_success"].mean() if len(part) else float("nan"),
            "sr_goal": part["goal_success"].mean() if len(part) else float("nan"),
            "mean_log_r_p1": (part["mean_log_r_p1"] * part["steps"]).sum() / steps if steps else float("nan"),
        })
    return pd.DataFrame(rows)
