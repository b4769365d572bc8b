from typing import Any, Dict, Optional, Sequence, Tuple

from dataclasses import dataclass

from SkillRL.misc.errors import ConfigError
from SkillRL.rl.critic import TAP_NAMES

# name -> (per-tap weights over TAP_NAMES, global reward weight, threshold)
ALIGN_PRESETS: Dict[str, Tuple[Tuple[float, ...], float, float]] = {
    "f0_no_torso": ((0, 1, 1, 1, 1, 0, 0, 0), 0.008, 1.0),
    "f0": ((1, 1, 1, 1, 1, 0, 0, 0), 0.008, 1.0),
    "f0_no_torso_f1": ((0, 1, 1, 1, 1, 0.5, 0, 0), 0.005, 1.0),
    "f0_f1": ((1, 1, 1, 1, 1, 0.5, 0, 0), 0.005, 1.0),
    "f0_f1_f2": ((1, 1, 1, 1, 1, 0.5, 0.5, 0), 0.005, 1.0),
}


@dataclass(frozen=True)
class AlignConfig:
    """
    Per-tap weights and thresholds of the alignment reward, in `TAP_NAMES` order, and the
    global weight the summed penalty is scaled by.
    """
    weights: Tuple[float, ...] = ALIGN_PRESETS["f0_f1"][0]
    reward_weight: float = 0.005
    thresholds: Tuple[float, ...] = (1.0, ) * len(TAP_NAMES)

    def __post_init__(self):
        if len(self.weights) != len(TAP_NAMES) or len(self.thresholds) != len(TAP_NAMES):
            raise ValueError(f"expected {len(TAP_NAMES)} tap weights and thresholds")
        if min(self.weights) < 0 or self.reward_weight < 0:
            raise ValueError("alignment weights must be non-negative")

    @property
    def weighted_taps(self) -> Tuple[str, ...]:
        return tuple(name for name, w in zip(TAP_NAMES, self.weights) if w > 0)

    @classmethod
    def from_preset(cls, name: str, threshold: Optional[float]=None) -> "AlignConfig":
        if name not in ALIGN_PRESETS:
            raise ConfigError("align.preset", f"unknown preset {name!r}, expected one of {sorted(ALIGN_PRESETS)}")
        weights, reward_weight, default_threshold = ALIGN_PRESETS[name]
        thres = default_threshold if threshold is None else float(threshold)
        return cls(tuple(float(w) for w in weights), float(reward_weight), (thres, ) * len(TAP_NAMES))

    @classmethod
    def from_config(cls, align: Any) -> "AlignConfig":
        """The preset named by `align.preset`, with `align.weights` / `align.reward_weight` overriding it when set. """
        base = cls.from_preset(align["preset"], align["threshold"])
        weights: Sequence[float] = base.weights if align["weights"] is None else tuple(float(w) for w in align["weights"])
        if len(weights) != len(TAP_NAMES):
            raise ConfigError("align.weights", f"expected {len(TAP_NAMES)} weights, got {len(weights)}")
        reward_weight = base.reward_weight if align["reward_weight"] is None else float(align["reward_weight"])
        return cls(tuple(weights), reward_weight, base.thresholds)
