from .presets import ALIGN_PRESETS, AlignConfig
from .stats import (
    TapStats,
    FeatureStats,
    window_means,
    tap_stats,
    fit_tap_samples,
    fit_feature_stats,
    save_feature_stats,
    load_feature_stats,
)
from .reward import mahalanobis, feats_reward, FeatureAligner
