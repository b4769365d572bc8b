from .bins import (
    STRATEGIES,
    TaskBin,
    make_bins,
    bin_index,
    summarize_bin,
    estimate_performance,
    score_weights,
    compute_task_score,
    bin_report,
)
from .augment import assign_sampling_weights, augment_dataset, original_clips, generated_ratio
