from .fid import FeatureSet, fid, frechet_distance
from .evaluate import foot_skate_ratio, success_metrics, reference_walk_likeness, evaluate_success, per_bin_report
from .pilot import PILOT_SETS, interpolated_reach_dataset, pooled_taps, pilot_sequences, pilot_study, fid_ratios
