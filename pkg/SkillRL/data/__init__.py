from .clip import (
    MotionClip,
    PoseFrame,
    CLIP_FORMAT_VERSION,
    SOURCES,
    save_clip,
    load_clip,
    clip_roundtrip,
)
from .dataset import Dataset, sample_transition, save_dataset, load_dataset
from .generators import (
    GraspPose,
    synth_gait,
    slerp_interpolate,
    generate_grasp_pose,
    generate_reach_clip,
    reference_walk_dataset,
    two_link_ik,
    default_character,
)
