from .disc_enc import DiscEnc, make_disc_optimizer, gradient_penalty, disc_update
from .reward import D_CLAMP, clamp_disc, disc_reward, skill_reward, low_level_reward, diversity_bonus
from .features import critic_features, clip_observations, dataset_sequences, encode_sequence, sequence_taps, transition_pairs
