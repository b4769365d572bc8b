from .ppo import PpoConfig, compute_gae, normalize_advantages, ppo_update
from .actor import GaussianActor
from .critic import Critic, PartwiseCritic, TAP_NAMES
from .buffer import RolloutBuffer
