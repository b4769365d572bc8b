from .base import SimpleReplay
from .rollout import RolloutBuffer
