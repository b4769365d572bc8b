import zlib
import random
from typing import Any, Dict, Optional, Union

import numpy as np
import torch


def set_seed(seed: Optional[Union[str, int]] = None) -> int:
    if seed is None:
        seed = np.random.randint(0, 2**31)
    seed = int(seed)
    torch.manual_seed(seed)
    np.random.seed(seed)
    random.seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)
    return seed


def make_rng(seed: int, stream: str="") -> np.random.Generator:
    """An independent generator for the named `stream` of a run seed. """
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(stream.encode())]))


def rng_state(rng: np.random.Generator) -> Dict[str, Any]:
    return rng.bit_generator.state


def restore_rng(state: Dict[str, Any]) -> np.random.Generator:
    bit_generator = getattr(np.random, state["bit_generator"])()
    bit_generator.state = state
    return np.random.Generator(bit_generator)


def derive_seed(seed: int, stream: str, *counters: int) -> int:
    """A 32-bit seed for the named `stream` of a run seed, indexed by `counters`. """
    entropy = [int(seed), zlib.crc32(stream.encode())] + [int(c) for c in counters]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
