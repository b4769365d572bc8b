from .basic import miniblock, orthogonal_init_, UnitNorm, make_head, HEADS
from .mlp import MLP
from .utils import forward_backward, grad_check, count_parameters
from .optim import SkillAdam, adam_step
from .checkpoint import (
    save_checkpoint,
    load_checkpoint,
    checkpoint_roundtrip,
    encode_tensors,
    decode_tensors,
    module_tensors,
    load_module_tensors,
    optimizer_tensors,
    load_optimizer_tensors,
)
