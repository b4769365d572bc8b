from .namespace import NameSpace
from .chore import safe_eval, hash_config, canonical_json, to_builtin
from .errors import (
    SkillRLError,
    ConfigError,
    SimulationError,
    ClipFormatError,
    CheckpointError,
    UnreachableError,
    InsufficientDataError,
    ShapeError,
    ParameterError,
)
