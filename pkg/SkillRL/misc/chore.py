import re
import json
import hashlib
from typing import Any, Dict

import yaml
import numpy as np

_EXPONENT = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)[eE][-+]?\d+")


def safe_eval(expr: str) -> Any:
    """Interpret a command line value. YAML scalars and flow collections are supported,
    e.g. `3`, `1e-4`, `true`, `[256, 128]`; anything unparsable is returned as the raw string.
    """
    if not isinstance(expr, str):
        raise TypeError("Expr for safe eval must be string.")
    try:
        ret = yaml.safe_load(expr)
    except yaml.YAMLError:
        ret = expr
    if isinstance(ret, str) and _EXPONENT.fullmatch(ret.strip()):
        # yaml 1.1 reads `2e-5` without a dot as a string
        return float(ret)
    return expr if ret is None and expr.strip() not in ("null", "~") else ret


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_to_builtin)


def hash_config(config: Dict[str, Any], length: int=12) -> str:
    """SHA-1 over the canonical JSON form of a config dict, truncated to `length` hex chars. """
    digest = hashlib.sha1(canonical_json(config).encode("utf-8")).hexdigest()
    return digest[:length]


def _to_builtin(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj).__name__} is not serializable.")


def to_builtin(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays so that YAML and JSON dumpers accept the object. """
    if isinstance(obj, dict):
        return {k: to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, (np.generic, np.ndarray)):
        return _to_builtin(obj)
    return obj
