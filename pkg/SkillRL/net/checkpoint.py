"""
Checkpoint files.

A checkpoint is a binary tensor table plus a YAML sidecar ``<path>.meta.yaml``. The table layout,
all integers little-endian::

    b"SKF1"  uint32 version  uint32 count
    count x { uint16 name_len  name (utf-8)  uint8 ndim  ndim x uint32 dim  float32 data }

Tensors are written in insertion order, so loading a file and saving it again reproduces it
byte for byte.
"""

from typing import Any, Dict, Mapping, Optional, Tuple, Union

import os
import struct
from collections import OrderedDict

import numpy as np
import torch
import torch.nn as nn
import yaml

from SkillRL.logger import logger
from SkillRL.misc.chore import to_builtin
from SkillRL.misc.errors import CheckpointError

MAGIC = b"SKF1"
FORMAT_VERSION = 1
META_SUFFIX = ".meta.yaml"


def meta_path(path: str) -> str:
    return path + META_SUFFIX


def _as_array(value: Union[np.ndarray, torch.Tensor]) -> np.ndarray:
    if isinstance(value, torch.Tensor):
        value = value.detach().cpu().numpy()
    return np.ascontiguousarray(value, dtype="<f4")


def encode_tensors(tensors: Mapping[str, Union[np.ndarray, torch.Tensor]]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(tensors))]
    for name, value in tensors.items():
        arr = _as_array(value)
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def decode_tensors(data: bytes, path: str="<memory>") -> "OrderedDict[str, np.ndarray]":
    """Parse a tensor table. Raises CheckpointError with the byte offset of the first defect. """
    offset = 0

    def take(n: int, what: str) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise CheckpointError(path, offset, f"truncated while reading {what}")
        chunk = data[offset:offset + n]
        offset += n
        return chunk

    if take(4, "magic") != MAGIC:
        raise CheckpointError(path, 0, "bad magic, not an SKF1 checkpoint")
    version, count = struct.unpack("<II", take(8, "header"))
    if version != FORMAT_VERSION:
        raise CheckpointError(path, 4, f"unsupported format version {version}")
    tensors = OrderedDict()
    for _ in range(count):
        start = offset
        (name_len, ) = struct.unpack("<H", take(2, "name length"))
        try:
            name = take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointError(path, start + 2, "tensor name is not valid utf-8")
        if name in tensors:
            raise CheckpointError(path, start, f"duplicate tensor {name!r}")
        (ndim, ) = struct.unpack("<B", take(1, "rank"))
        shape = struct.unpack(f"<{ndim}I", take(4*ndim, "shape"))
        size = int(np.prod(shape, dtype=np.int64))
        tensors[name] = np.frombuffer(take(4*size, f"data of {name!r}"), dtype="<f4").reshape(shape).copy()
    if offset != len(data):
        raise CheckpointError(path, offset, f"{len(data) - offset} trailing bytes after the tensor table")
    return tensors


def save_checkpoint(
    path: str,
    tensors: Mapping[str, Union[np.ndarray, torch.Tensor]],
    meta: Optional[Dict[str, Any]]=None,
) -> str:
    """Write the tensor table to `path` and `meta` to the sidecar. """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as fp:
        fp.write(encode_tensors(tensors))
    doc = {"format_version": FORMAT_VERSION}
    doc.update(to_builtin(dict(meta or {})))
    with open(meta_path(path), "w") as fp:
        yaml.safe_dump(doc, fp, sort_keys=False)
    return path


def load_checkpoint(
    path: str,
    config_hash: Optional[str]=None,
    force: bool=False,
) -> Tuple["OrderedDict[str, np.ndarray]", Dict[str, Any]]:
    """
    Read a checkpoint and its sidecar.

    Parameters
    ----------
    config_hash :  Hash of the current config. When it differs from the hash recorded in the
                sidecar a warning is logged, and loading is refused unless `force` is set.
    """
    try:
        with open(path, "rb") as fp:
            data = fp.read()
    except OSError as e:
        raise CheckpointError(path, None, f"cannot read checkpoint: {e.strerror}")
    tensors = decode_tensors(data, path)
    meta: Dict[str, Any] = {}
    if os.path.exists(meta_path(path)):
        with open(meta_path(path), "r") as fp:
            meta = yaml.safe_load(fp) or {}
    stored = meta.get("config_hash")
    if config_hash is not None and stored is not None and stored != config_hash:
        logger.warning(
            f"checkpoint {path} was written under config {stored}, current config is {config_hash}"
        )
        if not force:
            raise CheckpointError(path, None, f"config hash mismatch ({stored} != {config_hash}), pass --force to load anyway")
    return tensors, meta


def checkpoint_roundtrip(path: str, out_path: Optional[str]=None) -> Tuple["OrderedDict[str, np.ndarray]", Dict[str, Any]]:
    """Load `path` and save it again to `out_path` (in place when omitted). """
    tensors, meta = load_checkpoint(path)
    meta.pop("format_version", None)
    save_checkpoint(out_path or path, tensors, meta)
    return tensors, meta


def module_tensors(module: nn.Module, prefix: str) -> "OrderedDict[str, torch.Tensor]":
    """Float tensors of `module.state_dict()` keyed as ``<prefix>/<name>``. """
    return OrderedDict(
        (f"{prefix}/{name}", value) for name, value in module.state_dict().items() if value.is_floating_point()
    )


def load_module_tensors(module: nn.Module, tensors: Mapping[str, np.ndarray], prefix: str) -> nn.Module:
    state = module.state_dict()
    for name, value in state.items():
        if not value.is_floating_point():
            continue
        key = f"{prefix}/{name}"
        if key not in tensors:
            raise CheckpointError("<table>", None, f"missing tensor {key!r}")
        arr = tensors[key]
        if tuple(arr.shape) != tuple(value.shape):
            raise CheckpointError("<table>", None, f"tensor {key!r} has shape {arr.shape}, expected {tuple(value.shape)}")
        state[name] = torch.as_tensor(arr, dtype=value.dtype)
    module.load_state_dict(state)
    return module


def optimizer_tensors(optimizer: torch.optim.Optimizer, prefix: str) -> Tuple["OrderedDict[str, torch.Tensor]", Dict[str, Any]]:
    """Moment buffers as tensors and step counts as metadata. """
    tensors, steps = OrderedDict(), {}
    for idx, state in optimizer.state_dict()["state"].items():
        for key in ("exp_avg", "exp_avg_sq"):
            tensors[f"{prefix}/{idx}/{key}"] = state[key]
        steps[int(idx)] = float(state["step"])
    return tensors, {"steps": steps, "skipped": int(getattr(optimizer, "skipped", 0))}


def load_optimizer_tensors(
    optimizer: torch.optim.Optimizer,
    tensors: Mapping[str, np.ndarray],
    meta: Mapping[str, Any],
    prefix: str,
) -> torch.optim.Optimizer:
    state_dict = optimizer.state_dict()
    state = {}
    for idx, step in (meta.get("steps") or {}).items():
        idx = int(idx)
        state[idx] = {
            "step": torch.tensor(float(step)),
            "exp_avg": torch.as_tensor(tensors[f"{prefix}/{idx}/exp_avg"]),
            "exp_avg_sq": torch.as_tensor(tensors[f"{prefix}/{idx}/exp_avg_sq"]),
        }
    state_dict["state"] = state
    optimizer.load_state_dict(state_dict)
    if hasattr(optimizer, "skipped"):
        optimizer.skipped = int(meta.get("skipped", 0))
    return optimizer
