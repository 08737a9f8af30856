"""
PCCK checkpoint files

Magic "PCCK", version u32, the ModelConfig as length-prefixed JSON, then the
parameter tensors in declaration order (name, ndim, shape, f64 values), then
an optional optimizer-state trailer (step, epoch, lr, Adam moments).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Dict, List, Optional, Tuple, Union
import logging
import struct

import numpy as np
from pydantic import ValidationError

from ...errors import CheckpointMismatchError, DatasetFormatError
from ...domain import AdamState, TrainingState
from ...model import ModelConfig, ModelParams, config_diff, shape_diff


logger = logging.getLogger(__name__)

MAGIC = b"PCCK"
VERSION = 1

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    config: ModelConfig
    params: ModelParams
    state: Optional[TrainingState] = None


def _write_tensors(f: BinaryIO, tensors: List[Tuple[str, np.ndarray]]):
    f.write(struct.pack("<I", len(tensors)))
    for name, value in tensors:
        encoded = name.encode("utf-8")
        value = np.ascontiguousarray(value, dtype="<f8")
        f.write(struct.pack("<H", len(encoded)))
        f.write(encoded)
        f.write(struct.pack("<I", value.ndim))
        f.write(struct.pack(f"<{value.ndim}Q", *value.shape))
        f.write(value.tobytes(order="C"))


def _read(f: BinaryIO, size: int) -> bytes:
    data = f.read(size)
    if len(data) != size:
        raise DatasetFormatError(f"truncated checkpoint: wanted {size} bytes, got {len(data)}")
    return data


def _read_tensors(f: BinaryIO) -> Dict[str, np.ndarray]:
    (count,) = struct.unpack("<I", _read(f, 4))
    tensors: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (length,) = struct.unpack("<H", _read(f, 2))
        name = _read(f, length).decode("utf-8")
        (ndim,) = struct.unpack("<I", _read(f, 4))
        shape = struct.unpack(f"<{ndim}Q", _read(f, 8 * ndim))
        size = int(np.prod(shape)) if ndim else 1
        values = np.frombuffer(_read(f, 8 * size), dtype="<f8").astype(np.float64)
        tensors[name] = values.reshape(shape)
    return tensors


def save_checkpoint(path: PathLike, params: ModelParams, state: Optional[TrainingState] = None):
    """Write params (and optionally the optimizer state) under their config"""
    config_json = params.config.model_dump_json().encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(config_json)))
        f.write(config_json)
        _write_tensors(f, list(params.items()))
        if state is None:
            f.write(struct.pack("<B", 0))
        else:
            f.write(struct.pack("<B", 1))
            f.write(struct.pack("<QQd", state.adam.step, state.epoch, state.lr))
            _write_tensors(f, sorted(state.adam.m.items()))
            _write_tensors(f, sorted(state.adam.v.items()))
    logger.debug(f"Checkpoint written to {path}")


def load_checkpoint(path: PathLike, expected: Optional[ModelConfig] = None) -> Checkpoint:
    """
    Read a checkpoint, optionally checking it against the configured model.

    Raises:
        DatasetFormatError: malformed file
        CheckpointMismatchError: the stored config or tensors do not fit
            ``expected``; ``diff`` maps each offending tensor to (expected shape,
            found shape) and each offending config field to (expected, found)
    """
    with open(path, "rb") as f:
        if _read(f, 4) != MAGIC:
            raise DatasetFormatError(f"{path} is not a PCCK checkpoint")
        (version,) = struct.unpack("<I", _read(f, 4))
        if version != VERSION:
            raise DatasetFormatError(f"unsupported checkpoint version {version}")
        (length,) = struct.unpack("<I", _read(f, 4))
        try:
            config = ModelConfig.model_validate_json(_read(f, length))
        except ValidationError as e:
            raise DatasetFormatError(f"checkpoint config is invalid: {e}") from e
        arrays = _read_tensors(f)

        if expected is not None:
            diff = {**shape_diff(expected, arrays), **config_diff(expected, config)}
            if diff:
                lines = [f"{name}: config expects {exp}, checkpoint has {got}" for name, (exp, got) in diff.items()]
                raise CheckpointMismatchError(
                    "checkpoint does not fit the configured model:\n  " + "\n  ".join(lines), diff
                )
            config = expected
        params = ModelParams(config, arrays)

        state = None
        (flag,) = struct.unpack("<B", _read(f, 1))
        if flag:
            step, epoch, lr = struct.unpack("<QQd", _read(f, 24))
            m = _read_tensors(f)
            v = _read_tensors(f)
            state = TrainingState(params, AdamState(step, m, v), lr, epoch)
        if f.read(1):
            raise DatasetFormatError("trailing bytes after checkpoint")
    return Checkpoint(config, params, state)
