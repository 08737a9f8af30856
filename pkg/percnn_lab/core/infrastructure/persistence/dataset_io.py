"""
PCNF dataset files

Little-endian binary: magic "PCNF", version u32, kind tag u32, channels u32,
rank u32, extent u64 per axis, dt f64, t0 f64, spacing f64 per axis,
snapshot count u64, then row-major f64 values ordered time, channel, space.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union
import logging
import struct

import numpy as np

from ...errors import DatasetFormatError
from ...domain import Measurement, PdeKind, Trajectory


logger = logging.getLogger(__name__)

MAGIC = b"PCNF"
VERSION = 1
_DTYPE = np.dtype("<f8")

PathLike = Union[str, Path]


@dataclass(frozen=True)
class DatasetHeader:
    kind: PdeKind
    channels: int
    shape: Tuple[int, ...]
    dt: float
    t0: float
    spacing: Tuple[float, ...]
    snapshots: int

    @property
    def payload_size(self) -> int:
        return self.snapshots * self.channels * int(np.prod(self.shape))

    def pack(self) -> bytes:
        rank = len(self.shape)
        return b"".join([
            MAGIC,
            struct.pack("<4I", VERSION, self.kind.tag, self.channels, rank),
            struct.pack(f"<{rank}Q", *self.shape),
            struct.pack("<2d", self.dt, self.t0),
            struct.pack(f"<{rank}d", *self.spacing),
            struct.pack("<Q", self.snapshots),
        ])


def _read_exact(f, size: int, what: str) -> bytes:
    data = f.read(size)
    if len(data) != size:
        raise DatasetFormatError(f"truncated dataset: expected {size} bytes of {what}, got {len(data)}")
    return data


def read_header(f) -> DatasetHeader:
    if _read_exact(f, 4, "magic") != MAGIC:
        raise DatasetFormatError("not a PCNF dataset (bad magic)")
    version, tag, channels, rank = struct.unpack("<4I", _read_exact(f, 16, "header"))
    if version != VERSION:
        raise DatasetFormatError(f"unsupported PCNF version {version}")
    if not 1 <= rank <= 3:
        raise DatasetFormatError(f"invalid rank {rank}")
    try:
        kind = PdeKind.from_tag(tag)
    except ValueError as e:
        raise DatasetFormatError(str(e)) from e
    shape = struct.unpack(f"<{rank}Q", _read_exact(f, 8 * rank, "extents"))
    dt, t0 = struct.unpack("<2d", _read_exact(f, 16, "time axis"))
    spacing = struct.unpack(f"<{rank}d", _read_exact(f, 8 * rank, "spacing"))
    (snapshots,) = struct.unpack("<Q", _read_exact(f, 8, "snapshot count"))
    return DatasetHeader(kind, channels, tuple(shape), dt, t0, tuple(spacing), snapshots)


def write_trajectory(path: PathLike, traj: Trajectory, kind: PdeKind):
    """Serialize a trajectory; the bytes depend only on its values"""
    header = DatasetHeader(kind, traj.channels, traj.shape, traj.dt, traj.t0, traj.spacing, len(traj))
    payload = np.ascontiguousarray(traj.to_array(), dtype=_DTYPE)
    with open(path, "wb") as f:
        f.write(header.pack())
        f.write(payload.tobytes(order="C"))
    logger.debug(f"Wrote {len(traj)} snapshots of {traj.shape} to {path}")


def read_trajectory(path: PathLike) -> Tuple[PdeKind, Trajectory]:
    """
    Raises:
        DatasetFormatError: bad magic, version, truncation or trailing bytes
    """
    with open(path, "rb") as f:
        header = read_header(f)
        raw = f.read()
    expected = header.payload_size * _DTYPE.itemsize
    if len(raw) != expected:
        raise DatasetFormatError(f"payload holds {len(raw)} bytes, header implies {expected}")
    values = np.frombuffer(raw, dtype=_DTYPE).astype(np.float64)
    values = values.reshape((header.snapshots, header.channels) + header.shape)
    if not np.all(np.isfinite(values)):
        raise DatasetFormatError("dataset holds non-finite values")
    traj = Trajectory.from_array(values, header.dt, header.t0, header.spacing)
    return header.kind, traj


def write_measurement(path: PathLike, m: Measurement, kind: PdeKind):
    """Coarse values only; strides and noise live in the manifest"""
    write_trajectory(path, m.data, kind)


def read_measurement(
    path: PathLike,
    spatial_stride: Sequence[int],
    temporal_stride: int,
    noise_level: float,
    noise_seed,
    fine_shape: Sequence[int],
) -> Tuple[PdeKind, Measurement]:
    kind, data = read_trajectory(path)
    return kind, Measurement(data, tuple(spatial_stride), temporal_stride, noise_level, noise_seed, tuple(fine_shape))
