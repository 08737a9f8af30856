"""
Trajectories and measurements

A Trajectory is a uniformly spaced sequence of Fields; a Measurement is a
coarse, possibly noisy Trajectory together with the map back to the fine grid.
"""

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ShapeError, SpecError
from ..grid import Field


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered snapshots with uniform spacing ``dt`` starting at ``t0``"""
    fields: Tuple[Field, ...]
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        fields = tuple(self.fields)
        object.__setattr__(self, "fields", fields)
        if not fields:
            raise SpecError("a Trajectory needs at least one snapshot")
        if not self.dt > 0:
            raise SpecError(f"dt must be > 0, got {self.dt}")
        first = fields[0]
        for index, snapshot in enumerate(fields[1:], start=1):
            if snapshot.data.shape != first.data.shape:
                raise ShapeError(
                    f"snapshot {index} has shape {snapshot.data.shape}, expected {first.data.shape}"
                )

    def __len__(self) -> int:
        return len(self.fields)

    def __getitem__(self, index: int) -> Field:
        return self.fields[index]

    def __iter__(self) -> Iterator[Field]:
        return iter(self.fields)

    @property
    def channels(self) -> int:
        return self.fields[0].channels

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.fields[0].shape

    @property
    def spacing(self) -> Tuple[float, ...]:
        return self.fields[0].spacing

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.fields))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.fields) - 1)

    def to_array(self) -> np.ndarray:
        """(n_t, channels, *spatial) copy of all values"""
        return np.stack([f.values for f in self.fields])

    @classmethod
    def from_array(
        cls, values: np.ndarray, dt: float, t0: float = 0.0, spacing: Sequence[float] = ()
    ) -> "Trajectory":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim < 3:
            raise ShapeError(f"trajectory array needs (time, channel, *spatial) axes, got {values.shape}")
        return cls(tuple(Field.from_array(v, spacing) for v in values), dt, t0)

    def window(self, start: int, stop: Optional[int] = None) -> "Trajectory":
        fields = self.fields[start:stop]
        return Trajectory(fields, self.dt, self.t0 + start * self.dt)

    def detach(self) -> "Trajectory":
        return Trajectory(tuple(f.detach() for f in self.fields), self.dt, self.t0)


@dataclass(frozen=True)
class Measurement:
    """
    Sparse observation of a fine Trajectory.

    Coarse node (i, j[, k]) at coarse time m corresponds to fine node
    (s_x * i, s_y * j[, s_z * k]) at fine time index ``temporal_stride * m``.
    """
    data: Trajectory
    spatial_stride: Tuple[int, ...]
    temporal_stride: int = 1
    noise_level: float = 0.0
    noise_seed: Optional[int] = None
    fine_shape: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        stride = tuple(int(s) for s in self.spatial_stride)
        object.__setattr__(self, "spatial_stride", stride)
        if len(stride) != len(self.data.shape):
            raise ShapeError(f"spatial stride {stride} does not match grid rank {len(self.data.shape)}")
        if min(stride) < 1 or self.temporal_stride < 1:
            raise SpecError("strides must be >= 1")
        if self.noise_level < 0:
            raise SpecError("noise level must be >= 0")
        if not self.fine_shape:
            fine = tuple(s * (n - 1) + 1 for s, n in zip(stride, self.data.shape))
            object.__setattr__(self, "fine_shape", fine)

    def __len__(self) -> int:
        return len(self.data)

    @property
    def fine_dt(self) -> float:
        return self.data.dt / self.temporal_stride

    def fine_index(self, m: int) -> int:
        """Fine time index of measurement snapshot m"""
        return self.temporal_stride * m

    @property
    def fine_steps(self) -> int:
        """Number of fine steps spanned by the whole measurement"""
        return self.temporal_stride * (len(self.data) - 1)

    def with_data(self, data: Trajectory, noise_level: float, noise_seed: Optional[int]) -> "Measurement":
        return Measurement(
            data, self.spatial_stride, self.temporal_stride, noise_level, noise_seed, self.fine_shape
        )

    def snapshot(self, m: int) -> Field:
        return self.data[m]
