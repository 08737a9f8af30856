"""
Fields and boundary padding

A Field is one multi-channel snapshot on a regular Cartesian grid. Its values
live in a Tensor so the same type flows through data generation (untracked)
and training (tracked on a Tape).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionError, NonFiniteError, ShapeError, SpecError
from .tape import Tensor, TensorLike, as_tensor


class PadMode(Enum):
    """Boundary condition used to fill ghost cells"""
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


FaceValues = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class PadSpec:
    """
    Physics-based padding.

    ``boundary_values`` holds one (low, high) pair per spatial axis: prescribed
    values for dirichlet, prescribed outward normal gradients for neumann. A
    single float is broadcast to every face.
    """
    mode: PadMode = PadMode.PERIODIC
    width: int = 1
    boundary_values: Optional[Union[float, FaceValues]] = None

    def __post_init__(self):
        if not isinstance(self.mode, PadMode):
            object.__setattr__(self, "mode", PadMode(self.mode))
        if self.width < 1:
            raise SpecError(f"pad width must be >= 1, got {self.width}")
        if self.mode == PadMode.PERIODIC and self.boundary_values is not None:
            raise SpecError("periodic padding takes no boundary values")
        if self.mode != PadMode.PERIODIC and self.boundary_values is None:
            raise SpecError(f"{self.mode.value} padding requires boundary_values")

    @classmethod
    def periodic(cls, width: int = 1) -> "PadSpec":
        return cls(PadMode.PERIODIC, width)

    def with_width(self, width: int) -> "PadSpec":
        return PadSpec(self.mode, width, self.boundary_values)

    def faces(self, rank: int) -> FaceValues:
        """Per-axis (low, high) boundary values"""
        values = self.boundary_values
        if values is None:
            return tuple((0.0, 0.0) for _ in range(rank))
        if isinstance(values, (int, float)):
            return tuple((float(values), float(values)) for _ in range(rank))
        faces = tuple((float(lo), float(hi)) for lo, hi in values)
        if len(faces) != rank:
            raise SpecError(f"boundary_values has {len(faces)} axes, grid has {rank}")
        return faces


@dataclass(frozen=True)
class Field:
    """
    Multi-channel state snapshot.

    ``data`` has shape (channels, *spatial) with spatial axes ordered (x, y[, z]);
    ``spacing`` is the physical grid spacing per spatial axis.
    """
    data: Tensor
    spacing: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        data = as_tensor(self.data)
        object.__setattr__(self, "data", data)
        if data.ndim < 2:
            raise DimensionError(f"a Field needs a channel axis and at least one spatial axis, got shape {data.shape}")
        if min(data.shape) < 1:
            raise DimensionError(f"all extents must be >= 1, got {data.shape}")
        spacing = tuple(float(s) for s in self.spacing) if self.spacing else (1.0,) * (data.ndim - 1)
        if len(spacing) != data.ndim - 1:
            raise ShapeError(f"spacing has {len(spacing)} entries for {data.ndim - 1} spatial axes")
        if any(s <= 0 for s in spacing):
            raise SpecError(f"grid spacing must be positive, got {spacing}")
        object.__setattr__(self, "spacing", spacing)
        if not np.all(np.isfinite(data.value)):
            raise NonFiniteError("Field values must be finite")

    @classmethod
    def from_array(cls, values: TensorLike, spacing: Sequence[float] = ()) -> "Field":
        return cls(as_tensor(values), tuple(spacing))

    @property
    def values(self) -> np.ndarray:
        return self.data.value

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> Tuple[int, ...]:
        """Spatial extents"""
        return self.data.shape[1:]

    @property
    def rank(self) -> int:
        return len(self.shape)

    @property
    def tracked(self) -> bool:
        return self.data.tracked

    def with_data(self, data: Tensor) -> "Field":
        return Field(data, self.spacing)

    def detach(self) -> "Field":
        return Field(self.data.detach(), self.spacing)

    def same_grid(self, other: "Field") -> bool:
        return self.data.shape == other.data.shape
