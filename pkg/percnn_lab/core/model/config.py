"""
Model configuration

Pydantic models, validated on construction, serialized verbatim into
checkpoints.
"""

from enum import Enum
from typing import ClassVar, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..domain import FilterRole, FrozenFilter
from ..grid import PadMode, PadSpec


class HighwayMode(str, Enum):
    """Physics-based highway layer added to the Pi-block residual"""
    NONE = "none"
    DIFFUSION = "diffusion"


class FrozenFilterConfig(BaseModel):
    """Pin one parallel-layer output channel to a finite-difference stencil"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    layer: int = Field(ge=0)
    channel: int = Field(ge=0)
    role: FilterRole
    source: int = Field(default=0, ge=0, description="state channel the stencil reads")

    @field_validator("role")
    @classmethod
    def _fixed_role(cls, role: FilterRole) -> FilterRole:
        if role == FilterRole.FREE_AFFINE:
            raise ValueError("frozen filters need a fixed stencil role")
        return role

    def to_domain(self) -> FrozenFilter:
        return FrozenFilter(self.layer, self.channel, self.role, self.source)


class ModelConfig(BaseModel):
    """
    PeRCNN hyperparameters.

    ``n_parallel`` counts the parallel conv layers of the Pi-block (n + 1 in the
    update rule); ``layer_filter_sizes`` overrides ``filter_size`` per layer.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    # steer a run without changing what stored parameters compute
    RUNTIME_FIELDS: ClassVar[FrozenSet[str]] = frozenset(
        {"steps_train", "steps_extrapolate", "init_scale", "diff_coef_init", "divergence_threshold"}
    )

    state_channels: int = Field(default=2, ge=1)
    rank: int = Field(default=2, ge=1, le=3, description="spatial dimensions of the grid")
    n_parallel: int = Field(default=4, ge=2)
    filter_size: int = 5
    layer_filter_sizes: Optional[List[int]] = None
    n_channels: int = Field(default=8, ge=1)
    isg_channels: int = Field(default=8, ge=1)
    isg_filter_size: int = 5
    dt: float = Field(default=2.5e-4, gt=0)
    bc: PadMode = PadMode.PERIODIC
    boundary_values: Optional[List[Tuple[float, float]]] = None
    highway: HighwayMode = HighwayMode.DIFFUSION
    frozen: List[FrozenFilterConfig] = Field(default_factory=list)
    steps_train: int = Field(default=400, ge=0)
    steps_extrapolate: int = Field(default=1200, ge=0)
    init_scale: float = Field(default=0.1, gt=0)
    diff_coef_init: float = 0.05
    divergence_threshold: float = Field(default=1e6, gt=0)

    @field_validator("filter_size", "isg_filter_size")
    @classmethod
    def _odd_size(cls, size: int) -> int:
        if size not in (1, 3, 5):
            raise ValueError(f"filter size must be 1, 3 or 5, got {size}")
        return size

    @model_validator(mode="after")
    def _consistent(self) -> "ModelConfig":
        if self.layer_filter_sizes is not None:
            if len(self.layer_filter_sizes) != self.n_parallel:
                raise ValueError(
                    f"layer_filter_sizes has {len(self.layer_filter_sizes)} entries for {self.n_parallel} layers"
                )
            for size in self.layer_filter_sizes:
                if size not in (1, 3, 5):
                    raise ValueError(f"filter size must be 1, 3 or 5, got {size}")
        seen = set()
        for frozen in self.frozen:
            if frozen.layer >= self.n_parallel:
                raise ValueError(f"frozen filter layer {frozen.layer} >= n_parallel {self.n_parallel}")
            if frozen.channel >= self.n_channels:
                raise ValueError(f"frozen filter channel {frozen.channel} >= n_channels {self.n_channels}")
            if frozen.source >= self.state_channels:
                raise ValueError(f"frozen filter source {frozen.source} >= state_channels")
            if frozen.role in (FilterRole.FIXED_DY, FilterRole.FIXED_DZ) and frozen.role.axis >= self.rank:
                raise ValueError(f"{frozen.role.value} stencil on a {self.rank}-D grid")
            if self.layer_size(frozen.layer) < 5:
                raise ValueError(f"layer {frozen.layer} needs filter size 5 to hold a fourth-order stencil")
            key = (frozen.layer, frozen.channel)
            if key in seen:
                raise ValueError(f"channel {key} frozen twice")
            seen.add(key)
        if (self.bc == PadMode.PERIODIC) != (self.boundary_values is None):
            raise ValueError("boundary_values are required for dirichlet/neumann and forbidden for periodic")
        return self

    def layer_size(self, layer: int) -> int:
        if self.layer_filter_sizes is not None:
            return self.layer_filter_sizes[layer]
        return self.filter_size

    def pad_spec(self) -> PadSpec:
        values = None if self.boundary_values is None else tuple(tuple(v) for v in self.boundary_values)
        return PadSpec(self.bc, 1, values)

    def frozen_filters(self) -> List[FrozenFilter]:
        return [f.to_domain() for f in self.frozen]

    def role_of(self, layer: int, channel: int) -> FilterRole:
        for frozen in self.frozen:
            if frozen.layer == layer and frozen.channel == channel:
                return frozen.role
        return FilterRole.FREE_AFFINE
