"""
PDE system definitions for reference data generation
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple

from ..errors import SpecError


class PdeKind(Enum):
    """Systems the reference solver can integrate"""
    BURGERS2D = "burgers2d"
    GRAYSCOTT2D = "grayscott2d"
    GRAYSCOTT3D = "grayscott3d"
    PERCNN2D = "percnn2d"  # rollout of a hand-built PeRCNN, for self-consistency runs

    @property
    def rank(self) -> int:
        return 3 if self == PdeKind.GRAYSCOTT3D else 2

    @property
    def tag(self) -> int:
        """Integer tag stored in dataset headers"""
        return _KIND_TAGS[self]

    @classmethod
    def from_tag(cls, tag: int) -> "PdeKind":
        for kind, value in _KIND_TAGS.items():
            if value == tag:
                return kind
        raise SpecError(f"unknown system tag {tag}")


_KIND_TAGS = {
    PdeKind.BURGERS2D: 1,
    PdeKind.GRAYSCOTT2D: 2,
    PdeKind.GRAYSCOTT3D: 3,
    PdeKind.PERCNN2D: 4,
}

STATE_NAMES = ("u", "v")


@dataclass(frozen=True)
class PdeSystem:
    """
    A periodic PDE system on a box domain.

    ``params`` holds ``nu`` for Burgers and ``mu_u``, ``mu_v``, ``kappa``, ``f``
    for Gray-Scott (and for the PeRCNN self-consistency kind).
    """
    kind: PdeKind
    params: Dict[str, float] = field(default_factory=dict)
    domain: Tuple[Tuple[float, float], ...] = ()
    bc: str = "periodic"

    def __post_init__(self):
        if not isinstance(self.kind, PdeKind):
            object.__setattr__(self, "kind", PdeKind(self.kind))
        if not self.domain:
            object.__setattr__(self, "domain", tuple((0.0, 1.0) for _ in range(self.kind.rank)))
        if len(self.domain) != self.kind.rank:
            raise SpecError(f"{self.kind.value} needs {self.kind.rank} domain axes, got {len(self.domain)}")
        for lo, hi in self.domain:
            if not hi > lo:
                raise SpecError(f"domain bounds must be increasing, got ({lo}, {hi})")
        if self.bc != "periodic":
            raise SpecError("reference systems are periodic only")
        if self.kind == PdeKind.BURGERS2D:
            if self.params.get("nu", 0.0) <= 0:
                raise SpecError("Burgers viscosity nu must be > 0")
        else:
            for name in ("mu_u", "mu_v"):
                if self.params.get(name, 0.0) <= 0:
                    raise SpecError(f"Gray-Scott {name} must be > 0")
            for name in ("kappa", "f"):
                if self.params.get(name, -1.0) < 0:
                    raise SpecError(f"Gray-Scott {name} must be >= 0")

    @property
    def rank(self) -> int:
        return self.kind.rank

    @property
    def channels(self) -> int:
        return 2

    def spacing(self, shape: Tuple[int, ...]) -> Tuple[float, ...]:
        """Periodic grid spacing: the right endpoint is the image of the left one"""
        if len(shape) != self.rank:
            raise SpecError(f"grid {shape} does not match a {self.rank}-D system")
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.domain, shape))

    @classmethod
    def burgers(cls, nu: float = 0.005, domain=((-0.5, 0.5), (-0.5, 0.5))) -> "PdeSystem":
        return cls(PdeKind.BURGERS2D, {"nu": nu}, tuple(domain))

    @classmethod
    def grayscott(
        cls,
        rank: int = 3,
        mu_u: float = 0.2,
        mu_v: float = 0.1,
        kappa: float = 0.055,
        f: float = 0.025,
        half_width: float = 50.0,
    ) -> "PdeSystem":
        kind = PdeKind.GRAYSCOTT3D if rank == 3 else PdeKind.GRAYSCOTT2D
        return cls(
            kind,
            {"mu_u": mu_u, "mu_v": mu_v, "kappa": kappa, "f": f},
            tuple((-half_width, half_width) for _ in range(rank)),
        )
