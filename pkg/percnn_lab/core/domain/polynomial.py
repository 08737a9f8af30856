"""
Polynomial expressions extracted from a trained Pi-block

A monomial is a sorted tuple of (symbol, power) pairs; the empty tuple is the
constant term. Symbols are state names (``u``, ``v``) and derivative symbols
(``Δu``, ``u_x``, ``v_y``, ...).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from ..errors import SpecError


Monomial = Tuple[Tuple[str, int], ...]
Number = Union[float, np.ndarray]


class FilterRole(Enum):
    """What a parallel-layer output channel computes"""
    FREE_AFFINE = "free"
    FIXED_DX = "dx"
    FIXED_DY = "dy"
    FIXED_DZ = "dz"
    FIXED_LAPLACIAN = "laplacian"

    @property
    def axis(self) -> int:
        return {FilterRole.FIXED_DX: 0, FilterRole.FIXED_DY: 1, FilterRole.FIXED_DZ: 2}[self]

    def symbol(self, state: str) -> str:
        if self == FilterRole.FIXED_LAPLACIAN:
            return f"Δ{state}"
        if self == FilterRole.FREE_AFFINE:
            return state
        return f"{state}_{'xyz'[self.axis]}"


@dataclass(frozen=True)
class FrozenFilter:
    """A parallel-layer channel pinned to a finite-difference stencil of one state channel"""
    layer: int
    channel: int
    role: FilterRole
    source: int

    def __post_init__(self):
        if not isinstance(self.role, FilterRole):
            object.__setattr__(self, "role", FilterRole(self.role))
        if self.role == FilterRole.FREE_AFFINE:
            raise SpecError("a frozen filter needs a fixed stencil role")


def make_monomial(powers: Mapping[str, int]) -> Monomial:
    return tuple(sorted((s, int(p)) for s, p in powers.items() if p))


def monomial_degree(monomial: Monomial) -> int:
    return sum(p for _, p in monomial)


def format_monomial(monomial: Monomial) -> str:
    if not monomial:
        return "1"
    return "·".join(s if p == 1 else f"{s}^{p}" for s, p in monomial)


def format_coefficient(value: float) -> str:
    """Four significant digits"""
    return f"{value:.4g}"


@dataclass
class PolyExpr:
    """One output channel of an extracted right-hand side"""
    channel: str
    terms: Dict[Monomial, float] = field(default_factory=dict)

    def __post_init__(self):
        self.terms = {m: float(c) for m, c in self.terms.items() if c != 0.0}

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient(self, *factors: str) -> float:
        """Coefficient of the monomial formed by the given factors, e.g. ('u', 'v', 'v')"""
        powers: Dict[str, int] = {}
        for name in factors:
            powers[name] = powers.get(name, 0) + 1
        return self.terms.get(make_monomial(powers), 0.0)

    @property
    def symbols(self) -> List[str]:
        return sorted({s for m in self.terms for s, _ in m})

    @property
    def degree(self) -> int:
        return max((monomial_degree(m) for m in self.terms), default=0)

    def sorted_terms(self) -> List[Tuple[Monomial, float]]:
        """Terms by decreasing |coefficient|, ties broken by monomial text"""
        return sorted(self.terms.items(), key=lambda item: (-abs(item[1]), format_monomial(item[0])))

    def evaluate(self, values: Mapping[str, Number]) -> Number:
        result: Number = 0.0
        for monomial, coef in self.terms.items():
            term: Number = coef
            for symbol, power in monomial:
                if symbol not in values:
                    raise SpecError(f"no value supplied for symbol '{symbol}'")
                term = term * np.asarray(values[symbol], dtype=np.float64) ** power
            result = result + term
        return result

    def format(self) -> str:
        parts = []
        for monomial, coef in self.sorted_terms():
            text = format_coefficient(abs(coef))
            if not monomial:
                body = text
            elif text == "1":
                body = format_monomial(monomial)
            else:
                body = f"{text}{format_monomial(monomial)}"
            sign = "-" if coef < 0 else "+"
            parts.append((sign, body))
        if not parts:
            return f"{self.channel}_t = 0"
        first_sign, first_body = parts[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return f"{self.channel}_t = {text}"

    def rows(self) -> Iterable[Tuple[str, str, float]]:
        for monomial, coef in self.sorted_terms():
            yield self.channel, format_monomial(monomial), coef
