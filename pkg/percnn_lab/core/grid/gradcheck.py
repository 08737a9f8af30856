"""
Finite-difference gradient checking

Compares reverse-mode adjoints against central differences, entry by entry.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping

import numpy as np

from .tape import Tape, Tensor


LossBuilder = Callable[[Tape, Dict[str, Tensor]], Tensor]


@dataclass
class GradientCheckResult:
    """Per-parameter relative errors of reverse mode vs central differences"""
    analytic: Dict[str, np.ndarray] = field(default_factory=dict)
    numeric: Dict[str, np.ndarray] = field(default_factory=dict)
    relative_error: Dict[str, np.ndarray] = field(default_factory=dict)

    def all_errors(self) -> np.ndarray:
        if not self.relative_error:
            return np.zeros(0)
        return np.concatenate([e.ravel() for e in self.relative_error.values()])

    def fraction_below(self, tolerance: float) -> float:
        errors = self.all_errors()
        return float(np.mean(errors < tolerance)) if errors.size else 1.0

    @property
    def max_error(self) -> float:
        errors = self.all_errors()
        return float(errors.max()) if errors.size else 0.0


def _evaluate(build: LossBuilder, values: Mapping[str, np.ndarray]) -> float:
    tape = Tape()
    params = {name: tape.parameter(value, name) for name, value in values.items()}
    return float(build(tape, params).value)


def gradient_check(
    build: LossBuilder,
    values: Mapping[str, np.ndarray],
    step: float = 1e-5,
    floor: float = 1e-7,
) -> GradientCheckResult:
    """
    Check every entry of every parameter.

    Args:
        build: records the scalar loss on the given tape from the given parameters
        values: parameter arrays keyed by name
        step: central-difference step
        floor: absolute scale below which errors are measured absolutely

    Returns:
        GradientCheckResult; relative error is |a - n| / max(|a|, |n|, floor)
    """
    values = {name: np.array(v, dtype=np.float64) for name, v in values.items()}
    tape = Tape()
    params = {name: tape.parameter(value, name) for name, value in values.items()}
    grads = tape.backward(build(tape, params))

    result = GradientCheckResult()
    for name, base in values.items():
        numeric = np.zeros_like(base)
        for index in np.ndindex(*base.shape):
            shifted = dict(values)
            plus = base.copy()
            plus[index] += step
            shifted[name] = plus
            f_plus = _evaluate(build, shifted)
            minus = base.copy()
            minus[index] -= step
            shifted[name] = minus
            f_minus = _evaluate(build, shifted)
            numeric[index] = (f_plus - f_minus) / (2.0 * step)
        analytic = grads[name]
        scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
        result.analytic[name] = analytic
        result.numeric[name] = numeric
        result.relative_error[name] = np.abs(analytic - numeric) / scale
    return result
