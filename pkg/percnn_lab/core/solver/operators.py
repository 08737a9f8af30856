"""
Periodic finite-difference operators

Fourth-order central differences applied with wrap-around indexing.
"""

from typing import Union

import numpy as np

from ..errors import DimensionError, SpecError
from ..grid import Field
from ..grid.stencils import (
    FIRST_DERIVATIVE_DENOMINATOR,
    FIRST_DERIVATIVE_TAPS,
    SECOND_DERIVATIVE_DENOMINATOR,
    SECOND_DERIVATIVE_TAPS,
    STENCIL_RADIUS,
    STENCIL_SIZE,
)


def _check_extent(f: Field, axis: int):
    if f.shape[axis] < STENCIL_SIZE:
        raise DimensionError(
            f"axis {axis} has extent {f.shape[axis]}, the stencil needs at least {STENCIL_SIZE}"
        )


def _apply_taps(values: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    out = np.zeros_like(values)
    for offset, tap in enumerate(taps):
        if tap == 0.0:
            continue
        # neighbour at i + (offset - radius)
        out += tap * np.roll(values, STENCIL_RADIUS - offset, axis=axis)
    return out


def second_derivative_values(values: np.ndarray, spacing, axis: int) -> np.ndarray:
    """d2/dx2 along spatial ``axis`` of a (C, *spatial) array"""
    dx = spacing[axis]
    return _apply_taps(values, SECOND_DERIVATIVE_TAPS, axis + 1) / (SECOND_DERIVATIVE_DENOMINATOR * dx * dx)


def laplacian_values(values: np.ndarray, spacing) -> np.ndarray:
    out = np.zeros_like(values)
    for axis in range(values.ndim - 1):
        out += second_derivative_values(values, spacing, axis)
    return out


def first_derivative_values(values: np.ndarray, spacing, axis: int) -> np.ndarray:
    dx = spacing[axis]
    return _apply_taps(values, FIRST_DERIVATIVE_TAPS, axis + 1) / (FIRST_DERIVATIVE_DENOMINATOR * dx)


def laplacian(f: Field) -> Field:
    """Sum over axes of the fourth-order second-derivative stencil"""
    for axis in range(f.rank):
        _check_extent(f, axis)
    return Field.from_array(laplacian_values(f.values, f.spacing), f.spacing)


def first_derivative(f: Field, axis: Union[int, str]) -> Field:
    """Fourth-order central first derivative along ``axis`` (0/'x', 1/'y', 2/'z')"""
    if isinstance(axis, str):
        if axis not in "xyz" or len(axis) != 1:
            raise SpecError(f"unknown axis '{axis}'")
        axis = "xyz".index(axis)
    if not 0 <= axis < f.rank:
        raise SpecError(f"axis {axis} out of range for a {f.rank}-D field")
    _check_extent(f, axis)
    return Field.from_array(first_derivative_values(f.values, f.spacing, axis), f.spacing)
