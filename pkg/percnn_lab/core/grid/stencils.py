"""
Finite-difference stencils

Fourth-order central taps shared by the reference solver and by the frozen
filters of the model, so both discretize the same operator.
"""

from typing import Sequence

import numpy as np

from ..errors import SpecError


# f'' ~ (-f[i-2] + 16 f[i-1] - 30 f[i] + 16 f[i+1] - f[i+2]) / (12 dx^2)
SECOND_DERIVATIVE_TAPS = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])
SECOND_DERIVATIVE_DENOMINATOR = 12.0

# f' ~ (f[i-2] - 8 f[i-1] + 8 f[i+1] - f[i+2]) / (12 dx)
FIRST_DERIVATIVE_TAPS = np.array([1.0, -8.0, 0.0, 8.0, -1.0])
FIRST_DERIVATIVE_DENOMINATOR = 12.0

STENCIL_SIZE = 5
STENCIL_RADIUS = 2


def laplacian_kernel(spacing: Sequence[float]) -> np.ndarray:
    """Cross-shaped 5^rank kernel of the fourth-order Laplacian"""
    rank = len(spacing)
    kernel = np.zeros((STENCIL_SIZE,) * rank, dtype=np.float64)
    for axis, dx in enumerate(spacing):
        index = [STENCIL_RADIUS] * rank
        for offset, tap in enumerate(SECOND_DERIVATIVE_TAPS):
            index[axis] = offset
            kernel[tuple(index)] += tap / (SECOND_DERIVATIVE_DENOMINATOR * dx * dx)
    return kernel


def derivative_kernel(spacing: Sequence[float], axis: int) -> np.ndarray:
    """5^rank kernel of the fourth-order first derivative along ``axis``"""
    rank = len(spacing)
    if not 0 <= axis < rank:
        raise SpecError(f"axis {axis} out of range for a {rank}-D grid")
    kernel = np.zeros((STENCIL_SIZE,) * rank, dtype=np.float64)
    index = [STENCIL_RADIUS] * rank
    for offset, tap in enumerate(FIRST_DERIVATIVE_TAPS):
        index[axis] = offset
        kernel[tuple(index)] = tap / (FIRST_DERIVATIVE_DENOMINATOR * spacing[axis])
    return kernel


def diagonal_bank(kernel: np.ndarray, channels: int) -> np.ndarray:
    """(C, C, k...) filter bank applying ``kernel`` to each channel independently"""
    bank = np.zeros((channels, channels) + kernel.shape, dtype=np.float64)
    for c in range(channels):
        bank[c, c] = kernel
    return bank


def embed_kernel(kernel: np.ndarray, size: int) -> np.ndarray:
    """Zero-pad a centred kernel to a larger odd size"""
    if size < kernel.shape[0] or size % 2 == 0:
        raise SpecError(f"cannot embed a {kernel.shape[0]}-wide kernel into size {size}")
    margin = (size - kernel.shape[0]) // 2
    return np.pad(kernel, margin)
