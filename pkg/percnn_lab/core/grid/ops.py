"""
Differentiable grid operations

Padding, N-D convolution, elementwise product, residual update and
interpolation on Fields. Each operation records its adjoint when any input is
tracked, so gradients flow to fields, filters and biases alike.
"""

from typing import List, Sequence, Tuple
import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, ShapeError, SpecError
from .field import Field, PadMode, PadSpec
from .tape import Tensor, TensorLike, as_tensor, record
from . import tape as T


logger = logging.getLogger(__name__)


def _axis_slice(ndim: int, axis: int, sl: slice) -> Tuple[slice, ...]:
    index = [slice(None)] * ndim
    index[axis] = sl
    return tuple(index)


def _check_pad(f: Field, spec: PadSpec):
    if spec.width > min(f.shape):
        raise DimensionError(
            f"pad width {spec.width} exceeds smallest spatial extent {min(f.shape)}"
        )


def _pad_forward(x: np.ndarray, spec: PadSpec, spacing: Tuple[float, ...]) -> np.ndarray:
    rank = x.ndim - 1
    faces = spec.faces(rank)
    w = spec.width
    for axis in range(rank):
        ax = axis + 1
        widths = [(0, 0)] * x.ndim
        widths[ax] = (w, w)
        n = x.shape[ax]
        if spec.mode == PadMode.PERIODIC:
            x = np.pad(x, widths, mode="wrap")
        elif spec.mode == PadMode.DIRICHLET:
            x = np.pad(x, widths, mode="constant")
            x[_axis_slice(x.ndim, ax, slice(0, w))] = faces[axis][0]
            x[_axis_slice(x.ndim, ax, slice(n + w, n + 2 * w))] = faces[axis][1]
        else:
            x = np.pad(x, widths, mode="edge")
            shape = [1] * x.ndim
            shape[ax] = w
            dx = spacing[axis]
            # ghost at distance d from the boundary cell: g = u_b + d * dx * q
            low = (np.arange(w, 0, -1, dtype=np.float64) * dx * faces[axis][0]).reshape(shape)
            high = (np.arange(1, w + 1, dtype=np.float64) * dx * faces[axis][1]).reshape(shape)
            x[_axis_slice(x.ndim, ax, slice(0, w))] += low
            x[_axis_slice(x.ndim, ax, slice(n + w, n + 2 * w))] += high
    return x


def _pad_adjoint(g: np.ndarray, spec: PadSpec, core_shape: Tuple[int, ...]) -> np.ndarray:
    w = spec.width
    for axis in reversed(range(len(core_shape))):
        ax = axis + 1
        n = core_shape[axis]
        grad = np.array(g[_axis_slice(g.ndim, ax, slice(w, w + n))])
        low = g[_axis_slice(g.ndim, ax, slice(0, w))]
        high = g[_axis_slice(g.ndim, ax, slice(n + w, n + 2 * w))]
        if spec.mode == PadMode.PERIODIC:
            grad[_axis_slice(g.ndim, ax, slice(n - w, n))] += low
            grad[_axis_slice(g.ndim, ax, slice(0, w))] += high
        elif spec.mode == PadMode.NEUMANN:
            grad[_axis_slice(g.ndim, ax, slice(0, 1))] += low.sum(axis=ax, keepdims=True)
            grad[_axis_slice(g.ndim, ax, slice(n - 1, n))] += high.sum(axis=ax, keepdims=True)
        g = grad
    return g


def pad(f: Field, spec: PadSpec) -> Field:
    """
    Fill ``spec.width`` ghost cells on every face of every spatial axis.

    Periodic copies wrap-around cells, dirichlet writes the prescribed value,
    neumann extrapolates so that (ghost - boundary) / dx equals the prescribed
    outward normal gradient.
    """
    _check_pad(f, spec)
    core_shape = f.shape
    out = _pad_forward(f.values, spec, f.spacing)
    data = record(out, (f.data,), lambda g: (_pad_adjoint(g, spec, core_shape),))
    return Field(data, f.spacing)


def interior(f: Field, width: int) -> Field:
    """Inverse of pad: strip ``width`` cells from every face"""
    index = (slice(None),) + tuple(slice(width, n - width) for n in f.shape)
    return Field(T.take(f.data, index), f.spacing)


def conv(f: Field, filters: TensorLike, biases: TensorLike, pad_spec: PadSpec) -> Field:
    """
    Same-size N-D cross-correlation.

    Args:
        f: input field with C_in channels
        filters: (C_out, C_in, k, ..., k) with odd k
        biases: (C_out,)
        pad_spec: boundary condition used to pre-pad by (k - 1) / 2

    Returns:
        Field with C_out channels and the extents of ``f``
    """
    w = as_tensor(filters)
    b = as_tensor(biases)
    rank = f.rank
    if w.ndim != rank + 2:
        raise ShapeError(f"filters must have {rank + 2} axes for a {rank}-D field, got {w.shape}")
    c_out, c_in = w.shape[:2]
    kernel = w.shape[2:]
    if c_in != f.channels:
        raise ShapeError(f"filter expects {c_in} input channels, field has {f.channels}")
    if len(set(kernel)) != 1 or kernel[0] % 2 == 0:
        raise SpecError(f"filter spatial size must be odd and isotropic, got {kernel}")
    if b.shape != (c_out,):
        raise ShapeError(f"biases must have shape ({c_out},), got {b.shape}")

    radius = (kernel[0] - 1) // 2
    padded = pad(f, pad_spec.with_width(radius)) if radius > 0 else f
    xp = padded.values
    spatial = tuple(range(1, rank + 1))
    windows = sliding_window_view(xp, kernel, axis=spatial)
    kernel_axes_w = tuple(range(2, rank + 2))
    kernel_axes_x = tuple(range(rank + 1, 2 * rank + 1))

    out = np.tensordot(w.value, windows, axes=((1,) + kernel_axes_w, (0,) + kernel_axes_x))
    out = out + b.value.reshape((c_out,) + (1,) * rank)

    wv = w.value
    core = f.shape

    def vjp(g):
        grad_w = np.tensordot(g, windows, axes=(spatial, spatial))
        grad_b = g.sum(axis=spatial)
        grad_x = np.zeros(xp.shape, dtype=np.float64)
        for offset in np.ndindex(*kernel):
            index = (slice(None),) + tuple(slice(o, o + n) for o, n in zip(offset, core))
            grad_x[index] += np.tensordot(wv[(slice(None), slice(None)) + offset], g, axes=((0,), (0,)))
        return grad_x, grad_w, grad_b

    data = record(out, (padded.data, w, b), vjp)
    return Field(data, f.spacing)


def elementwise_product(fs: Sequence[Field]) -> Field:
    """Per-cell, per-channel product of two or more fields"""
    fs = list(fs)
    if len(fs) < 2:
        raise SpecError(f"elementwise_product needs at least 2 fields, got {len(fs)}")
    for other in fs[1:]:
        if not fs[0].same_grid(other):
            raise ShapeError(
                f"elementwise_product: shape mismatch {fs[0].data.shape} vs {other.data.shape}"
            )
    values = [f.values for f in fs]
    # prefix[i] = prod(values[:i]), suffix[i] = prod(values[i+1:])
    prefix = [np.ones_like(values[0])]
    for v in values[:-1]:
        prefix.append(prefix[-1] * v)
    suffix = [np.ones_like(values[0])]
    for v in reversed(values[1:]):
        suffix.append(suffix[-1] * v)
    suffix.reverse()
    out = prefix[-1] * values[-1]

    def vjp(g):
        return tuple(g * prefix[i] * suffix[i] for i in range(len(values)))

    data = record(out, tuple(f.data for f in fs), vjp)
    return Field(data, fs[0].spacing)


def axpy(base: Field, delta: Field, scale: float) -> Field:
    """base + scale * delta"""
    if not base.same_grid(delta):
        raise ShapeError(f"axpy: shape mismatch {base.data.shape} vs {delta.data.shape}")
    return Field(T.add_scaled(base.data, delta.data, scale), base.spacing)


def add(a: Field, b: Field) -> Field:
    if not a.same_grid(b):
        raise ShapeError(f"add: shape mismatch {a.data.shape} vs {b.data.shape}")
    return Field(T.add(a.data, b.data), a.spacing)


def tanh(f: Field) -> Field:
    return Field(T.tanh(f.data), f.spacing)


def concat_channels(fs: Sequence[Field]) -> Field:
    fs = list(fs)
    for other in fs[1:]:
        if other.shape != fs[0].shape:
            raise ShapeError(f"concat_channels: extents {fs[0].shape} vs {other.shape}")
    return Field(T.concat([f.data for f in fs], axis=0), fs[0].spacing)


def scale_channels(f: Field, coefficients: TensorLike) -> Field:
    """Multiply channel c by coefficients[c]"""
    coef = as_tensor(coefficients)
    if coef.shape != (f.channels,):
        raise ShapeError(f"scale_channels: need ({f.channels},) coefficients, got {coef.shape}")
    shape = (f.channels,) + (1,) * f.rank
    x = f.values
    c = coef.value.reshape(shape)
    spatial = tuple(range(1, f.rank + 1))

    def vjp(g):
        return g * c, np.sum(g * x, axis=spatial)

    return Field(record(x * c, (f.data, coef), vjp), f.spacing)


# --- interpolation ------------------------------------------------------------

class Alignment:
    """How coarse nodes sit on the fine grid"""
    ENDPOINT = "endpoint"
    PERIODIC = "periodic"


def interpolation_matrix(n_source: int, n_target: int, alignment: str = Alignment.ENDPOINT) -> np.ndarray:
    """
    Dense (n_target, n_source) linear interpolation operator.

    Endpoint alignment maps target node j to source coordinate
    j * (n_s - 1) / (n_t - 1); periodic alignment maps it to j * n_s / n_t and
    wraps past the last source node. Positions are computed in integer
    arithmetic, so coincident nodes get weight exactly 1.
    """
    if n_target < n_source:
        raise SpecError(f"upsample cannot shrink an axis ({n_source} -> {n_target})")
    matrix = np.zeros((n_target, n_source), dtype=np.float64)
    if n_source == 1:
        matrix[:, 0] = 1.0
        return matrix
    if alignment == Alignment.PERIODIC:
        num, den = n_source, n_target
    elif alignment == Alignment.ENDPOINT:
        if n_target == 1:
            matrix[0, 0] = 1.0
            return matrix
        num, den = n_source - 1, n_target - 1
    else:
        raise SpecError(f"unknown alignment '{alignment}'")
    for j in range(n_target):
        i0, rem = divmod(j * num, den)
        frac = rem / den
        if rem == 0:
            matrix[j, i0 % n_source] = 1.0
            continue
        matrix[j, i0 % n_source] += 1.0 - frac
        matrix[j, (i0 + 1) % n_source] += frac
    return matrix


def _apply_along(x: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(matrix, x, axes=((1,), (axis,))), 0, axis)


def upsample(f: Field, target_shape: Sequence[int], alignment: str = Alignment.ENDPOINT) -> Field:
    """
    Bilinear (2D) / trilinear (3D) interpolation onto a finer grid.

    The resulting spacing scales each axis by the ratio of node intervals.
    """
    target_shape = tuple(int(n) for n in target_shape)
    if len(target_shape) != f.rank:
        raise ShapeError(f"target shape {target_shape} has wrong rank for field {f.shape}")
    if any(t < s for t, s in zip(target_shape, f.shape)):
        raise SpecError(f"upsample cannot shrink {f.shape} to {target_shape}; subsample instead")
    matrices = [interpolation_matrix(s, t, alignment) for s, t in zip(f.shape, target_shape)]

    out = f.values
    for axis, matrix in enumerate(matrices):
        out = _apply_along(out, matrix, axis + 1)

    def vjp(g):
        for axis, matrix in reversed(list(enumerate(matrices))):
            g = _apply_along(g, matrix.T, axis + 1)
        return (g,)

    spacing = []
    for dx, s, t in zip(f.spacing, f.shape, target_shape):
        if alignment == Alignment.PERIODIC:
            spacing.append(dx * s / t)
        else:
            spacing.append(dx * (s - 1) / (t - 1) if t > 1 else dx)
    return Field(record(out, (f.data,), vjp), tuple(spacing))


def infer_alignment(fine_shape: Sequence[int], coarse_shape: Sequence[int], strides: Sequence[int]) -> str:
    """Pick the alignment under which coarse node i sits on fine node stride * i"""
    if all((n - 1) == s * (c - 1) for n, c, s in zip(fine_shape, coarse_shape, strides)):
        return Alignment.ENDPOINT
    if all(n == s * c for n, c, s in zip(fine_shape, coarse_shape, strides)):
        return Alignment.PERIODIC
    raise ShapeError(
        f"coarse grid {tuple(coarse_shape)} with strides {tuple(strides)} is not a subsample of {tuple(fine_shape)}"
    )
