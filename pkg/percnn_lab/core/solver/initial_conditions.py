"""
Seeded initial conditions for the reference systems
"""

from typing import Sequence, Tuple
import itertools

import numpy as np

from ..errors import SpecError
from ..grid import Field
from ..domain import PdeKind, PdeSystem
from .rng import Xoshiro256


def grid_coordinates(system: PdeSystem, shape: Sequence[int]) -> Tuple[np.ndarray, ...]:
    """Node coordinates per axis, left endpoint included, right endpoint excluded"""
    spacing = system.spacing(tuple(shape))
    return tuple(lo + dx * np.arange(n) for (lo, _), dx, n in zip(system.domain, spacing, shape))


def burgers_random_field(
    system: PdeSystem,
    shape: Sequence[int],
    seed: int,
    k_max: int = 4,
    amplitude: float = 1.0,
) -> Field:
    """
    Band-limited random velocity field.

    Each channel is a sum of Fourier modes with |k_x|, |k_y| <= k_max, Gaussian
    coefficients damped by 1 / (1 + |k|^2), normalized to max |value| = amplitude.
    """
    shape = tuple(shape)
    if k_max < 1:
        raise SpecError("k_max must be >= 1")
    rng = Xoshiro256(seed)
    coords = grid_coordinates(system, shape)
    lengths = [hi - lo for lo, hi in system.domain]
    mesh = np.meshgrid(*coords, indexing="ij")
    channels = []
    for _ in range(system.channels):
        values = np.zeros(shape, dtype=np.float64)
        for k in itertools.product(range(-k_max, k_max + 1), repeat=len(shape)):
            if not any(k):
                continue
            a, b = rng.normal(2)
            phase = sum(2.0 * np.pi * ki * xi / L for ki, xi, L in zip(k, mesh, lengths))
            damping = 1.0 / (1.0 + float(np.dot(k, k)))
            values += damping * (a * np.cos(phase) + b * np.sin(phase))
        peak = np.max(np.abs(values))
        channels.append(values * (amplitude / peak) if peak > 0 else values)
    return Field.from_array(np.stack(channels), system.spacing(shape))


def grayscott_seed_box(
    system: PdeSystem,
    shape: Sequence[int],
    seed: int,
    box_fraction: float = 0.2,
    noise: float = 0.01,
) -> Field:
    """
    u = 1, v = 0 everywhere except a centred box where u = 0.5, v = 0.25,
    plus seeded Gaussian noise of standard deviation ``noise``.
    """
    shape = tuple(shape)
    if not 0 < box_fraction <= 1:
        raise SpecError(f"box_fraction must be in (0, 1], got {box_fraction}")
    u = np.ones(shape, dtype=np.float64)
    v = np.zeros(shape, dtype=np.float64)
    box = tuple(
        slice(int(round(n * (1 - box_fraction) / 2)), int(round(n * (1 + box_fraction) / 2)))
        for n in shape
    )
    u[box] = 0.5
    v[box] = 0.25
    if noise > 0:
        rng = Xoshiro256(seed)
        u += noise * rng.normal(shape)
        v += noise * rng.normal(shape)
    return Field.from_array(np.stack([u, v]), system.spacing(shape))


def make_initial_condition(system: PdeSystem, shape: Sequence[int], seed: int, **options) -> Field:
    """Default initial condition for a system kind"""
    if len(tuple(shape)) != system.rank:
        raise SpecError(f"grid {tuple(shape)} does not match a {system.rank}-D system")
    if system.kind == PdeKind.BURGERS2D:
        return burgers_random_field(system, shape, seed, **options)
    return grayscott_seed_box(system, shape, seed, **options)
