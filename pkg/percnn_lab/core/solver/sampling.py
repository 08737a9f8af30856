"""
Measurement synthesis: subsampling and noise
"""

from typing import Sequence, Tuple, Union
import logging

import numpy as np

from ..errors import SpecError
from ..grid import Field
from ..domain import Measurement, Trajectory
from .rng import Xoshiro256


logger = logging.getLogger(__name__)


def _normalize_stride(stride: Union[int, Sequence[int]], rank: int) -> Tuple[int, ...]:
    if isinstance(stride, int):
        return (stride,) * rank
    stride = tuple(int(s) for s in stride)
    if len(stride) != rank:
        raise SpecError(f"spatial stride {stride} does not match grid rank {rank}")
    return stride


def subsample(
    traj: Trajectory,
    spatial_stride: Union[int, Sequence[int]],
    temporal_stride: int,
) -> Measurement:
    """
    Keep every ``spatial_stride``-th node and every ``temporal_stride``-th snapshot.

    A spatial stride must either include both endpoints ((N - 1) % s == 0) or
    tile the periodic grid (N % s == 0), the same way on every axis. The
    temporal stride must divide the number of steps so the final snapshot is
    kept.
    """
    stride = _normalize_stride(spatial_stride, len(traj.shape))
    if min(stride) < 1 or temporal_stride < 1:
        raise SpecError("strides must be >= 1")
    for n, s in zip(traj.shape, stride):
        if (n - 1) % s != 0 and n % s != 0:
            raise SpecError(f"spatial stride {s} does not divide an axis of extent {n}")
    endpoint = all((n - 1) % s == 0 for n, s in zip(traj.shape, stride))
    periodic = all(n % s == 0 for n, s in zip(traj.shape, stride))
    if not (endpoint or periodic):
        raise SpecError(
            f"spatial stride {stride} keeps the endpoints of some axes of {traj.shape} and tiles others; "
            f"all axes must align the same way"
        )
    steps = len(traj) - 1
    if steps % temporal_stride != 0:
        raise SpecError(f"temporal stride {temporal_stride} does not divide {steps} steps")

    index = (slice(None),) + tuple(slice(None, None, s) for s in stride)
    spacing = tuple(dx * s for dx, s in zip(traj.spacing, stride))
    fields = tuple(
        Field.from_array(traj[k].values[index], spacing)
        for k in range(0, len(traj), temporal_stride)
    )
    data = Trajectory(fields, traj.dt * temporal_stride, traj.t0)
    return Measurement(data, stride, temporal_stride, 0.0, None, traj.shape)


def add_noise(m: Measurement, level: float, seed: int) -> Measurement:
    """
    Add zero-mean Gaussian noise with standard deviation ``level * sigma_c``
    per channel, sigma_c being that channel's standard deviation over the whole
    measurement.
    """
    if level < 0:
        raise SpecError(f"noise level must be >= 0, got {level}")
    if level == 0:
        return m
    clean = m.data.to_array()
    sigma = clean.std(axis=tuple(i for i in range(clean.ndim) if i != 1))
    rng = Xoshiro256(seed)
    draws = rng.normal(clean.shape)
    shape = (1, clean.shape[1]) + (1,) * (clean.ndim - 2)
    noisy = clean + level * sigma.reshape(shape) * draws
    logger.debug(f"Added {level:.3g} relative noise (sigma per channel {sigma.tolist()}) with seed {seed}")
    data = Trajectory.from_array(noisy, m.data.dt, m.data.t0, m.data.spacing)
    return m.with_data(data, level, seed)
