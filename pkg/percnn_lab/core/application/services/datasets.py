"""
Dataset Service

Produces the clean reference trajectory of a system and the sparse, noisy
measurement drawn from its supervised window.
"""

from typing import Callable, Mapping, Optional, Sequence, Union
import logging

from ...errors import SpecError
from ...domain import Measurement, PdeKind, PdeSystem, Trajectory
from ...model import HighwayMode, ModelConfig, representable_reaction_params, rollout_from_state
from ...model.params import ModelParams
from ...solver import add_noise, generate_trajectory, make_initial_condition, subsample


logger = logging.getLogger(__name__)


def toy_generator_config(dt: float, rank: int = 2) -> ModelConfig:
    """Smallest PeRCNN that carries the Gray-Scott reaction and diffusion exactly"""
    return ModelConfig(
        rank=rank,
        n_parallel=3,
        filter_size=1,
        n_channels=3,
        isg_channels=1,
        isg_filter_size=1,
        dt=dt,
        highway=HighwayMode.DIFFUSION,
    )


def toy_generator_params(system: PdeSystem, dt: float) -> ModelParams:
    p = system.params
    config = toy_generator_config(dt, system.rank)
    return representable_reaction_params(config, p["kappa"], p["f"], p["mu_u"], p["mu_v"])


def generate_reference(
    system: PdeSystem,
    shape: Sequence[int],
    n_steps: int,
    dt: float,
    ic_seed: int,
    ic_options: Optional[Mapping[str, float]] = None,
    progress: Optional[Callable[[int], None]] = None,
) -> Trajectory:
    """
    Clean full-resolution trajectory of ``n_steps`` steps.

    The percnn2d kind is rolled out with forward Euler by a hand-built PeRCNN;
    every other kind is integrated with RK4.
    """
    ic = make_initial_condition(system, tuple(shape), ic_seed, **dict(ic_options or {}))
    if system.kind == PdeKind.PERCNN2D:
        params = toy_generator_params(system, dt)
        traj = rollout_from_state(ic, params, params.config, n_steps)
    else:
        traj = generate_trajectory(system, ic, n_steps, dt, progress=progress)
    logger.info(f"Generated {system.kind.value} reference: {len(traj)} snapshots on {tuple(shape)}")
    return traj.detach()


def measure(
    traj: Trajectory,
    spatial_stride: Union[int, Sequence[int]],
    temporal_stride: int,
    window_steps: int,
    noise_level: float,
    noise_seed: int,
) -> Measurement:
    """Subsample the first ``window_steps`` steps and add relative Gaussian noise"""
    if window_steps >= len(traj):
        raise SpecError(f"window of {window_steps} steps exceeds the {len(traj) - 1}-step trajectory")
    clean = subsample(traj.window(0, window_steps + 1), spatial_stride, temporal_stride)
    m = add_noise(clean, noise_level, noise_seed)
    logger.info(
        f"Measurement: {len(m)} snapshots on {m.data.shape}, strides {m.spatial_stride}/{m.temporal_stride}, "
        f"noise {noise_level:g}"
    )
    return m
