"""
Explicit time integration of the reference systems
"""

from typing import Callable, List, Optional
import logging

import numpy as np

from ..errors import InstabilityError, NonFiniteError, ShapeError, SpecError
from ..grid import Field
from ..domain import PdeKind, PdeSystem, Trajectory
from .rhs import Rhs, system_rhs


logger = logging.getLogger(__name__)


def _stage(state: np.ndarray, rate: Field, factor: float, spacing, step: int) -> Field:
    values = state + factor * rate.values
    if not np.all(np.isfinite(values)):
        raise InstabilityError(f"non-finite RK4 stage at step {step}", step=step)
    return Field.from_array(values, spacing)


def rk4_step(state: Field, rhs: Rhs, dt: float, step: int = 0) -> Field:
    """
    Classical four-stage Runge-Kutta update.

    Raises:
        InstabilityError: an intermediate or the result is not finite
    """
    if not dt > 0:
        raise SpecError(f"dt must be > 0, got {dt}")
    x = state.values
    try:
        k1 = rhs(state)
        k2 = rhs(_stage(x, k1, 0.5 * dt, state.spacing, step))
        k3 = rhs(_stage(x, k2, 0.5 * dt, state.spacing, step))
        k4 = rhs(_stage(x, k3, dt, state.spacing, step))
    except NonFiniteError as e:
        raise InstabilityError(f"non-finite right-hand side at step {step}: {e}", step=step) from e
    out = x + (dt / 6.0) * (k1.values + 2.0 * k2.values + 2.0 * k3.values + k4.values)
    if not np.all(np.isfinite(out)):
        raise InstabilityError(f"non-finite state after step {step}", step=step)
    return Field.from_array(out, state.spacing)


def generate_trajectory(
    system: PdeSystem,
    ic: Field,
    n_steps: int,
    dt: float,
    rhs: Optional[Rhs] = None,
    progress: Optional[Callable[[int], None]] = None,
) -> Trajectory:
    """
    Integrate ``n_steps`` RK4 steps from ``ic``.

    Returns:
        Trajectory of n_steps + 1 snapshots, the IC first

    Raises:
        InstabilityError: carrying the failing step and the last stable index
    """
    if ic.rank != system.rank:
        raise ShapeError(f"{system.kind.value} is {system.rank}-D, initial condition is {ic.rank}-D")
    if ic.channels != system.channels:
        raise ShapeError(f"{system.kind.value} has {system.channels} channels, IC has {ic.channels}")
    if n_steps < 0:
        raise SpecError(f"n_steps must be >= 0, got {n_steps}")
    if system.kind == PdeKind.PERCNN2D and rhs is None:
        raise SpecError("percnn2d data is produced by a model rollout, not by the RK4 solver")
    rhs = rhs or system_rhs(system)

    fields: List[Field] = [ic]
    state = ic
    for step in range(1, n_steps + 1):
        try:
            state = rk4_step(state, rhs, dt, step=step)
        except InstabilityError as e:
            logger.error(f"{system.kind.value} integration unstable at step {step} (last stable {step - 1})")
            raise InstabilityError(str(e), step=step, last_stable=step - 1) from e
        fields.append(state)
        if progress is not None:
            progress(step)
    logger.debug(f"Integrated {system.kind.value} for {n_steps} steps of dt={dt}")
    return Trajectory(tuple(fields), dt, 0.0)
