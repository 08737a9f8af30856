"""
Right-hand sides of the reference PDE systems
"""

from typing import Callable

import numpy as np

from ..errors import ShapeError
from ..grid import Field
from ..domain import PdeKind, PdeSystem
from .operators import first_derivative_values, laplacian, laplacian_values, _check_extent


Rhs = Callable[[Field], Field]


def _check_two_channels(state: Field, name: str):
    if state.channels != 2:
        raise ShapeError(f"{name} needs a 2-channel (u, v) state, got {state.channels} channels")


def burgers_rhs(state: Field, nu: float) -> Field:
    """
    2D viscous Burgers: u_t = nu * Δu - (u u_x + v u_y), same for v.
    """
    _check_two_channels(state, "burgers_rhs")
    if state.rank != 2:
        raise ShapeError(f"burgers_rhs needs a 2D grid, got rank {state.rank}")
    for axis in range(2):
        _check_extent(state, axis)
    values = state.values
    u, v = values[0], values[1]
    d_dx = first_derivative_values(values, state.spacing, 0)
    d_dy = first_derivative_values(values, state.spacing, 1)
    advection = u[None] * d_dx + v[None] * d_dy
    out = nu * laplacian_values(values, state.spacing) - advection
    return Field.from_array(out, state.spacing)


def grayscott_rhs(state: Field, mu_u: float, mu_v: float, kappa: float, f: float) -> Field:
    """
    Gray-Scott reaction-diffusion:
    [mu_u Δu - u v^2 + f (1 - u), mu_v Δv + u v^2 - (f + kappa) v]
    """
    _check_two_channels(state, "grayscott_rhs")
    lap = laplacian(state).values
    u, v = state.values[0], state.values[1]
    uvv = u * v * v
    out = np.empty_like(state.values)
    out[0] = mu_u * lap[0] - uvv + f * (1.0 - u)
    out[1] = mu_v * lap[1] + uvv - (f + kappa) * v
    return Field.from_array(out, state.spacing)


def system_rhs(system: PdeSystem) -> Rhs:
    """Bind the system parameters into a state -> rate function"""
    p = system.params
    if system.kind == PdeKind.BURGERS2D:
        return lambda state: burgers_rhs(state, p["nu"])
    return lambda state: grayscott_rhs(state, p["mu_u"], p["mu_v"], p["kappa"], p["f"])
