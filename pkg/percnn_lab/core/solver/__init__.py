"""
Reference solver: finite differences in space, RK4 in time, and measurement
synthesis.
"""

from .operators import laplacian, first_derivative
from .rhs import burgers_rhs, grayscott_rhs, system_rhs
from .integrator import rk4_step, generate_trajectory
from .sampling import subsample, add_noise
from .initial_conditions import (
    burgers_random_field,
    grayscott_seed_box,
    make_initial_condition,
    grid_coordinates,
)
from .rng import Xoshiro256

__all__ = [
    'laplacian',
    'first_derivative',
    'burgers_rhs',
    'grayscott_rhs',
    'system_rhs',
    'rk4_step',
    'generate_trajectory',
    'subsample',
    'add_noise',
    'burgers_random_field',
    'grayscott_seed_box',
    'make_initial_condition',
    'grid_coordinates',
    'Xoshiro256',
]
