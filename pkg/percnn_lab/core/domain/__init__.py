"""
Domain Models for percnn-lab

This package contains the value types shared by the solver, the model and the
services.
"""

from .system import PdeKind, PdeSystem, STATE_NAMES
from .trajectory import Trajectory, Measurement
from .polynomial import (
    Monomial,
    PolyExpr,
    FilterRole,
    FrozenFilter,
    make_monomial,
    monomial_degree,
    format_monomial,
)
from .reports import Phase, ErrorCurve, EpochRecord, TrainReport
from .training_state import AdamState, TrainingState

__all__ = [
    # Systems
    'PdeKind',
    'PdeSystem',
    'STATE_NAMES',

    # Data
    'Trajectory',
    'Measurement',

    # Interpretation
    'Monomial',
    'PolyExpr',
    'FilterRole',
    'FrozenFilter',
    'make_monomial',
    'monomial_degree',
    'format_monomial',

    # Reports
    'Phase',
    'ErrorCurve',
    'EpochRecord',
    'TrainReport',

    # Training state
    'AdamState',
    'TrainingState',
]
