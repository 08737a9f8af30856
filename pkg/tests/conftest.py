"""
Shared fixtures: a small self-consistent dataset produced by a known PeRCNN.
"""

import pytest

from percnn_lab.core.domain import PdeKind, PdeSystem
from percnn_lab.core.model import ModelConfig
from percnn_lab.core.application.services.datasets import generate_reference, measure


GRAYSCOTT = {"mu_u": 0.2, "mu_v": 0.1, "kappa": 0.055, "f": 0.025}
TOY_DT = 0.5


@pytest.fixture
def toy_system():
    return PdeSystem(PdeKind.PERCNN2D, dict(GRAYSCOTT), ((-25.0, 25.0), (-25.0, 25.0)))


@pytest.fixture
def toy_reference(toy_system):
    """8x8 grid, 12 Euler steps of the hand-built Gray-Scott PeRCNN"""
    return generate_reference(toy_system, (8, 8), 12, TOY_DT, ic_seed=0)


@pytest.fixture
def toy_measurement(toy_reference):
    """Snapshots every 2 steps over the first 8 steps: 5 measurement times"""
    return measure(toy_reference, 1, 2, 8, 0.0, noise_seed=1)


@pytest.fixture
def toy_model_config():
    return ModelConfig(
        rank=2,
        n_parallel=3,
        filter_size=1,
        n_channels=3,
        isg_channels=2,
        isg_filter_size=1,
        dt=TOY_DT,
        steps_train=8,
        steps_extrapolate=4,
    )
