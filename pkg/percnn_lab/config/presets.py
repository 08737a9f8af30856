"""
Named configuration presets

``burgers`` and ``grayscott3d`` follow the published setups; the desk presets
shrink grids and epochs so a run finishes in minutes on a laptop; ``toy``
trains against data produced by a known PeRCNN.
"""

from typing import Any, Dict
import copy


GRAYSCOTT_PARAMS = {"mu_u": 0.2, "mu_v": 0.1, "kappa": 0.055, "f": 0.025}

PRESETS: Dict[str, Dict[str, Any]] = {
    "burgers": {
        "system": {
            "kind": "burgers2d",
            "params": {"nu": 0.005},
            "domain": [[-0.5, 0.5], [-0.5, 0.5]],
            "grid": [101, 101],
            "dt": 2.5e-4,
            "n_steps": 1600,
            "provenance": "published",
        },
        "measurement": {"spatial_stride": 2, "temporal_stride": 40, "window_steps": 400, "noise_level": 0.1},
        "model": {
            "rank": 2,
            "n_parallel": 4,
            "filter_size": 5,
            "n_channels": 8,
            "isg_channels": 8,
            "dt": 2.5e-4,
            "steps_train": 400,
            "steps_extrapolate": 1200,
        },
        "train": {"lr": 0.002, "lam": 1.0, "max_epochs": 5000, "patience": 200},
    },
    "burgers-desk": {
        "system": {
            "kind": "burgers2d",
            "params": {"nu": 0.005},
            "domain": [[-0.5, 0.5], [-0.5, 0.5]],
            "grid": [64, 64],
            "dt": 2.5e-4,
            "n_steps": 400,
            "provenance": "scaled",
        },
        "measurement": {"spatial_stride": 2, "temporal_stride": 20, "window_steps": 200, "noise_level": 0.1},
        "model": {
            "rank": 2,
            "n_parallel": 4,
            "filter_size": 5,
            "n_channels": 8,
            "isg_channels": 8,
            "dt": 2.5e-4,
            "steps_train": 200,
            "steps_extrapolate": 200,
        },
        "train": {"lr": 0.002, "lam": 1.0, "max_epochs": 400, "patience": 80, "log_every": 20},
    },
    "burgers-interpret": {
        "system": {
            "kind": "burgers2d",
            "params": {"nu": 0.005},
            "domain": [[-0.5, 0.5], [-0.5, 0.5]],
            "grid": [64, 64],
            "dt": 2.5e-4,
            "n_steps": 400,
            "provenance": "scaled",
        },
        "measurement": {"spatial_stride": 1, "temporal_stride": 20, "window_steps": 200, "noise_level": 0.0},
        "model": {
            "rank": 2,
            "n_parallel": 2,
            "layer_filter_sizes": [5, 1],
            "n_channels": 4,
            "isg_channels": 4,
            "dt": 2.5e-4,
            "steps_train": 200,
            "steps_extrapolate": 200,
            "frozen": [
                {"layer": 0, "channel": 0, "role": "dx", "source": 0},
                {"layer": 0, "channel": 1, "role": "dy", "source": 0},
                {"layer": 0, "channel": 2, "role": "dx", "source": 1},
                {"layer": 0, "channel": 3, "role": "dy", "source": 1},
            ],
        },
        "train": {"lr": 0.005, "lam": 1.0, "max_epochs": 1500, "patience": 200, "log_every": 50},
    },
    "grayscott3d": {
        "system": {
            "kind": "grayscott3d",
            "params": dict(GRAYSCOTT_PARAMS),
            "domain": [[-50.0, 50.0]] * 3,
            "grid": [49, 49, 49],
            "dt": 0.5,
            "n_steps": 1500,
            "provenance": "published",
        },
        "measurement": {"spatial_stride": 2, "temporal_stride": 15, "window_steps": 300, "noise_level": 0.1},
        "model": {
            "rank": 3,
            "n_parallel": 3,
            "filter_size": 1,
            "n_channels": 8,
            "isg_channels": 8,
            "isg_filter_size": 3,
            "dt": 0.5,
            "steps_train": 300,
            "steps_extrapolate": 700,
        },
        "train": {"lr": 0.005, "lam": 0.5, "max_epochs": 5000, "patience": 200},
    },
    "grayscott-desk": {
        "system": {
            "kind": "grayscott2d",
            "params": dict(GRAYSCOTT_PARAMS),
            "domain": [[-50.0, 50.0]] * 2,
            "grid": [32, 32],
            "dt": 0.5,
            "n_steps": 600,
            "provenance": "scaled",
        },
        "measurement": {"spatial_stride": 1, "temporal_stride": 33, "window_steps": 297, "noise_level": 0.0},
        "model": {
            "rank": 2,
            "n_parallel": 3,
            "filter_size": 1,
            "n_channels": 4,
            "isg_channels": 4,
            "isg_filter_size": 3,
            "dt": 0.5,
            "steps_train": 297,
            "steps_extrapolate": 303,
        },
        "train": {"lr": 0.005, "lam": 0.5, "max_epochs": 1500, "patience": 200, "log_every": 50},
    },
    "toy": {
        "system": {
            "kind": "percnn2d",
            "params": dict(GRAYSCOTT_PARAMS),
            "domain": [[-25.0, 25.0]] * 2,
            "grid": [16, 16],
            "dt": 0.5,
            "n_steps": 60,
            "provenance": "toy",
        },
        "measurement": {"spatial_stride": 1, "temporal_stride": 4, "window_steps": 40, "noise_level": 0.0},
        "model": {
            "rank": 2,
            "n_parallel": 3,
            "filter_size": 1,
            "n_channels": 3,
            "isg_channels": 2,
            "isg_filter_size": 1,
            "dt": 0.5,
            "steps_train": 40,
            "steps_extrapolate": 20,
        },
        "train": {"lr": 0.005, "lam": 1.0, "max_epochs": 3000, "patience": 300, "log_every": 100},
    },
}


def preset(name: str) -> Dict[str, Any]:
    """Deep copy of a preset, safe to mutate with overrides"""
    return copy.deepcopy(PRESETS[name])
