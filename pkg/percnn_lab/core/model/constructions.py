"""
Hand-built parameter sets and baselines
"""

from typing import Dict, Optional

import numpy as np

from ..errors import SpecError
from ..domain import Trajectory
from .config import HighwayMode, ModelConfig
from .params import ModelParams, layer_name, parameter_shapes


def _center(config: ModelConfig, layer: int) -> tuple:
    radius = (config.layer_size(layer) - 1) // 2
    return (radius,) * config.rank


def identity_isg(config: ModelConfig, arrays: Dict[str, np.ndarray]):
    """ISG reduced to plain interpolation: zero hidden path, identity skip"""
    for name in ("isg.conv1.weight", "isg.conv1.bias", "isg.conv2.weight", "isg.conv2.bias", "isg.out.bias"):
        arrays[name] = np.zeros_like(arrays[name])
    out = np.zeros_like(arrays["isg.out.weight"])
    for c in range(config.state_channels):
        out[(c, c) + (0,) * config.rank] = 1.0
    arrays["isg.out.weight"] = out


def representable_reaction_params(
    config: ModelConfig,
    kappa: float,
    f: float,
    mu_u: float = 0.0,
    mu_v: float = 0.0,
) -> ModelParams:
    """
    Parameters reproducing the Gray-Scott reaction exactly.

    Product channel 0 is u * v * v, channel 1 is u, channel 2 is v (layers past
    the third contribute a constant 1). The aggregation then forms
        R_u = -u v^2 - f u + f
        R_v =  u v^2 - (f + kappa) v
    and the highway carries (mu_u, mu_v) when enabled.
    """
    if config.state_channels != 2:
        raise SpecError("the Gray-Scott reaction needs exactly 2 state channels")
    if config.n_parallel < 3 or config.n_channels < 3:
        raise SpecError("the Gray-Scott reaction needs >= 3 parallel layers and >= 3 channels")
    if config.frozen:
        raise SpecError("hand-built reaction parameters assume no frozen filters")
    if config.highway == HighwayMode.NONE and (mu_u or mu_v):
        raise SpecError("diffusion coefficients given but the highway is disabled")

    arrays = {name: np.zeros(shape) for name, shape in parameter_shapes(config).items()}
    identity_isg(config, arrays)

    u, v = 0, 1
    # (channel, factor per layer): a state index or None for the constant 1
    factors = {0: (u, v, v), 1: (u, None, None), 2: (v, None, None)}
    for layer in range(config.n_parallel):
        w = arrays[f"{layer_name(layer)}.weight"]
        b = arrays[f"{layer_name(layer)}.bias"]
        center = _center(config, layer)
        for channel, sources in factors.items():
            source = sources[layer] if layer < 3 else None
            if source is None:
                b[channel] = 1.0
            else:
                w[(channel, source) + center] = 1.0

    agg = arrays["pi.aggregate.weight"]
    ones = (0,) * config.rank
    agg[(0, 0) + ones] = -1.0
    agg[(0, 1) + ones] = -f
    agg[(1, 0) + ones] = 1.0
    agg[(1, 2) + ones] = -(f + kappa)
    arrays["pi.aggregate.bias"] = np.array([f, 0.0])
    if config.highway == HighwayMode.DIFFUSION:
        arrays["highway.diff_coef"] = np.array([mu_u, mu_v])
    return ModelParams(config, arrays)


def highway_only(params: ModelParams) -> ModelParams:
    """
    Ablation keeping only the diffusion highway.

    The Pi-block aggregation is zeroed so the residual is diff_coef * Laplacian.
    """
    if params.config.highway != HighwayMode.DIFFUSION:
        raise SpecError("highway-only ablation needs the diffusion highway")
    return params.replace({
        "pi.aggregate.weight": np.zeros_like(params["pi.aggregate.weight"]),
        "pi.aggregate.bias": np.zeros_like(params["pi.aggregate.bias"]),
    })


def persistence_baseline(prediction: Trajectory, train_end_index: int, length: Optional[int] = None) -> Trajectory:
    """Hold the snapshot at ``train_end_index`` fixed for every later time"""
    length = len(prediction) if length is None else length
    if not 0 <= train_end_index < len(prediction):
        raise SpecError(f"train_end_index {train_end_index} outside a {len(prediction)}-snapshot trajectory")
    frozen = prediction[train_end_index].detach()
    fields = tuple(
        prediction[k].detach() if k <= train_end_index else frozen for k in range(length)
    )
    return Trajectory(fields, prediction.dt, prediction.t0)
