"""
PeRCNN forward pass

Initial-state generator, Pi-block residual, highway diffusion and the
forward-Euler rollout. Every function takes its parameters as a mapping of
name to array or Tensor: pass ``ModelParams`` for inference and the output of
``ModelParams.on_tape`` for training, the code path is the same.
"""

from typing import List, Mapping, Sequence, Tuple
import logging

import numpy as np

from ..errors import DimensionError, DivergenceError, NonFiniteError, ShapeError, SpecError
from ..domain import Trajectory
from ..grid import (
    Field,
    PadSpec,
    as_tensor,
    axpy,
    add,
    concat_channels,
    conv,
    elementwise_product,
    infer_alignment,
    scale_channels,
    tanh,
    upsample,
)
from ..grid import tape as T
from ..grid.tape import TensorLike
from ..grid.stencils import STENCIL_SIZE, diagonal_bank, laplacian_kernel
from .config import HighwayMode, ModelConfig
from .params import frozen_layout, layer_name


logger = logging.getLogger(__name__)

Params = Mapping[str, TensorLike]


def _check_state(state: Field, config: ModelConfig, what: str):
    if state.channels != config.state_channels:
        raise ShapeError(f"{what}: model has {config.state_channels} state channels, field has {state.channels}")
    if state.rank != config.rank:
        raise ShapeError(f"{what}: model is {config.rank}-D, field is {state.rank}-D")


def layer_filters(params: Params, config: ModelConfig, layer: int, spacing: Tuple[float, ...]):
    """Effective (weights, biases) of one parallel layer, frozen stencils blended in"""
    name = layer_name(layer)
    w, b = as_tensor(params[f"{name}.weight"]), as_tensor(params[f"{name}.bias"])
    layout = frozen_layout(config, layer, spacing)
    if layout is None:
        return w, b
    w_mask, w_fixed, b_mask = layout
    return T.masked_blend(w, w_mask, w_fixed), T.masked_blend(b, b_mask, np.zeros(b.shape))


def isg_forward(
    coarse: Field,
    params: Params,
    config: ModelConfig,
    fine_shape: Sequence[int],
    strides: Sequence[int],
) -> Field:
    """
    Map a low-resolution snapshot to the full-resolution initial state.

    Upsample, two tanh conv layers, then a 1x1 conv over the upsampled input
    concatenated with the hidden features.

    Raises:
        ShapeError: the coarse grid is not a stride-subsample of ``fine_shape``
    """
    _check_state(coarse, config, "isg_forward")
    alignment = infer_alignment(fine_shape, coarse.shape, strides)
    pad_spec = config.pad_spec()
    up = upsample(coarse, fine_shape, alignment)
    hidden = tanh(conv(up, params["isg.conv1.weight"], params["isg.conv1.bias"], pad_spec))
    hidden = tanh(conv(hidden, params["isg.conv2.weight"], params["isg.conv2.bias"], pad_spec))
    return conv(concat_channels([up, hidden]), params["isg.out.weight"], params["isg.out.bias"], pad_spec)


def product_term(state: Field, params: Params, config: ModelConfig) -> Field:
    """Elementwise product of the parallel conv layers, before aggregation"""
    pad_spec = config.pad_spec()
    factors: List[Field] = []
    for i in range(config.n_parallel):
        w, b = layer_filters(params, config, i, state.spacing)
        factors.append(conv(state, w, b, pad_spec))
    return elementwise_product(factors)


def highway_diffusion(state: Field, diff_coef: TensorLike, pad_spec: PadSpec = PadSpec.periodic()) -> Field:
    """
    Per-channel diff_coef[c] * Laplacian(state)[c] with the frozen fourth-order stencil.

    Raises:
        DimensionError: an axis is shorter than the stencil
    """
    if min(state.shape) < STENCIL_SIZE:
        raise DimensionError(f"highway Laplacian needs every extent >= {STENCIL_SIZE}, got {state.shape}")
    bank = diagonal_bank(laplacian_kernel(state.spacing), state.channels)
    lap = conv(state, bank, np.zeros(state.channels), pad_spec)
    return scale_channels(lap, diff_coef)


def reaction_term(state: Field, params: Params, config: ModelConfig) -> Field:
    """[prod_i (U * W_i + b_i)] * W1 + b1"""
    product = product_term(state, params, config)
    return conv(product, params["pi.aggregate.weight"], params["pi.aggregate.bias"], config.pad_spec())


def pi_block_residual(state: Field, params: Params, config: ModelConfig) -> Field:
    """Reaction term plus the highway diffusion when enabled"""
    _check_state(state, config, "pi_block_residual")
    pad_spec = config.pad_spec()
    out = reaction_term(state, params, config)
    if config.highway == HighwayMode.DIFFUSION:
        out = add(out, highway_diffusion(state, params["highway.diff_coef"], pad_spec))
    return out


def euler_step(state: Field, params: Params, config: ModelConfig) -> Field:
    return axpy(state, pi_block_residual(state, params, config), config.dt)


def rollout_from_state(initial: Field, params: Params, config: ModelConfig, n_steps: int) -> Trajectory:
    """
    Forward-Euler recurrence from a full-resolution state.

    Raises:
        DivergenceError: a value exceeds the divergence threshold or turns non-finite
    """
    if n_steps < 0:
        raise SpecError(f"n_steps must be >= 0, got {n_steps}")
    _check_state(initial, config, "rollout")
    fields = [initial]
    state = initial
    for step in range(1, n_steps + 1):
        try:
            state = euler_step(state, params, config)
        except NonFiniteError as e:
            raise DivergenceError(f"rollout produced non-finite values at step {step}", step=step) from e
        peak = float(np.max(np.abs(state.values)))
        if peak > config.divergence_threshold:
            logger.debug(f"Rollout diverged at step {step}: max |U| = {peak:.3g}")
            raise DivergenceError(
                f"rollout diverged at step {step}: max |U| = {peak:.3g} exceeds {config.divergence_threshold:g}",
                step=step,
            )
        fields.append(state)
    return Trajectory(tuple(fields), config.dt, 0.0)


def rollout(
    coarse0: Field,
    params: Params,
    config: ModelConfig,
    n_steps: int,
    fine_shape: Sequence[int],
    strides: Sequence[int],
) -> Trajectory:
    """ISG from the first measurement snapshot, then ``n_steps`` Euler updates"""
    if n_steps < 0:
        raise SpecError(f"n_steps must be >= 0, got {n_steps}")
    initial = isg_forward(coarse0, params, config, fine_shape, strides)
    return rollout_from_state(initial, params, config, n_steps)
