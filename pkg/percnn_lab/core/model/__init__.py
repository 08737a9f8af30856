"""
PeRCNN: initial-state generator, Pi-block, highway diffusion and rollout.
"""

from .config import ModelConfig, HighwayMode, FrozenFilterConfig
from .params import ModelParams, config_diff, parameter_shapes, shape_diff, trainable_masks
from .percnn import (
    isg_forward,
    product_term,
    reaction_term,
    pi_block_residual,
    highway_diffusion,
    euler_step,
    rollout,
    rollout_from_state,
)
from .constructions import (
    representable_reaction_params,
    highway_only,
    persistence_baseline,
    identity_isg,
)

__all__ = [
    'ModelConfig',
    'HighwayMode',
    'FrozenFilterConfig',
    'ModelParams',
    'parameter_shapes',
    'shape_diff',
    'config_diff',
    'trainable_masks',
    'isg_forward',
    'product_term',
    'reaction_term',
    'pi_block_residual',
    'highway_diffusion',
    'euler_step',
    'rollout',
    'rollout_from_state',
    'representable_reaction_params',
    'highway_only',
    'persistence_baseline',
    'identity_isg',
]
