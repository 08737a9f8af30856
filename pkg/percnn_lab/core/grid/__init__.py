"""
Grid core: differentiable multi-channel fields on Cartesian grids.
"""

from .tape import Tape, Tensor, Gradients, as_tensor
from .field import Field, PadSpec, PadMode
from .ops import (
    pad,
    interior,
    conv,
    elementwise_product,
    axpy,
    add,
    tanh,
    concat_channels,
    scale_channels,
    upsample,
    interpolation_matrix,
    infer_alignment,
    Alignment,
)
from .gradcheck import gradient_check, GradientCheckResult

__all__ = [
    'Tape',
    'Tensor',
    'Gradients',
    'as_tensor',
    'Field',
    'PadSpec',
    'PadMode',
    'pad',
    'interior',
    'conv',
    'elementwise_product',
    'axpy',
    'add',
    'tanh',
    'concat_channels',
    'scale_channels',
    'upsample',
    'interpolation_matrix',
    'infer_alignment',
    'Alignment',
    'gradient_check',
    'GradientCheckResult',
]
