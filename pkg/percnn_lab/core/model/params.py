"""
PeRCNN parameters

ModelParams is an immutable, ordered mapping from parameter name to array.
The declaration order fixed by ``parameter_shapes`` is the order used by the
initializer, the optimizer and the checkpoint format.
"""

from collections import OrderedDict
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple
import logging

import numpy as np

from ..errors import CheckpointMismatchError, ShapeError
from ..domain import FilterRole
from ..grid import Tape, Tensor
from ..grid.stencils import derivative_kernel, embed_kernel, laplacian_kernel
from ..solver.rng import Xoshiro256
from .config import HighwayMode, ModelConfig


logger = logging.getLogger(__name__)

Shape = Tuple[int, ...]


def layer_name(layer: int) -> str:
    return f"pi.layer{layer}"


def parameter_shapes(config: ModelConfig) -> "OrderedDict[str, Shape]":
    """Name and shape of every trainable tensor, in declaration order"""
    s, r = config.state_channels, config.rank
    k_isg = (config.isg_filter_size,) * r
    shapes: "OrderedDict[str, Shape]" = OrderedDict()
    shapes["isg.conv1.weight"] = (config.isg_channels, s) + k_isg
    shapes["isg.conv1.bias"] = (config.isg_channels,)
    shapes["isg.conv2.weight"] = (config.isg_channels, config.isg_channels) + k_isg
    shapes["isg.conv2.bias"] = (config.isg_channels,)
    shapes["isg.out.weight"] = (s, s + config.isg_channels) + (1,) * r
    shapes["isg.out.bias"] = (s,)
    for i in range(config.n_parallel):
        shapes[f"{layer_name(i)}.weight"] = (config.n_channels, s) + (config.layer_size(i),) * r
        shapes[f"{layer_name(i)}.bias"] = (config.n_channels,)
    shapes["pi.aggregate.weight"] = (s, config.n_channels) + (1,) * r
    shapes["pi.aggregate.bias"] = (s,)
    if config.highway == HighwayMode.DIFFUSION:
        shapes["highway.diff_coef"] = (s,)
    return shapes


def shape_diff(config: ModelConfig, arrays: Mapping[str, np.ndarray]) -> Dict[str, Tuple[Optional[Shape], Optional[Shape]]]:
    """{name: (expected, found)} for every missing, unexpected or misshapen tensor"""
    expected = parameter_shapes(config)
    diff = {}
    for name, shape in expected.items():
        found = tuple(arrays[name].shape) if name in arrays else None
        if found != shape:
            diff[name] = (shape, found)
    for name in arrays:
        if name not in expected:
            diff[name] = (None, tuple(arrays[name].shape))
    return diff


def config_diff(expected: ModelConfig, found: ModelConfig) -> Dict[str, Tuple[Any, Any]]:
    """{field: (expected, found)} for every differing field outside ``ModelConfig.RUNTIME_FIELDS``"""
    diff = {}
    for name in ModelConfig.model_fields:
        if name in ModelConfig.RUNTIME_FIELDS:
            continue
        want, got = getattr(expected, name), getattr(found, name)
        if want != got:
            diff[name] = (want, got)
    return diff


def stencil_for(role: FilterRole, spacing: Tuple[float, ...]) -> np.ndarray:
    if role == FilterRole.FIXED_LAPLACIAN:
        return laplacian_kernel(spacing)
    return derivative_kernel(spacing, role.axis)


def frozen_layout(config: ModelConfig, layer: int, spacing: Tuple[float, ...]):
    """
    Masks and fixed values for the frozen channels of one parallel layer.

    Returns:
        (weight_mask, weight_fixed, bias_mask) or None when nothing is frozen
    """
    frozen = [f for f in config.frozen if f.layer == layer]
    if not frozen:
        return None
    shapes = parameter_shapes(config)
    w_shape = shapes[f"{layer_name(layer)}.weight"]
    w_mask = np.ones(w_shape)
    w_fixed = np.zeros(w_shape)
    b_mask = np.ones(w_shape[0])
    size = config.layer_size(layer)
    for f in frozen:
        w_mask[f.channel] = 0.0
        b_mask[f.channel] = 0.0
        w_fixed[f.channel, f.source] = embed_kernel(stencil_for(f.role, spacing), size)
    return w_mask, w_fixed, b_mask


def trainable_masks(config: ModelConfig) -> Dict[str, np.ndarray]:
    """1 where an entry trains, 0 where it is pinned; only frozen layers appear"""
    masks = {}
    spacing = (1.0,) * config.rank
    for layer in sorted({f.layer for f in config.frozen}):
        w_mask, _, b_mask = frozen_layout(config, layer, spacing)
        masks[f"{layer_name(layer)}.weight"] = w_mask
        masks[f"{layer_name(layer)}.bias"] = b_mask
    return masks


class ModelParams(Mapping[str, np.ndarray]):
    """Read-only parameter set bound to its ModelConfig"""

    def __init__(self, config: ModelConfig, arrays: Mapping[str, np.ndarray]):
        diff = shape_diff(config, arrays)
        if diff:
            lines = [f"{name}: expected {exp}, found {got}" for name, (exp, got) in diff.items()]
            raise CheckpointMismatchError("parameters do not fit the model config:\n  " + "\n  ".join(lines), diff)
        self.config = config
        self._arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name in parameter_shapes(config):
            value = np.array(arrays[name], dtype=np.float64)
            if not np.all(np.isfinite(value)):
                raise ShapeError(f"parameter {name} holds non-finite values")
            value.setflags(write=False)
            self._arrays[name] = value

    @classmethod
    def init(cls, config: ModelConfig, seed: int) -> "ModelParams":
        """
        Seeded initialization.

        Conv weights and biases are uniform in +-init_scale / sqrt(fan_in);
        the ISG output conv starts as the identity on its skip channels with
        small weights on the hidden ones; diff_coef starts at diff_coef_init.
        Frozen channels are zero.
        """
        rng = Xoshiro256(seed)
        s = config.state_channels
        arrays: Dict[str, np.ndarray] = {}
        fan_in = 1
        for name, shape in parameter_shapes(config).items():
            if name == "highway.diff_coef":
                arrays[name] = np.full(shape, config.diff_coef_init)
                continue
            if name.endswith(".weight"):
                fan_in = int(np.prod(shape[1:]))
            bound = config.init_scale / np.sqrt(fan_in)
            arrays[name] = rng.uniform(-bound, bound, shape)

        out = arrays["isg.out.weight"]
        out[:, :s] = 0.0
        for c in range(s):
            out[(c, c) + (0,) * config.rank] = 1.0
        arrays["isg.out.bias"] = np.zeros(s)

        for name, mask in trainable_masks(config).items():
            arrays[name] = arrays[name] * mask
        logger.debug(f"Initialized {len(arrays)} parameter tensors with seed {seed}")
        return cls(config, arrays)

    @classmethod
    def zeros(cls, config: ModelConfig) -> "ModelParams":
        return cls(config, {name: np.zeros(shape) for name, shape in parameter_shapes(config).items()})

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    @property
    def names(self) -> List[str]:
        return list(self._arrays)

    @property
    def size(self) -> int:
        return int(sum(a.size for a in self._arrays.values()))

    def replace(self, updates: Mapping[str, np.ndarray]) -> "ModelParams":
        """New ModelParams with some tensors swapped out"""
        arrays = dict(self._arrays)
        arrays.update(updates)
        return ModelParams(self.config, arrays)

    def to_dict(self) -> Dict[str, np.ndarray]:
        """Writable copies of every tensor"""
        return {name: value.copy() for name, value in self._arrays.items()}

    def on_tape(self, tape: Tape, names: Optional[List[str]] = None) -> Dict[str, Tensor]:
        """
        Register tensors as tape parameters.

        Names outside ``names`` are passed through as constants.
        """
        selected = set(self._arrays if names is None else names)
        return {
            name: tape.parameter(value, name) if name in selected else Tensor(value)
            for name, value in self._arrays.items()
        }

    def allclose(self, other: "ModelParams", atol: float = 0.0) -> bool:
        return self.names == other.names and all(
            np.allclose(self[n], other[n], rtol=0.0, atol=atol) for n in self.names
        )
