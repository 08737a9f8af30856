"""
Interpretation Service

Expands a trained Pi-block into explicit polynomial right-hand sides. Each
parallel-layer channel is an affine form in the state (1x1 free filters) or
an atomic derivative symbol (frozen stencils); the product channels and the
1x1 aggregation are multiplied out with sympy.
"""

from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence
import csv
import logging
import math

import numpy as np
import sympy as sp

from ...errors import InterpretationError, SpecError
from ...domain import STATE_NAMES, FilterRole, PolyExpr, make_monomial
from ...grid import Field
from ...model import HighwayMode, ModelConfig, reaction_term
from ...model.params import layer_name
from ...solver import Xoshiro256, first_derivative, laplacian


logger = logging.getLogger(__name__)


def state_names(config: ModelConfig) -> List[str]:
    if config.state_channels <= len(STATE_NAMES):
        return list(STATE_NAMES[: config.state_channels])
    return [f"u{c}" for c in range(config.state_channels)]


def _center(size: int, rank: int) -> tuple:
    return ((size - 1) // 2,) * rank


def _pointwise_weights(weights: np.ndarray, size: int, rank: int, where: str) -> np.ndarray:
    """Centre taps of a filter, refusing filters with any off-centre weight"""
    center = _center(size, rank)
    taps = weights[(slice(None),) + center].copy()
    rest = np.array(weights, copy=True)
    rest[(slice(None),) + center] = 0.0
    if np.any(rest != 0.0):
        raise InterpretationError(
            f"{where} is a free {size}-wide filter; only 1x1 or frozen stencil filters can be interpreted"
        )
    return taps


def _layer_factors(
    params: Mapping[str, np.ndarray],
    config: ModelConfig,
    layer: int,
    symbols: Sequence[sp.Symbol],
    allow_frozen: bool,
) -> List[sp.Expr]:
    name = layer_name(layer)
    weights = np.asarray(params[f"{name}.weight"])
    bias = np.asarray(params[f"{name}.bias"])
    size = config.layer_size(layer)
    names = state_names(config)
    factors = []
    for channel in range(config.n_channels):
        role = config.role_of(layer, channel)
        if role != FilterRole.FREE_AFFINE:
            if not allow_frozen:
                raise InterpretationError(
                    f"layer {layer} channel {channel} is a frozen {role.value} stencil; use expand_with_derivatives"
                )
            frozen = next(f for f in config.frozen if f.layer == layer and f.channel == channel)
            factors.append(sp.Symbol(role.symbol(names[frozen.source])))
            continue
        taps = _pointwise_weights(weights[channel], size, config.rank, f"layer {layer} channel {channel}")
        affine = sp.Float(float(bias[channel]))
        for c, symbol in enumerate(symbols):
            affine += sp.Float(float(taps[c])) * symbol
        factors.append(affine)
    return factors


def _expand(params: Mapping[str, np.ndarray], config: ModelConfig, allow_frozen: bool) -> List[PolyExpr]:
    names = state_names(config)
    symbols = [sp.Symbol(n) for n in names]
    layers = [_layer_factors(params, config, i, symbols, allow_frozen) for i in range(config.n_parallel)]
    products = [sp.Mul(*(layers[i][j] for i in range(config.n_parallel))) for j in range(config.n_channels)]

    agg_w = np.asarray(params["pi.aggregate.weight"]).reshape(config.state_channels, config.n_channels)
    agg_b = np.asarray(params["pi.aggregate.bias"])
    exprs = []
    for c, name in enumerate(names):
        rhs = sp.Float(float(agg_b[c]))
        for j, product in enumerate(products):
            if agg_w[c, j] != 0.0:
                rhs += sp.Float(float(agg_w[c, j])) * product
        if config.highway == HighwayMode.DIFFUSION:
            rhs += sp.Float(float(params["highway.diff_coef"][c])) * sp.Symbol(f"Δ{name}")
        exprs.append(_to_poly_expr(name, sp.expand(rhs)))
    return exprs


def _to_poly_expr(channel: str, expr: sp.Expr) -> PolyExpr:
    gens = sorted(expr.free_symbols, key=lambda s: s.name)
    if not gens:
        return PolyExpr(channel, {(): float(expr)})
    poly = sp.Poly(expr, *gens)
    terms: Dict = {}
    for powers, coef in poly.terms():
        monomial = make_monomial({g.name: p for g, p in zip(gens, powers)})
        terms[monomial] = terms.get(monomial, 0.0) + float(coef)
    return PolyExpr(channel, terms)


def expand_pointwise(params: Mapping[str, np.ndarray], config: ModelConfig) -> List[PolyExpr]:
    """
    Polynomial right-hand side of a Pi-block built from 1x1 filters only.

    Raises:
        InterpretationError: a layer has a wider free filter or a frozen stencil
    """
    if config.frozen:
        raise InterpretationError("model has frozen stencil filters; use expand_with_derivatives")
    exprs = _expand(params, config, allow_frozen=False)
    logger.debug(f"Expanded pointwise Pi-block into {sum(len(e) for e in exprs)} terms")
    return exprs


def expand_with_derivatives(params: Mapping[str, np.ndarray], config: ModelConfig) -> List[PolyExpr]:
    """
    Polynomial right-hand side treating each frozen stencil output as an atomic
    derivative symbol (``u_x``, ``Δv``, ...).

    Raises:
        InterpretationError: a free filter has nonzero weights away from its centre
    """
    exprs = _expand(params, config, allow_frozen=True)
    logger.debug(f"Expanded Pi-block with derivative symbols into {sum(len(e) for e in exprs)} terms")
    return exprs


def expand(params: Mapping[str, np.ndarray], config: ModelConfig) -> List[PolyExpr]:
    """Pick the expansion matching the model's filters"""
    if config.frozen:
        return expand_with_derivatives(params, config)
    return expand_pointwise(params, config)


def prune(expr: PolyExpr, threshold: float) -> PolyExpr:
    """Drop terms with |coefficient| < threshold"""
    if threshold < 0:
        raise SpecError(f"prune threshold must be >= 0, got {threshold}")
    return PolyExpr(expr.channel, {m: c for m, c in expr.terms.items() if abs(c) >= threshold})


def _random_periodic_fields(config: ModelConfig, rng: Xoshiro256, count: int, extent: int = 24) -> List[Field]:
    shape = (extent,) * config.rank
    spacing = (2.0 * math.pi / extent,) * config.rank
    axes = np.meshgrid(*[np.arange(extent) * spacing[0]] * config.rank, indexing="ij")
    fields = []
    for _ in range(count):
        channels = []
        for _ in range(config.state_channels):
            values = np.zeros(shape)
            for k in range(1, 4):
                coef = rng.uniform(-1.0, 1.0, 2 * config.rank)
                for axis, x in enumerate(axes):
                    values += (coef[2 * axis] * np.sin(k * x) + coef[2 * axis + 1] * np.cos(k * x)) / k
            peak = np.max(np.abs(values))
            channels.append(values / peak if peak > 0 else values)
        fields.append(Field.from_array(np.stack(channels), spacing))
    return fields


def _symbol_values(state: Field, config: ModelConfig) -> Dict[str, np.ndarray]:
    names = state_names(config)
    values: Dict[str, np.ndarray] = {}
    lap = laplacian(state).values
    for c, name in enumerate(names):
        values[name] = state.values[c]
        values[f"Δ{name}"] = lap[c]
        for axis in range(config.rank):
            values[f"{name}_{'xyz'[axis]}"] = first_derivative(state, axis).values[c]
    return values


def verify_extraction(
    exprs: Sequence[PolyExpr],
    params: Mapping[str, np.ndarray],
    config: ModelConfig,
    n_samples: int = 100,
    seed: int = 0,
) -> float:
    """
    Max |network residual - expression| over random states.

    Pointwise models are compared at n_samples states with every symbol uniform
    in [-1, 1]; models with frozen stencils on random smooth periodic fields,
    away from the boundary, with derivatives from the reference operators.
    """
    if len(exprs) != config.state_channels:
        raise SpecError(f"need one expression per state channel, got {len(exprs)}")
    rng = Xoshiro256(seed)
    names = state_names(config)
    highway = config.highway == HighwayMode.DIFFUSION
    deviation = 0.0

    if not config.frozen:
        # a square block of samples, wide enough for the conv padding
        side = max(5, math.ceil(n_samples ** (1.0 / config.rank)))
        shape = (config.state_channels,) + (side,) * config.rank
        states = rng.uniform(-1.0, 1.0, shape)
        laps = rng.uniform(-1.0, 1.0, shape)
        net = reaction_term(Field.from_array(states), params, config).values
        for c, (name, expr) in enumerate(zip(names, exprs)):
            network = net[c]
            if highway:
                network = network + float(params["highway.diff_coef"][c]) * laps[c]
            values: Dict[str, np.ndarray] = {n: states[i] for i, n in enumerate(names)}
            values.update({f"Δ{n}": laps[i] for i, n in enumerate(names)})
            deviation = max(deviation, float(np.max(np.abs(network - expr.evaluate(values)))))
        return deviation

    extent = 24
    count = max(1, math.ceil(n_samples / extent ** config.rank))
    inner = (slice(2, -2),) * config.rank
    for state in _random_periodic_fields(config, rng, count, extent):
        net = reaction_term(state, params, config).values
        values = _symbol_values(state, config)
        for c, expr in enumerate(exprs):
            network = net[c]
            if highway:
                network = network + float(params["highway.diff_coef"][c]) * values[f"Δ{names[c]}"]
            diff = np.abs(network - expr.evaluate(values))[inner]
            deviation = max(deviation, float(np.max(diff)))
    return deviation


def prune_bound(expr: PolyExpr, threshold: float, magnitude: float = 1.0) -> float:
    """Largest pointwise change pruning can cause when every symbol is bounded by ``magnitude``"""
    dropped = [
        (c, sum(p for _, p in m)) for m, c in expr.terms.items() if abs(c) < threshold
    ]
    return float(sum(abs(c) * magnitude ** degree for c, degree in dropped))


def equation_report(exprs: Sequence[PolyExpr], threshold: Optional[float] = None) -> str:
    """One line per channel, terms by decreasing |coefficient|"""
    lines = []
    if threshold is not None:
        lines.append(f"# terms with |coefficient| < {threshold:g} pruned")
    for expr in exprs:
        lines.append((prune(expr, threshold) if threshold is not None else expr).format())
    return "\n".join(lines) + "\n"


def write_terms_csv(exprs: Sequence[PolyExpr], path: Path):
    """Rows ``channel,monomial,coefficient``"""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["channel", "monomial", "coefficient"])
        for expr in exprs:
            for channel, monomial, coef in expr.rows():
                writer.writerow([channel, monomial, f"{coef:.17g}"])
