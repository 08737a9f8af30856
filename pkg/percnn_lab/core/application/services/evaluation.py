"""
Evaluation Service

Accumulative RMSE against a reference trajectory and the error-propagation
curves built from it, with CSV and SVG export.
"""

from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence
from xml.sax.saxutils import escape
import csv
import logging

import numpy as np

from ...errors import ShapeError, SpecError
from ...domain import ErrorCurve, Phase, Trajectory


logger = logging.getLogger(__name__)

CURVE_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _check_pair(pred: Trajectory, ref: Trajectory):
    if len(pred) != len(ref):
        raise ShapeError(f"prediction has {len(pred)} snapshots, reference {len(ref)}")
    if pred[0].data.shape != ref[0].data.shape:
        raise ShapeError(f"prediction snapshots are {pred[0].data.shape}, reference {ref[0].data.shape}")
    if not np.isclose(pred.dt, ref.dt, rtol=1e-9, atol=0.0) or not np.isclose(pred.t0, ref.t0, rtol=0.0, atol=1e-12):
        raise SpecError(f"time grids differ: dt {pred.dt} vs {ref.dt}, t0 {pred.t0} vs {ref.t0}")


def _squared_errors(pred: Trajectory, ref: Trajectory) -> np.ndarray:
    return np.array([np.sum((p.values - r.values) ** 2) for p, r in zip(pred, ref)])


def accumulative_rmse(pred: Trajectory, ref: Trajectory, k: int) -> float:
    """
    sqrt(sum_{i<k} ||pred_i - ref_i||^2 / (n k)) over the first k snapshots,
    n being the number of scalar entries per snapshot (channels x cells).
    """
    _check_pair(pred, ref)
    if not 1 <= k <= len(pred):
        raise SpecError(f"k must be in 1..{len(pred)}, got {k}")
    n = pred[0].values.size
    return float(np.sqrt(np.sum(_squared_errors(pred.window(0, k), ref.window(0, k))) / (n * k)))


def error_curve(pred: Trajectory, ref: Trajectory, train_end_index: int, label: str = "model") -> ErrorCurve:
    """Accumulative RMSE for every k; snapshot indices <= train_end_index are the train phase"""
    _check_pair(pred, ref)
    if train_end_index < 0:
        raise SpecError(f"train_end_index must be >= 0, got {train_end_index}")
    n = pred[0].values.size
    k = np.arange(1, len(pred) + 1)
    rmse = np.sqrt(np.cumsum(_squared_errors(pred, ref)) / (n * k))
    phases = [Phase.TRAIN if i <= train_end_index else Phase.EXTRAPOLATION for i in range(len(pred))]
    return ErrorCurve(list(pred.times), rmse.tolist(), phases, label)


def compare_models(
    ref: Trajectory,
    predictions: Mapping[str, Trajectory],
    train_end_index: int,
) -> List[ErrorCurve]:
    """One labelled error curve per prediction, in mapping order"""
    curves = [error_curve(pred, ref, train_end_index, label) for label, pred in predictions.items()]
    for curve in curves:
        logger.info(f"{curve.label}: final accumulative RMSE {curve.final:.4e}")
    return curves


def export_curve_csv(curve: ErrorCurve, path: Path):
    """Rows ``k,t,rmse,phase`` with k counting snapshots from 1"""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["k", "t", "rmse", "phase"])
        for k, (t, r, p) in enumerate(zip(curve.times, curve.rmse, curve.phases), start=1):
            writer.writerow([k, f"{t:.17g}", f"{r:.17g}", p.value])


def _ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def render_curve_svg(
    curves: Sequence[ErrorCurve],
    title: str = "Accumulative RMSE",
    width: int = 640,
    height: int = 400,
) -> str:
    """
    Line chart of one or more error curves.

    A dashed vertical rule marks the last train-phase time of the first curve.
    """
    if not curves:
        raise SpecError("nothing to plot")
    left, right, top, bottom = 70, 20, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    t_lo = min(c.times[0] for c in curves)
    t_hi = max(c.times[-1] for c in curves)
    r_hi = max(max(c.rmse) for c in curves)
    r_hi = r_hi if r_hi > 0 else 1.0
    t_span = t_hi - t_lo if t_hi > t_lo else 1.0

    def x(t: float) -> float:
        return left + plot_w * (t - t_lo) / t_span

    def y(r: float) -> float:
        return top + plot_h * (1.0 - r / r_hi)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for t in _ticks(t_lo, t_hi):
        parts.append(
            f'<line x1="{x(t):.2f}" y1="{top + plot_h}" x2="{x(t):.2f}" y2="{top + plot_h + 5}" stroke="black"/>'
            f'<text x="{x(t):.2f}" y="{top + plot_h + 18}" text-anchor="middle">{t:.4g}</text>'
        )
    for r in _ticks(0.0, r_hi):
        parts.append(
            f'<line x1="{left - 5}" y1="{y(r):.2f}" x2="{left}" y2="{y(r):.2f}" stroke="black"/>'
            f'<text x="{left - 8}" y="{y(r) + 4:.2f}" text-anchor="end">{r:.3g}</text>'
        )
    parts.append(f'<text x="{left + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle">t</text>')

    train_times = [t for t, p in zip(curves[0].times, curves[0].phases) if p == Phase.TRAIN]
    if train_times and len(train_times) < len(curves[0]):
        xe = x(train_times[-1])
        parts.append(
            f'<line x1="{xe:.2f}" y1="{top}" x2="{xe:.2f}" y2="{top + plot_h}" stroke="gray" stroke-dasharray="4 3"/>'
        )

    for i, curve in enumerate(curves):
        color = CURVE_COLORS[i % len(CURVE_COLORS)]
        points = " ".join(f"{x(t):.2f},{y(r):.2f}" for t, r in zip(curve.times, curve.rmse))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        ly = top + 14 * (i + 1)
        parts.append(
            f'<line x1="{left + plot_w - 120}" y1="{ly}" x2="{left + plot_w - 100}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
            f'<text x="{left + plot_w - 95}" y="{ly + 4}">{escape(curve.label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_curve_svg(curves: Iterable[ErrorCurve], path: Path, title: Optional[str] = None):
    curves = list(curves)
    Path(path).write_text(render_curve_svg(curves, title or "Accumulative RMSE"))
