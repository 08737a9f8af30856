"""
Snapshot export as CSV grids
"""

from pathlib import Path
from typing import List, Sequence, Union
import csv

import numpy as np

from ...errors import SpecError
from ...domain import Trajectory
from ...grid import Field


PathLike = Union[str, Path]


def plane(field: Field, channel: int) -> np.ndarray:
    """2-D view of one channel: the field itself in 2-D, the middle z-plane in 3-D"""
    if not 0 <= channel < field.channels:
        raise SpecError(f"channel {channel} outside 0..{field.channels - 1}")
    values = field.values[channel]
    if values.ndim == 3:
        return values[:, :, values.shape[2] // 2]
    if values.ndim == 1:
        return values[:, None]
    return values


def write_grid_csv(field: Field, channel: int, path: PathLike):
    """Row i holds the values at x index i along y"""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        for row in plane(field, channel):
            writer.writerow([f"{v:.17g}" for v in row])


def export_slices(
    traj: Trajectory,
    indices: Sequence[int],
    out_dir: PathLike,
    names: Sequence[str],
    prefix: str = "snapshot",
) -> List[Path]:
    """One CSV per (snapshot, channel), named ``{prefix}_{k:05d}_{channel}.csv``"""
    out_dir = Path(out_dir)
    written = []
    for k in indices:
        if not 0 <= k < len(traj):
            raise SpecError(f"snapshot {k} outside 0..{len(traj) - 1}")
        for c, name in enumerate(names[: traj.channels]):
            path = out_dir / f"{prefix}_{k:05d}_{name}.csv"
            write_grid_csv(traj[k], c, path)
            written.append(path)
    return written
