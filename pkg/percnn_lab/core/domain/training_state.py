"""
Optimizer and training state carried between epochs and across checkpoints
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Mapping, Optional, Sequence

import numpy as np

if TYPE_CHECKING:
    from ..model.params import ModelParams


@dataclass
class AdamState:
    """Step counter and first/second moment estimates per parameter"""
    step: int
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]

    @classmethod
    def fresh(cls, params: Mapping[str, np.ndarray], names: Optional[Sequence[str]] = None) -> "AdamState":
        names = list(params) if names is None else list(names)
        return cls(
            0,
            {n: np.zeros_like(params[n], dtype=np.float64) for n in names},
            {n: np.zeros_like(params[n], dtype=np.float64) for n in names},
        )


@dataclass
class TrainingState:
    """Everything needed to continue a run bit-identically"""
    params: "ModelParams"
    adam: AdamState
    lr: float
    epoch: int = 0
