"""
Result records: error curves and training reports
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from ..errors import SpecError


class Phase(Enum):
    """Which window a curve point belongs to"""
    TRAIN = "train"
    EXTRAPOLATION = "extrapolation"


@dataclass
class ErrorCurve:
    """Accumulative RMSE per snapshot count k = 1..n"""
    times: List[float]
    rmse: List[float]
    phases: List[Phase]
    label: str = "model"

    def __post_init__(self):
        if not (len(self.times) == len(self.rmse) == len(self.phases)):
            raise SpecError("times, rmse and phases must have the same length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise SpecError("curve times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> float:
        return self.rmse[-1]

    def at_phase(self, phase: Phase) -> List[float]:
        return [r for r, p in zip(self.rmse, self.phases) if p == phase]


@dataclass
class EpochRecord:
    """One line of the training log"""
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class TrainReport:
    """Outcome of a training run"""
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_params: Optional[Dict[str, np.ndarray]] = None
    wall_clock: float = 0.0  # seconds, logged only
    stopped_early: bool = False
    divergence_epochs: List[int] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def train_losses(self) -> List[float]:
        return [r.train_loss for r in self.epochs]

    @property
    def val_losses(self) -> List[float]:
        return [r.val_loss for r in self.epochs]

    @property
    def best_val_loss(self) -> float:
        if self.best_epoch < 0:
            return float("inf")
        return next(r.val_loss for r in self.epochs if r.epoch == self.best_epoch)

    @property
    def final_train_loss(self) -> float:
        return self.epochs[-1].train_loss if self.epochs else float("nan")

    def summary(self) -> Dict[str, Any]:
        return {
            "epochs_run": len(self.epochs),
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "final_train_loss": self.final_train_loss,
            "stopped_early": self.stopped_early,
            "divergence_epochs": list(self.divergence_epochs),
            **self.metadata,
        }
