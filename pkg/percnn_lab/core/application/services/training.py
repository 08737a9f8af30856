"""
Training Service

Fits PeRCNN parameters to a Measurement: one differentiable rollout per
epoch, data misfit at the observed nodes plus the initial-state regularizer,
Adam updates, early stopping on the held-out measurement times and a
one-shot recovery when the rollout diverges.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple
import csv
import logging
import time

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField
from tqdm import tqdm

from ...errors import DivergenceError, NonFiniteError, ShapeError, SpecError, TrainingDivergedError
from ...domain import AdamState, EpochRecord, Measurement, TrainReport, TrainingState, Trajectory
from ...grid import Gradients, Tape, Tensor, infer_alignment, upsample
from ...grid import tape as T
from ...model import ModelConfig, ModelParams, rollout


logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Optimizer and schedule settings"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    lr: float = PydanticField(default=0.002, gt=0)
    lr_step: int = PydanticField(default=0, ge=0, description="epochs between lr decays, 0 keeps lr constant")
    lr_gamma: float = PydanticField(default=1.0, gt=0, le=1)
    lam: float = PydanticField(default=1.0, ge=0, description="weight of the initial-state regularizer")
    max_epochs: int = PydanticField(default=5000, ge=0)
    patience: int = PydanticField(default=200, ge=1)
    beta1: float = PydanticField(default=0.9, ge=0, lt=1)
    beta2: float = PydanticField(default=0.999, ge=0, lt=1)
    eps: float = PydanticField(default=1e-8, gt=0)
    seed: int = 0
    validation_snapshots: int = PydanticField(default=2, ge=0)
    freeze_isg: bool = False
    log_every: int = PydanticField(default=50, ge=1)
    checkpoint_every: int = PydanticField(default=0, ge=0, description="0 disables periodic checkpoints")


# --- Adam ---------------------------------------------------------------------

def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """
    One bias-corrected Adam update.

    Returns new arrays and a new state; the inputs are left untouched.

    Raises:
        ShapeError: a gradient or moment does not match its parameter
    """
    step = state.step + 1
    correction1 = 1.0 - beta1 ** step
    correction2 = 1.0 - beta2 ** step
    updated, m_new, v_new = {}, {}, {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape or state.m[name].shape != value.shape:
            raise ShapeError(f"adam_step: {name} has shape {value.shape}, gradient {g.shape}")
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g * g
        updated[name] = value - lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
        m_new[name] = m
        v_new[name] = v
    return updated, AdamState(step, m_new, v_new)


# --- Loss ---------------------------------------------------------------------

def _coarse_index(m: Measurement) -> tuple:
    return (slice(None),) + tuple(slice(None, None, s) for s in m.spatial_stride)


def _check_indices(prediction: Trajectory, m: Measurement, indices: Sequence[int]):
    for k in indices:
        if not 0 <= k < len(m):
            raise SpecError(f"measurement index {k} outside 0..{len(m) - 1}")
        if m.fine_index(k) >= len(prediction):
            raise SpecError(
                f"measurement time {k} maps to fine step {m.fine_index(k)}, prediction has {len(prediction)} snapshots"
            )


def initial_state_target(m: Measurement) -> np.ndarray:
    """Interpolation of the first noisy snapshot onto the fine grid"""
    first = m.snapshot(0)
    alignment = infer_alignment(m.fine_shape, first.shape, m.spatial_stride)
    return upsample(first.detach(), m.fine_shape, alignment).values


def loss(
    prediction: Trajectory,
    m: Measurement,
    initial_state,
    lam: float,
    indices: Optional[Sequence[int]] = None,
) -> Tensor:
    """
    MSE at the observed nodes and times plus lam * MSE(U0 - P(u0)).

    Args:
        prediction: fine-grid rollout, snapshot k at time k * fine_dt
        m: the measurement
        initial_state: Field (or Tensor) holding the generated initial state
        lam: regularizer weight
        indices: measurement times entering the data term, all by default
    """
    if lam < 0:
        raise SpecError(f"lam must be >= 0, got {lam}")
    indices = list(range(len(m))) if indices is None else list(indices)
    if not indices:
        raise SpecError("the data term needs at least one measurement time")
    _check_indices(prediction, m, indices)
    index = _coarse_index(m)
    residuals = [
        T.sub(T.take(prediction[m.fine_index(k)].data, index), m.snapshot(k).values) for k in indices
    ]
    data_term = T.mean_square(T.concat(residuals, axis=0))
    u0 = initial_state.data if hasattr(initial_state, "data") else initial_state
    ic_term = T.mean_square(T.sub(u0, initial_state_target(m)))
    return T.add(data_term, T.scale(ic_term, lam))


def data_mse(prediction: Trajectory, m: Measurement, indices: Sequence[int]) -> float:
    """Data term only, evaluated without recording"""
    _check_indices(prediction, m, indices)
    index = _coarse_index(m)
    squares = [
        np.sum((prediction[m.fine_index(k)].values[index] - m.snapshot(k).values) ** 2) for k in indices
    ]
    count = len(indices) * m.snapshot(0).values.size
    return float(np.sum(squares) / count)


# --- Training -----------------------------------------------------------------

CheckpointHook = Callable[[str, ModelParams, Optional[TrainingState]], None]


@dataclass
class _Progress:
    best_params: ModelParams
    best_val: float = float("inf")
    best_epoch: int = -1
    wait: int = 0
    recovered: bool = False
    divergences: List[int] = field(default_factory=list)


class TrainingService:
    """
    Runs the PeRCNN training loop.

    Checkpoints are handed to ``on_checkpoint(kind, params, state)`` with kind
    "periodic" (state attached) or "best", the latter each time the validation
    loss improves. The log is appended to ``log_path`` as CSV
    ``epoch,train_loss,val_loss,lr``; epoch timings only go to the logger.
    """

    LOG_HEADER = ["epoch", "train_loss", "val_loss", "lr"]

    def __init__(
        self,
        model_config: ModelConfig,
        train_config: TrainConfig,
        log_path: Optional[Path] = None,
        on_checkpoint: Optional[CheckpointHook] = None,
        progress: bool = True,
    ):
        self.model_config = model_config
        self.train_config = train_config
        self.log_path = Path(log_path) if log_path is not None else None
        self.on_checkpoint = on_checkpoint
        self.progress = progress
        self.final_state: Optional[TrainingState] = None

        logger.info(
            f"TrainingService initialized (lr={train_config.lr}, lam={train_config.lam}, "
            f"max_epochs={train_config.max_epochs}, patience={train_config.patience})"
        )

    def trainable_names(self, params: ModelParams) -> List[str]:
        if self.train_config.freeze_isg:
            return [n for n in params.names if not n.startswith("isg.")]
        return params.names

    def _validate(self, m: Measurement):
        v = self.train_config.validation_snapshots
        if len(m) < v + 2:
            raise SpecError(f"measurement has {len(m)} snapshots, need >= {v + 2} with {v} held out")
        if not np.isclose(self.model_config.dt, m.fine_dt, rtol=1e-9, atol=0.0):
            raise SpecError(f"model dt {self.model_config.dt} does not match measurement fine dt {m.fine_dt}")
        if len(m.fine_shape) != self.model_config.rank:
            raise SpecError(f"model is {self.model_config.rank}-D, measurement is {len(m.fine_shape)}-D")
        if self.model_config.steps_train != m.fine_steps:
            logger.warning(
                f"steps_train={self.model_config.steps_train} but the measurement spans {m.fine_steps} steps; "
                f"training follows the measurement"
            )

    def evaluate_epoch(
        self, params: ModelParams, m: Measurement, names: Sequence[str]
    ) -> Tuple[float, float, Gradients]:
        """Rollout, loss and gradients for one set of parameters"""
        cfg = self.train_config
        n_val = cfg.validation_snapshots
        train_idx = list(range(len(m) - n_val))
        val_idx = list(range(len(m) - n_val, len(m)))

        tape = Tape()
        tracked = params.on_tape(tape, list(names))
        prediction = rollout(
            m.snapshot(0), tracked, self.model_config, m.fine_steps, m.fine_shape, m.spatial_stride
        )
        total = loss(prediction, m, prediction[0], cfg.lam, train_idx)
        train_loss = float(total.value)
        val_loss = data_mse(prediction, m, val_idx) if val_idx else train_loss
        grads = tape.backward(total)
        return train_loss, val_loss, grads

    def _update(self, state: TrainingState, grads: Gradients, names: Sequence[str]) -> TrainingState:
        cfg = self.train_config
        current = {n: state.params[n] for n in names}
        updated, adam = adam_step(
            current, {n: grads[n] for n in names}, state.adam, state.lr, cfg.beta1, cfg.beta2, cfg.eps
        )
        if not all(np.all(np.isfinite(a)) for a in updated.values()):
            raise NonFiniteError("Adam produced non-finite parameters")
        return TrainingState(state.params.replace(updated), adam, state.lr, state.epoch + 1)

    def _write_log(self, record: EpochRecord):
        if self.log_path is None:
            return
        new = not self.log_path.exists()
        with open(self.log_path, "a", newline="") as f:
            writer = csv.writer(f)
            if new:
                writer.writerow(self.LOG_HEADER)
            writer.writerow([
                record.epoch,
                f"{record.train_loss:.17g}",
                f"{record.val_loss:.17g}",
                f"{record.lr:.17g}",
            ])

    def train(
        self,
        m: Measurement,
        init: Optional[ModelParams] = None,
        resume: Optional[TrainingState] = None,
    ) -> TrainReport:
        """
        Optimize until max_epochs or until ``patience`` epochs pass without a
        better validation loss.

        Returns:
            TrainReport whose best_params are those of the best validation epoch

        Raises:
            TrainingDivergedError: the rollout diverged again after recovery
        """
        self._validate(m)
        cfg = self.train_config
        if resume is not None:
            state = resume
            logger.info(f"Resuming at epoch {state.epoch} with lr={state.lr}")
        else:
            params = init if init is not None else ModelParams.init(self.model_config, cfg.seed)
            state = TrainingState(params, AdamState.fresh(params, self.trainable_names(params)), cfg.lr, 0)
        names = self.trainable_names(state.params)
        track = _Progress(best_params=state.params)
        report = TrainReport(metadata={
            "lr": cfg.lr,
            "lr_step": cfg.lr_step,
            "lr_gamma": cfg.lr_gamma,
            "lam": cfg.lam,
            "seed": cfg.seed,
            "validation_snapshots": cfg.validation_snapshots,
            "trainable": names,
            "start_epoch": state.epoch,
        })

        start = time.perf_counter()
        epochs = tqdm(
            range(state.epoch, cfg.max_epochs),
            desc="train",
            unit="epoch",
            disable=not self.progress,
            initial=state.epoch,
            total=cfg.max_epochs,
        )
        for epoch in epochs:
            tic = time.perf_counter()
            try:
                train_loss, val_loss, grads = self.evaluate_epoch(state.params, m, names)
                next_state = self._update(state, grads, names)
            except (DivergenceError, NonFiniteError) as e:
                track.divergences.append(epoch)
                if track.recovered:
                    logger.error(f"Training diverged again at epoch {epoch}: {e}")
                    raise TrainingDivergedError(
                        f"training diverged at epoch {epoch} after lr was already halved: {e}", epoch=epoch
                    ) from e
                track.recovered = True
                lr = state.lr * 0.5
                logger.warning(
                    f"Divergence at epoch {epoch} ({e}); restoring epoch {track.best_epoch} parameters, lr -> {lr:g}"
                )
                state = TrainingState(
                    track.best_params, AdamState.fresh(track.best_params, names), lr, epoch + 1
                )
                continue

            if val_loss < track.best_val:
                track.best_val = val_loss
                track.best_params = state.params
                track.best_epoch = epoch
                track.wait = 0
                if self.on_checkpoint:
                    self.on_checkpoint("best", state.params, None)
            else:
                track.wait += 1

            record = EpochRecord(epoch, train_loss, val_loss, state.lr)
            report.epochs.append(record)
            self._write_log(record)
            epochs.set_postfix(train=f"{train_loss:.3e}", val=f"{val_loss:.3e}")
            if epoch % cfg.log_every == 0:
                logger.info(f"Epoch {epoch}: train {train_loss:.4e}, val {val_loss:.4e}, lr {state.lr:g}")
            else:
                logger.debug(
                    f"Epoch {epoch}: train {train_loss:.6e}, val {val_loss:.6e} ({time.perf_counter() - tic:.3f}s)"
                )

            state = next_state
            if cfg.lr_step and (epoch + 1) % cfg.lr_step == 0:
                state = replace(state, lr=state.lr * cfg.lr_gamma)
            if cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0 and self.on_checkpoint:
                self.on_checkpoint("periodic", state.params, state)

            if track.wait >= cfg.patience:
                report.stopped_early = True
                logger.info(
                    f"Early stop at epoch {epoch}: no validation improvement for {cfg.patience} epochs "
                    f"(best {track.best_val:.4e} at epoch {track.best_epoch})"
                )
                break
        epochs.close()

        self.final_state = state
        report.best_epoch = track.best_epoch
        report.best_params = track.best_params.to_dict()
        report.wall_clock = time.perf_counter() - start
        report.divergence_epochs = track.divergences
        if self.on_checkpoint and track.best_epoch < 0:
            self.on_checkpoint("best", track.best_params, None)
        logger.info(
            f"Training finished after {len(report.epochs)} epochs in {report.wall_clock:.1f}s; "
            f"best epoch {report.best_epoch}"
        )
        return report


def train(
    m: Measurement,
    model_config: ModelConfig,
    train_config: TrainConfig,
    init: Optional[ModelParams] = None,
    progress: bool = False,
) -> TrainReport:
    """Convenience wrapper running a TrainingService without logs or checkpoints"""
    return TrainingService(model_config, train_config, progress=progress).train(m, init=init)
