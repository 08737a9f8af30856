"""
percnn-lab command line

Subcommands generate | train | predict | evaluate | interpret. Every command
resolves a RunConfig, writes it to its output directory as config.yaml and
finishes with a JSON manifest of what it wrote.
"""

from functools import wraps
from pathlib import Path
from typing import Dict, List, Optional, Sequence
import json
import logging
import sys

import click

from . import __version__
from .config import RunConfig, load_config, write_config
from .core.errors import CheckpointMismatchError, ConfigError, PercnnError
from .core.domain import STATE_NAMES, PdeKind, TrainingState, Trajectory
from .core.model import HighwayMode, ModelParams, highway_only, persistence_baseline, rollout
from .core.application.services.datasets import generate_reference, measure
from .core.application.services.evaluation import compare_models, export_curve_csv, write_curve_svg
from .core.application.services.interpretation import (
    equation_report,
    expand,
    verify_extraction,
    write_terms_csv,
)
from .core.application.services.training import TrainingService
from .core.infrastructure.persistence import (
    DATASET_MANIFEST,
    RUN_MANIFEST,
    DatasetManifest,
    FileEntry,
    MeasurementInfo,
    RunManifest,
    export_slices,
    load_checkpoint,
    read_manifest,
    read_measurement,
    read_trajectory,
    save_checkpoint,
    verify_files,
    write_manifest,
    write_measurement,
    write_trajectory,
)


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(quiet: bool):
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, format=LOG_FORMAT, force=True)


def common_options(command):
    """--config, --set, --out, --seed and --quiet shared by every subcommand"""
    options = [
        click.option("--config", "config_source", default=None, help="preset name or YAML file"),
        click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="override a config value"),
        click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
                     help="output directory (defaults to out_dir from the config)"),
        click.option("--seed", type=int, default=None, help="base seed for ICs, noise and initialization"),
        click.option("--quiet", is_flag=True, help="warnings only, no progress bar"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def reports_errors(command):
    """Map library errors onto exit codes: 2 config, 3 divergence, 4 I/O"""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PercnnError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)
        except OSError as e:
            logger.error(f"I/O error: {e}")
            click.echo(f"error: {e}", err=True)
            sys.exit(4)
    return wrapper


def prepare(config_source, overrides, out_dir, seed, quiet) -> RunConfig:
    configure_logging(quiet)
    config = load_config(config_source, overrides, seed, out_dir)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    write_config(config, config.out_dir)
    return config


def state_names(channels: int) -> List[str]:
    return list(STATE_NAMES[:channels]) if channels <= len(STATE_NAMES) else [f"u{c}" for c in range(channels)]


def load_dataset(data_dir: Path):
    """Verified manifest, clean trajectory and measurement of a dataset directory"""
    manifest = read_manifest(data_dir / DATASET_MANIFEST, DatasetManifest)
    verify_files(data_dir, manifest.files)
    _, reference = read_trajectory(data_dir / manifest.files["trajectory"].name)
    info = manifest.measurement
    _, m = read_measurement(
        data_dir / manifest.files["measurement"].name,
        info.spatial_stride,
        info.temporal_stride,
        info.noise_level,
        info.noise_seed,
        manifest.fine_shape,
    )
    return manifest, reference, m


def load_params(path: Path, config: RunConfig) -> ModelParams:
    try:
        return load_checkpoint(path, expected=config.model).params
    except CheckpointMismatchError:
        logger.error(f"Checkpoint {path} does not fit the configured model")
        raise


def finish(config: RunConfig, command: str, inputs: Dict[str, Path], outputs: Dict[str, Path], details=None):
    manifest = RunManifest(
        command=command,
        seed=config.seed,
        inputs={k: FileEntry.of(p) for k, p in inputs.items()},
        outputs={k: FileEntry.of(p) for k, p in outputs.items()},
        details=details or {},
    )
    write_manifest(config.out_dir / RUN_MANIFEST, manifest)


def parse_slices(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(k) for k in text.split(",") if k.strip()]
    except ValueError as e:
        raise ConfigError(f"--slices expects comma-separated integers, got '{text}'") from e


@click.group()
@click.version_option(__version__, prog_name="percnn")
def cli():
    """PeRCNN lab: generate data, train, predict, evaluate and interpret."""


@cli.command()
@common_options
@reports_errors
def generate(config_source, overrides, out_dir, seed, quiet):
    """Integrate the reference system and write trajectory, measurement and manifest."""
    config = prepare(config_source, overrides, out_dir, seed, quiet)
    system = config.system.build()
    reference = generate_reference(
        system,
        config.system.grid,
        config.system.n_steps,
        config.system.dt,
        config.ic_seed,
        config.system.ic_options,
    )
    ms = config.measurement
    m = measure(reference, ms.spatial_stride, ms.temporal_stride, ms.window_steps, ms.noise_level, config.noise_seed)

    out = config.out_dir
    write_trajectory(out / "trajectory.pcnf", reference, system.kind)
    write_measurement(out / "measurement.pcnf", m, system.kind)
    manifest = DatasetManifest(
        kind=system.kind.value,
        provenance=config.system.provenance,
        system_params=dict(system.params),
        domain=[tuple(d) for d in system.domain],
        fine_shape=reference.shape,
        dt=reference.dt,
        n_steps=len(reference) - 1,
        ic_seed=config.ic_seed,
        measurement=MeasurementInfo(
            spatial_stride=m.spatial_stride,
            temporal_stride=m.temporal_stride,
            noise_level=m.noise_level,
            noise_seed=m.noise_seed,
        ),
        files={
            "trajectory": FileEntry.of(out / "trajectory.pcnf"),
            "measurement": FileEntry.of(out / "measurement.pcnf"),
        },
    )
    write_manifest(out / DATASET_MANIFEST, manifest)
    logger.info(f"Dataset written to {out}")


@cli.command()
@common_options
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--resume", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="checkpoint carrying optimizer state")
@reports_errors
def train(config_source, overrides, out_dir, seed, quiet, data_dir, resume):
    """Fit a PeRCNN to a dataset's measurement."""
    config = prepare(config_source, overrides, out_dir, seed, quiet)
    out = config.out_dir
    _, _, m = load_dataset(data_dir)

    state: Optional[TrainingState] = None
    log_path = out / "train_log.csv"
    if resume is not None:
        checkpoint = load_checkpoint(resume, expected=config.model)
        if checkpoint.state is None:
            raise ConfigError(f"{resume} holds no optimizer state to resume from")
        state = checkpoint.state
    elif log_path.exists():
        log_path.unlink()

    def on_checkpoint(kind, params, training_state):
        if kind == "periodic":
            save_checkpoint(out / f"checkpoint_{training_state.epoch:06d}.pcck", params, training_state)
            logger.info(f"Periodic checkpoint written at epoch {training_state.epoch}")
        else:
            save_checkpoint(out / "best.pcck", params)
            logger.debug("Best checkpoint updated")

    service = TrainingService(config.model, config.train_config(), log_path, on_checkpoint, progress=not quiet)
    report = service.train(m, resume=state)
    save_checkpoint(out / "last.pcck", service.final_state.params, service.final_state)
    summary = report.summary()
    (out / "train_report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    click.echo(f"best epoch {report.best_epoch}, validation loss {report.best_val_loss:.4e}, "
               f"final train loss {report.final_train_loss:.4e}")
    finish(config, "train", {"measurement": data_dir / "measurement.pcnf"},
           {"best": out / "best.pcck", "last": out / "last.pcck"},
           {"best_epoch": report.best_epoch, "epochs_run": len(report.epochs)})


def predict_trajectory(params: ModelParams, config: RunConfig, m, steps: int) -> Trajectory:
    return rollout(m.snapshot(0), params, config.model, steps, m.fine_shape, m.spatial_stride).detach()


@cli.command()
@common_options
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--steps", type=int, default=None, help="rollout steps (default steps_train + steps_extrapolate)")
@click.option("--slices", default=None, help="comma-separated snapshot indices exported as CSV grids")
@reports_errors
def predict(config_source, overrides, out_dir, seed, quiet, data_dir, checkpoint, steps, slices):
    """Roll a trained model out from the first measurement snapshot."""
    config = prepare(config_source, overrides, out_dir, seed, quiet)
    out = config.out_dir
    manifest, _, m = load_dataset(data_dir)
    params = load_params(checkpoint, config)
    steps = config.predict_steps if steps is None else steps
    if steps < 0:
        raise ConfigError(f"--steps must be >= 0, got {steps}")
    prediction = predict_trajectory(params, config, m, steps)

    path = out / "prediction.pcnf"
    write_trajectory(path, prediction, PdeKind(manifest.kind))
    indices = parse_slices(slices)
    indices = config.predict.slices if indices is None else indices
    written = export_slices(prediction, indices, out, state_names(prediction.channels))
    logger.info(f"Prediction of {steps} steps written to {path} with {len(written)} slice files")
    outputs = {"prediction": path}
    outputs.update({p.stem: p for p in written})
    finish(config, "predict", {"checkpoint": checkpoint}, outputs, {"steps": steps})


@cli.command()
@common_options
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--prediction", "prediction_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="PCNF prediction; rolled out from --checkpoint when omitted")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@reports_errors
def evaluate(config_source, overrides, out_dir, seed, quiet, data_dir, prediction_path, checkpoint):
    """Accumulative RMSE curves against the clean reference."""
    config = prepare(config_source, overrides, out_dir, seed, quiet)
    out = config.out_dir
    _, reference, m = load_dataset(data_dir)
    params = load_params(checkpoint, config) if checkpoint is not None else None
    if prediction_path is not None:
        _, prediction = read_trajectory(prediction_path)
    elif params is not None:
        steps = min(config.predict_steps, len(reference) - 1)
        prediction = predict_trajectory(params, config, m, steps)
    else:
        raise ConfigError("evaluate needs --prediction or --checkpoint")
    if len(prediction) > len(reference):
        raise ConfigError(f"prediction has {len(prediction)} snapshots, reference only {len(reference)}")
    reference = reference.window(0, len(prediction))

    train_end = min(config.train_end_index, len(prediction) - 1)
    candidates: Dict[str, Trajectory] = {"model": prediction}
    if config.evaluate.baselines:
        candidates["persistence"] = persistence_baseline(prediction, train_end)
        if params is not None and params.config.highway == HighwayMode.DIFFUSION:
            candidates["highway-only"] = predict_trajectory(highway_only(params), config, m, len(prediction) - 1)
    curves = compare_models(reference, candidates, train_end)

    outputs = {}
    for curve in curves:
        path = out / ("error_curve.csv" if curve.label == "model" else f"error_curve_{curve.label}.csv")
        export_curve_csv(curve, path)
        outputs[path.stem] = path
    svg = out / "error_curve.svg"
    write_curve_svg(curves, svg)
    outputs["svg"] = svg
    for curve in curves:
        click.echo(f"{curve.label}: final accumulative RMSE {curve.final:.4e}")
    finish(config, "evaluate", {}, outputs, {c.label: c.final for c in curves})


@cli.command()
@common_options
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--threshold", type=float, default=None, help="prune terms below this |coefficient|")
@reports_errors
def interpret(config_source, overrides, out_dir, seed, quiet, checkpoint, threshold):
    """Extract the learned right-hand side as explicit polynomials."""
    config = prepare(config_source, overrides, out_dir, seed, quiet)
    out = config.out_dir
    params = load_params(checkpoint, config)
    threshold = config.interpret.threshold if threshold is None else threshold
    exprs = expand(params, config.model)
    deviation = verify_extraction(
        exprs, params, config.model, config.interpret.n_samples, config.interpret.seed
    )
    report = equation_report(exprs, threshold)
    (out / "equation.txt").write_text(report)
    write_terms_csv(exprs, out / "terms.csv")
    logger.info(f"Extraction verified: max deviation {deviation:.3e}")
    click.echo(report, nl=False)
    finish(config, "interpret", {"checkpoint": checkpoint},
           {"equation": out / "equation.txt", "terms": out / "terms.csv"},
           {"threshold": threshold, "max_deviation": deviation})


def main():
    cli()


if __name__ == "__main__":
    main()
