"""
Training tests: loss, Adam, the training loop and its recovery policy.
"""

import csv

import numpy as np
import pytest

from percnn_lab.core.errors import DivergenceError, SpecError, TrainingDivergedError
from percnn_lab.core.grid import Field, Tape, gradient_check
from percnn_lab.core.domain import Trajectory
from percnn_lab.core.model import ModelConfig, ModelParams, rollout
from percnn_lab.config import load_config
from percnn_lab.core.solver import subsample
from percnn_lab.core.application.services.training import (
    AdamState,
    TrainConfig,
    TrainingService,
    adam_step,
    data_mse,
    loss,
    train,
)
from percnn_lab.core.application.services.datasets import generate_reference, measure, toy_generator_params
from percnn_lab.core.application.services.interpretation import expand, prune


def tiny_config(**overrides) -> ModelConfig:
    values = dict(rank=2, n_parallel=2, filter_size=3, n_channels=2, isg_channels=1, isg_filter_size=1, dt=0.01)
    values.update(overrides)
    return ModelConfig(**values)


def random_measurement(seed=0, n_t=4, shape=(6, 6), stride=2):
    rng = np.random.default_rng(seed)
    traj = Trajectory.from_array(rng.uniform(0.0, 1.0, (n_t, 2) + shape), 0.01)
    return subsample(traj, stride, 1)


def quick_train_config(**overrides) -> TrainConfig:
    values = dict(lr=0.005, max_epochs=6, patience=100, seed=3, log_every=1)
    values.update(overrides)
    return TrainConfig(**values)


class TestLoss:
    def test_exact_fit_is_zero(self):
        rng = np.random.default_rng(1)
        traj = Trajectory.from_array(rng.standard_normal((3, 2, 4, 4)), 0.1)
        m = subsample(traj, 1, 1)
        assert float(loss(traj, m, traj[0], 1.0).value) == 0.0

    def test_single_cell_misfit(self):
        m = subsample(Trajectory.from_array(np.zeros((2, 1, 1, 1)), 0.1), 1, 1)
        prediction = Trajectory.from_array(np.full((2, 1, 1, 1), 2.0), 0.1)
        initial = Field.from_array(np.zeros((1, 1, 1)))
        for lam in (0.0, 0.7, 3.0):
            assert float(loss(prediction, m, initial, lam).value) == pytest.approx(4.0)

    def test_regularizer_weight(self):
        m = subsample(Trajectory.from_array(np.zeros((2, 1, 1, 1)), 0.1), 1, 1)
        prediction = Trajectory.from_array(np.zeros((2, 1, 1, 1)), 0.1)
        initial = Field.from_array(np.full((1, 1, 1), 3.0))
        assert float(loss(prediction, m, initial, 0.5).value) == pytest.approx(4.5)

    def test_non_negative(self):
        m = random_measurement(2)
        rng = np.random.default_rng(3)
        prediction = Trajectory.from_array(rng.standard_normal((4, 2, 6, 6)), 0.01)
        assert float(loss(prediction, m, prediction[0], 1.0).value) >= 0.0

    def test_negative_lambda_rejected(self):
        m = random_measurement()
        with pytest.raises(SpecError):
            loss(m.data, m, m.data[0], -1.0)

    def test_index_beyond_prediction(self):
        m = random_measurement()
        short = Trajectory.from_array(np.zeros((2, 2, 6, 6)), 0.01)
        with pytest.raises(SpecError):
            data_mse(short, m, [3])

    def test_end_to_end_gradient(self):
        config = tiny_config()
        m = random_measurement(4)
        values = ModelParams.init(config, 0).to_dict()

        def build(tape, p):
            prediction = rollout(m.snapshot(0), p, config, 3, m.fine_shape, m.spatial_stride)
            return loss(prediction, m, prediction[0], 0.5)

        result = gradient_check(build, values, floor=1e-6)
        assert result.max_error < 1e-4

    def test_frozen_entries_get_zero_gradient(self):
        config = tiny_config(filter_size=5, frozen=[{"layer": 0, "channel": 1, "role": "dx", "source": 0}])
        m = random_measurement(5)
        params = ModelParams.init(config, 0)
        tape = Tape()
        tracked = params.on_tape(tape)
        prediction = rollout(m.snapshot(0), tracked, config, 3, m.fine_shape, m.spatial_stride)
        grads = tape.backward(loss(prediction, m, prediction[0], 1.0))
        assert not grads["pi.layer0.weight"][1].any()
        assert grads["pi.layer0.bias"][1] == 0.0
        assert grads["pi.layer0.weight"][0].any()


class TestAdam:
    def test_zero_gradient_from_fresh_state(self):
        params = {"p": np.array([1.0, -2.0])}
        updated, state = adam_step(params, {"p": np.zeros(2)}, AdamState.fresh(params), lr=0.1)
        np.testing.assert_array_equal(updated["p"], params["p"])
        assert state.step == 1

    def test_moments_decay_without_gradient(self):
        params = {"p": np.zeros(1)}
        state = AdamState(3, {"p": np.ones(1)}, {"p": np.ones(1)})
        _, new = adam_step(params, {"p": np.zeros(1)}, state, lr=0.1)
        np.testing.assert_allclose(new.m["p"], [0.9])
        np.testing.assert_allclose(new.v["p"], [0.999])
        np.testing.assert_array_equal(state.m["p"], [1.0])

    def test_first_step_closed_form(self):
        g = np.array([0.5, -3.0, 1e-3])
        params = {"p": np.array([1.0, 2.0, 3.0])}
        lr, eps = 0.01, 1e-8
        updated, _ = adam_step(params, {"p": g}, AdamState.fresh(params), lr=lr, eps=eps)
        np.testing.assert_allclose(updated["p"], params["p"] - lr * g / (np.abs(g) + eps), rtol=1e-12)

    def test_minimizes_quadratic(self):
        p = {"p": np.zeros(1)}
        state = AdamState.fresh(p)
        for _ in range(500):
            p, state = adam_step(p, {"p": 2.0 * (p["p"] - 3.0)}, state, lr=0.1)
        assert abs(p["p"][0] - 3.0) < 1e-3


class TestTrainingService:
    def test_report_and_log(self, toy_measurement, toy_model_config, tmp_path):
        log = tmp_path / "train_log.csv"
        service = TrainingService(toy_model_config, quick_train_config(), log_path=log, progress=False)
        report = service.train(toy_measurement)
        assert len(report.epochs) == 6
        vals = report.val_losses
        assert report.best_epoch == int(np.argmin(vals))
        assert all(np.isfinite(report.train_losses))
        with open(log) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["epoch", "train_loss", "val_loss", "lr"]
        assert len(rows) == 7
        assert service.final_state.epoch == 6

    def test_loss_decreases(self, toy_measurement, toy_model_config):
        report = train(toy_measurement, toy_model_config, quick_train_config(max_epochs=25))
        assert min(report.train_losses) < report.train_losses[0]

    def test_deterministic(self, toy_measurement, toy_model_config):
        a = train(toy_measurement, toy_model_config, quick_train_config())
        b = train(toy_measurement, toy_model_config, quick_train_config())
        assert a.train_losses == b.train_losses
        assert a.val_losses == b.val_losses
        for name, value in a.best_params.items():
            np.testing.assert_array_equal(value, b.best_params[name])

    def test_resume_continues_bit_identically(self, toy_measurement, toy_model_config):
        straight = train(toy_measurement, toy_model_config, quick_train_config(max_epochs=6))
        first = TrainingService(toy_model_config, quick_train_config(max_epochs=3), progress=False)
        first.train(toy_measurement)
        second = TrainingService(toy_model_config, quick_train_config(max_epochs=6), progress=False)
        resumed = second.train(toy_measurement, resume=first.final_state)
        assert resumed.train_losses == straight.train_losses[3:]

    def test_freeze_isg(self, toy_measurement, toy_model_config):
        service = TrainingService(toy_model_config, quick_train_config(max_epochs=2, freeze_isg=True), progress=False)
        init = ModelParams.init(toy_model_config, 0)
        service.train(toy_measurement, init=init)
        final = service.final_state.params
        for name in init.names:
            if name.startswith("isg."):
                np.testing.assert_array_equal(final[name], init[name])
        assert not np.array_equal(final["pi.aggregate.weight"], init["pi.aggregate.weight"])

    def test_checkpoint_hook(self, toy_measurement, toy_model_config):
        calls = []
        service = TrainingService(
            toy_model_config,
            quick_train_config(max_epochs=4, checkpoint_every=2),
            on_checkpoint=lambda kind, params, state: calls.append((kind, state.epoch if state else None)),
            progress=False,
        )
        report = service.train(toy_measurement)
        assert [c for c in calls if c[0] == "periodic"] == [("periodic", 2), ("periodic", 4)]
        vals = report.val_losses
        improvements = sum(1 for k, v in enumerate(vals) if v < min(vals[:k], default=float("inf")))
        assert [c for c in calls if c[0] == "best"] == [("best", None)] * improvements

    def test_best_checkpoint_holds_best_params(self, toy_measurement, toy_model_config):
        saved = {}
        service = TrainingService(
            toy_model_config,
            quick_train_config(max_epochs=8),
            on_checkpoint=lambda kind, params, state: saved.update({kind: params}),
            progress=False,
        )
        report = service.train(toy_measurement)
        for name, value in report.best_params.items():
            np.testing.assert_array_equal(saved["best"][name], value)

    def test_step_decay(self, toy_measurement, toy_model_config):
        config = quick_train_config(max_epochs=7, lr_step=3, lr_gamma=0.5)
        service = TrainingService(toy_model_config, config, progress=False)
        report = service.train(toy_measurement)
        assert [r.lr for r in report.epochs] == pytest.approx([0.005] * 3 + [0.0025] * 3 + [0.00125])
        assert service.final_state.lr == pytest.approx(0.00125)

    def test_divergence_halves_lr_once(self, toy_measurement, toy_model_config, monkeypatch):
        service = TrainingService(toy_model_config, quick_train_config(max_epochs=4), progress=False)
        original = service.evaluate_epoch
        calls = {"n": 0}

        def flaky(params, m, names):
            calls["n"] += 1
            if calls["n"] == 2:
                raise DivergenceError("rollout diverged", step=3)
            return original(params, m, names)

        monkeypatch.setattr(service, "evaluate_epoch", flaky)
        report = service.train(toy_measurement)
        assert report.divergence_epochs == [1]
        assert [r.epoch for r in report.epochs] == [0, 2, 3]
        assert report.epochs[0].lr == pytest.approx(0.005)
        assert report.epochs[1].lr == pytest.approx(0.0025)

    def test_second_divergence_fails(self, toy_measurement, toy_model_config, monkeypatch):
        service = TrainingService(toy_model_config, quick_train_config(max_epochs=4), progress=False)

        def always(params, m, names):
            raise DivergenceError("rollout diverged", step=1)

        monkeypatch.setattr(service, "evaluate_epoch", always)
        with pytest.raises(TrainingDivergedError) as info:
            service.train(toy_measurement)
        assert info.value.epoch == 1

    def test_dt_mismatch(self, toy_measurement, toy_model_config):
        config = toy_model_config.model_copy(update={"dt": 0.25})
        with pytest.raises(SpecError):
            TrainingService(config, quick_train_config(), progress=False).train(toy_measurement)

    def test_too_few_snapshots(self, toy_measurement, toy_model_config):
        with pytest.raises(SpecError):
            TrainingService(
                toy_model_config, quick_train_config(validation_snapshots=4), progress=False
            ).train(toy_measurement)


@pytest.mark.slow
class TestSelfConsistency:
    """Fit a model to data produced by a PeRCNN of the same family"""

    def test_recovers_generator_dynamics(self, toy_system, toy_measurement, toy_model_config, toy_reference):
        generator = toy_generator_params(toy_system, toy_model_config.dt)
        config = generator.config.model_copy(update={"steps_train": 8, "steps_extrapolate": 4})
        rng = np.random.default_rng(0)
        start = ModelParams(config, generator.to_dict()).replace({
            name: generator[name] + 1e-3 * rng.standard_normal(generator[name].shape)
            for name in generator.names
            if not name.startswith("isg.")
        })
        settings = TrainConfig(
            lr=1e-3, lr_step=100, lr_gamma=0.8, max_epochs=3000, patience=3000, freeze_isg=True, seed=0
        )
        report = train(toy_measurement, config, settings, init=start)
        assert min(report.train_losses) < 1e-8

        m = toy_measurement
        params = ModelParams(config, report.best_params)
        prediction = rollout(m.snapshot(0), params, config, 12, m.fine_shape, m.spatial_stride)
        error = prediction.to_array() - toy_reference.to_array()
        assert np.sqrt(np.mean(error ** 2)) < 1e-3


@pytest.mark.slow
class TestGradientAtScale:
    def test_loss_gradient_on_sixteen_square_grid(self):
        config = ModelConfig(
            rank=2, n_parallel=4, filter_size=3, n_channels=4, isg_channels=4, isg_filter_size=3, dt=0.01
        )
        rng = np.random.default_rng(7)
        m = subsample(Trajectory.from_array(rng.uniform(0.0, 1.0, (6, 2, 16, 16)), 0.01), 2, 1)
        values = ModelParams.init(config, 1).to_dict()

        def build(tape, p):
            prediction = rollout(m.snapshot(0), p, config, 5, m.fine_shape, m.spatial_stride)
            return loss(prediction, m, prediction[0], 1.0)

        result = gradient_check(build, values)
        assert result.fraction_below(1e-4) >= 0.99
        assert result.max_error < 1e-3


@pytest.fixture(scope="module")
def grayscott_desk_run():
    config = load_config("grayscott-desk")
    system = config.system.build()
    reference = generate_reference(
        system, config.system.grid, config.system.n_steps, config.system.dt, config.ic_seed, config.system.ic_options
    )
    ms = config.measurement
    m = measure(reference, ms.spatial_stride, ms.temporal_stride, ms.window_steps, ms.noise_level, config.noise_seed)
    report = TrainingService(config.model, config.train_config(), progress=False).train(m)
    return config, m, ModelParams(config.model, report.best_params)


@pytest.mark.slow
class TestGrayScottRecovery:
    """Desk-scale Gray-Scott run: 32x32 grid, noise-free, 10 measurement snapshots"""

    def test_measurement_layout(self, grayscott_desk_run):
        _, m, _ = grayscott_desk_run
        assert len(m) == 10
        assert m.fine_shape == (32, 32)

    def test_diffusion_coefficients(self, grayscott_desk_run):
        _, _, params = grayscott_desk_run
        mu = params["highway.diff_coef"]
        assert abs(mu[0] - 0.2) / 0.2 < 0.25
        assert abs(mu[1] - 0.1) / 0.1 < 0.25

    def test_cubic_reaction_term(self, grayscott_desk_run):
        config, _, params = grayscott_desk_run
        u_t, v_t = [prune(e, 0.05) for e in expand(params, config.model)]
        assert -1.5 < u_t.coefficient("u", "v", "v") < -0.5
        assert 0.5 < v_t.coefficient("u", "v", "v") < 1.5
