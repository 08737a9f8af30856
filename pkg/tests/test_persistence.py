"""
Persistence tests: PCNF datasets, PCCK checkpoints, manifests and CSV slices.
"""

import csv

import numpy as np
import pytest

from percnn_lab.core.errors import CheckpointMismatchError, DatasetFormatError, SpecError
from percnn_lab.core.domain import AdamState, Measurement, PdeKind, TrainingState, Trajectory
from percnn_lab.core.model import ModelConfig, ModelParams
from percnn_lab.core.infrastructure.persistence import (
    DatasetManifest,
    FileEntry,
    MeasurementInfo,
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


def sample_trajectory(seed=0, shape=(5, 4), n_t=3):
    rng = np.random.default_rng(seed)
    return Trajectory.from_array(rng.standard_normal((n_t, 2) + shape), 0.25, t0=1.0, spacing=(0.5, 2.0))


def small_model():
    return ModelConfig(rank=2, n_parallel=2, filter_size=3, n_channels=2, isg_channels=2, isg_filter_size=3)


class TestDatasetFiles:
    def test_trajectory_round_trip(self, tmp_path):
        traj = sample_trajectory()
        path = tmp_path / "traj.pcnf"
        write_trajectory(path, traj, PdeKind.GRAYSCOTT2D)
        kind, loaded = read_trajectory(path)
        assert kind == PdeKind.GRAYSCOTT2D
        np.testing.assert_array_equal(loaded.to_array(), traj.to_array())
        assert loaded.dt == 0.25 and loaded.t0 == 1.0
        assert loaded.spacing == (0.5, 2.0)

    def test_bytes_depend_only_on_values(self, tmp_path):
        a, b = tmp_path / "a.pcnf", tmp_path / "b.pcnf"
        write_trajectory(a, sample_trajectory(3), PdeKind.BURGERS2D)
        write_trajectory(b, sample_trajectory(3), PdeKind.BURGERS2D)
        assert a.read_bytes() == b.read_bytes()

    def test_measurement_round_trip(self, tmp_path):
        m = Measurement(sample_trajectory(), (2, 3), 4, 0.1, 7, (9, 10))
        path = tmp_path / "m.pcnf"
        write_measurement(path, m, PdeKind.BURGERS2D)
        _, loaded = read_measurement(path, [2, 3], 4, 0.1, 7, [9, 10])
        assert loaded.spatial_stride == (2, 3)
        assert loaded.fine_shape == (9, 10)
        assert loaded.fine_dt == pytest.approx(0.0625)
        np.testing.assert_array_equal(loaded.data.to_array(), m.data.to_array())

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pcnf"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(DatasetFormatError):
            read_trajectory(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.pcnf"
        write_trajectory(path, sample_trajectory(), PdeKind.BURGERS2D)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DatasetFormatError):
            read_trajectory(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "long.pcnf"
        write_trajectory(path, sample_trajectory(), PdeKind.BURGERS2D)
        path.write_bytes(path.read_bytes() + bytes(8))
        with pytest.raises(DatasetFormatError):
            read_trajectory(path)


class TestCheckpoints:
    def test_params_round_trip(self, tmp_path):
        config = small_model()
        params = ModelParams.init(config, 4)
        path = tmp_path / "model.pcck"
        save_checkpoint(path, params)
        ckpt = load_checkpoint(path)
        assert ckpt.config == config
        assert ckpt.state is None
        assert list(ckpt.params.names) == list(params.names)
        for name in params.names:
            np.testing.assert_array_equal(ckpt.params[name], params[name])

    def test_optimizer_state_round_trip(self, tmp_path):
        config = small_model()
        params = ModelParams.init(config, 1)
        moments = {name: np.full(value.shape, 0.5) for name, value in params.items()}
        state = TrainingState(params, AdamState(17, moments, dict(moments)), 0.0025, 9)
        path = tmp_path / "resume.pcck"
        save_checkpoint(path, params, state)
        loaded = load_checkpoint(path, expected=config).state
        assert (loaded.adam.step, loaded.epoch, loaded.lr) == (17, 9, 0.0025)
        for name in params.names:
            np.testing.assert_array_equal(loaded.adam.m[name], moments[name])

    def test_mismatch_lists_offending_tensors(self, tmp_path):
        path = tmp_path / "model.pcck"
        save_checkpoint(path, ModelParams.init(small_model(), 0))
        wider = small_model().model_copy(update={"n_channels": 3})
        with pytest.raises(CheckpointMismatchError) as info:
            load_checkpoint(path, expected=wider)
        assert info.value.diff["pi.layer0.weight"] == ((3, 2, 3, 3), (2, 2, 3, 3))
        assert "pi.aggregate.weight" in info.value.diff
        assert info.value.exit_code == 2

    def test_mismatch_lists_config_fields(self, tmp_path):
        trained = ModelConfig(
            rank=2, n_parallel=2, filter_size=5, n_channels=2, isg_channels=2, isg_filter_size=3, dt=0.01,
            frozen=[{"layer": 0, "channel": 0, "role": "dx"}],
        )
        path = tmp_path / "model.pcck"
        save_checkpoint(path, ModelParams.init(trained, 0))
        configured = trained.model_copy(update={"dt": 0.02, "frozen": []})
        with pytest.raises(CheckpointMismatchError) as info:
            load_checkpoint(path, expected=configured)
        assert set(info.value.diff) == {"dt", "frozen"}
        assert info.value.diff["dt"] == (0.02, 0.01)
        assert "dt: config expects 0.02, checkpoint has 0.01" in str(info.value)

    def test_run_length_may_differ(self, tmp_path):
        path = tmp_path / "model.pcck"
        save_checkpoint(path, ModelParams.init(small_model(), 0))
        longer = small_model().model_copy(update={"steps_extrapolate": 5000})
        assert load_checkpoint(path, expected=longer).config.steps_extrapolate == 5000

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "x.pcck"
        path.write_bytes(b"PCNF\x01\x00\x00\x00")
        with pytest.raises(DatasetFormatError):
            load_checkpoint(path)


class TestManifests:
    def make_manifest(self, tmp_path):
        data = tmp_path / "trajectory.pcnf"
        write_trajectory(data, sample_trajectory(), PdeKind.BURGERS2D)
        return DatasetManifest(
            kind="burgers2d",
            provenance="toy",
            system_params={"nu": 0.005},
            domain=[(0.0, 1.0), (0.0, 1.0)],
            fine_shape=(5, 4),
            dt=0.25,
            n_steps=2,
            ic_seed=0,
            measurement=MeasurementInfo(spatial_stride=(1, 1), temporal_stride=1, noise_level=0.0),
            files={"trajectory": FileEntry.of(data)},
        )

    def test_round_trip_and_verify(self, tmp_path):
        manifest = self.make_manifest(tmp_path)
        write_manifest(tmp_path / "manifest.json", manifest)
        loaded = read_manifest(tmp_path / "manifest.json", DatasetManifest)
        assert loaded == manifest
        verify_files(tmp_path, loaded.files)

    def test_tampered_file(self, tmp_path):
        manifest = self.make_manifest(tmp_path)
        path = tmp_path / "trajectory.pcnf"
        raw = bytearray(path.read_bytes())
        raw[-1] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(DatasetFormatError):
            verify_files(tmp_path, manifest.files)

    def test_missing_file(self, tmp_path):
        manifest = self.make_manifest(tmp_path)
        (tmp_path / "trajectory.pcnf").unlink()
        with pytest.raises(DatasetFormatError):
            verify_files(tmp_path, manifest.files)

    def test_invalid_manifest(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text('{"kind": "burgers2d"}')
        with pytest.raises(DatasetFormatError):
            read_manifest(path, DatasetManifest)


class TestSliceExport:
    def test_csv_grid(self, tmp_path):
        traj = sample_trajectory()
        written = export_slices(traj, [0, 2], tmp_path, ["u", "v"])
        assert [p.name for p in written] == [
            "snapshot_00000_u.csv",
            "snapshot_00000_v.csv",
            "snapshot_00002_u.csv",
            "snapshot_00002_v.csv",
        ]
        with open(written[3]) as f:
            rows = [[float(v) for v in row] for row in csv.reader(f)]
        np.testing.assert_array_equal(np.array(rows), traj[2].values[1])

    def test_index_out_of_range(self, tmp_path):
        with pytest.raises(SpecError):
            export_slices(sample_trajectory(), [3], tmp_path, ["u", "v"])
