"""
Configuration tests: presets, overrides, YAML sources and environment variables.
"""

from pathlib import Path

import pytest
import yaml

from percnn_lab.config import PRESETS, RunConfig, dump_config, load_config, parse_override, write_config
from percnn_lab.core.errors import ConfigError
from percnn_lab.core.domain import PdeKind
from percnn_lab.core.model import HighwayMode


class TestPresets:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_every_preset_validates(self, name):
        config = load_config(name)
        assert config.model.rank == config.system.kind.rank
        assert config.model.dt == config.system.dt

    def test_published_burgers_setup(self):
        config = load_config("burgers")
        assert config.system.kind == PdeKind.BURGERS2D
        assert config.system.grid == [101, 101]
        assert config.measurement.temporal_stride * config.system.dt == pytest.approx(0.01)
        assert config.model.n_parallel == 4 and config.model.filter_size == 5
        assert config.model.highway == HighwayMode.DIFFUSION

    def test_grayscott_desk_keeps_ten_snapshots(self):
        config = load_config("grayscott-desk")
        m = config.measurement
        assert m.window_steps % m.temporal_stride == 0
        assert m.window_steps // m.temporal_stride + 1 == 10
        assert config.model.steps_train == m.window_steps

    def test_interpret_preset_freezes_derivatives(self):
        config = load_config("burgers-interpret")
        assert [f.role.value for f in config.model.frozen] == ["dx", "dy", "dx", "dy"]
        assert config.model.layer_size(1) == 1

    def test_presets_are_not_shared(self):
        load_config("toy", overrides=["train.lr=0.5"])
        assert load_config("toy").train.lr == 0.005


class TestOverrides:
    def test_parse_yaml_scalars(self):
        assert parse_override("model.dt=2.5e-4") == ("model.dt", 0.00025)
        assert parse_override("evaluate.baselines=false") == ("evaluate.baselines", False)
        assert parse_override("predict.slices=[0, 5]") == ("predict.slices", [0, 5])

    def test_applied_in_order(self):
        config = load_config("toy", overrides=["train.max_epochs=10", "train.max_epochs=12", "model.highway=none"])
        assert config.train.max_epochs == 12
        assert config.model.highway == HighwayMode.NONE

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_override("train.lr")

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            load_config("toy", overrides=["train.learning_rate=0.1"])

    def test_invalid_value(self):
        with pytest.raises(ConfigError):
            load_config("toy", overrides=["train.lr=-1"])

    def test_setting_inside_a_scalar(self):
        with pytest.raises(ConfigError):
            load_config("toy", overrides=["seed.value=1"])

    def test_inconsistent_rank(self):
        with pytest.raises(ConfigError):
            load_config("toy", overrides=["system.grid=[16, 16, 16]"])

    def test_window_beyond_trajectory(self):
        with pytest.raises(ConfigError):
            load_config("toy", overrides=["measurement.window_steps=100"])


class TestSources:
    def test_unknown_source(self):
        with pytest.raises(ConfigError):
            load_config("no-such-preset")

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"seed": 9, "train": {"max_epochs": 3}}))
        config = load_config(str(path))
        assert config.seed == 9
        assert config.train.max_epochs == 3

    def test_yaml_must_be_mapping(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_dump_reloads_identically(self, tmp_path):
        config = load_config("burgers-interpret", seed=4, out_dir=tmp_path)
        path = write_config(config, tmp_path)
        assert path.name == "config.yaml"
        assert load_config(str(path)) == config

    def test_defaults(self):
        config = load_config()
        assert isinstance(config, RunConfig)
        assert config.out_dir == Path("runs")
        assert "seed: 0" in dump_config(config)


class TestSeeds:
    def test_derived_seeds(self):
        config = load_config("toy", seed=10)
        assert config.ic_seed == 10
        assert config.noise_seed == 11
        assert config.train_config().seed == 12

    def test_explicit_seeds_win(self):
        config = load_config("toy", overrides=["system.ic_seed=3", "train.seed=4"], seed=10)
        assert config.ic_seed == 3
        assert config.train_config().seed == 4

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("PERCNN_SEED", "21")
        assert load_config("toy").seed == 21
        assert load_config("toy", seed=1).seed == 1
