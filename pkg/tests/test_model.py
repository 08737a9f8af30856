"""
PeRCNN model tests: parameters, ISG, Pi-block, highway and rollout.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from percnn_lab.core.errors import CheckpointMismatchError, DimensionError, DivergenceError, ShapeError, SpecError
from percnn_lab.core.grid import Field, PadSpec, conv, upsample, Alignment
from percnn_lab.core.domain import Trajectory
from percnn_lab.core.model import (
    FrozenFilterConfig,
    HighwayMode,
    ModelConfig,
    ModelParams,
    euler_step,
    highway_diffusion,
    highway_only,
    identity_isg,
    isg_forward,
    parameter_shapes,
    persistence_baseline,
    pi_block_residual,
    product_term,
    representable_reaction_params,
    rollout,
    rollout_from_state,
    shape_diff,
)
from percnn_lab.core.model.params import frozen_layout
from percnn_lab.core.model.percnn import layer_filters
from percnn_lab.core.solver import first_derivative, grayscott_rhs, laplacian


GS = {"mu_u": 0.2, "mu_v": 0.1, "kappa": 0.055, "f": 0.025}


def small_config(**overrides) -> ModelConfig:
    values = dict(rank=2, n_parallel=2, filter_size=3, n_channels=3, isg_channels=2, isg_filter_size=3, dt=0.01)
    values.update(overrides)
    return ModelConfig(**values)


def reaction_config(**overrides) -> ModelConfig:
    values = dict(rank=2, n_parallel=3, filter_size=1, n_channels=3, isg_channels=1, isg_filter_size=1, dt=0.5)
    values.update(overrides)
    return ModelConfig(**values)


def random_state(seed=0, shape=(16, 16), spacing=(6.25, 6.25)):
    rng = np.random.default_rng(seed)
    return Field.from_array(rng.uniform(0.0, 1.0, (2,) + shape), spacing)


def zero_arrays(config):
    return {name: np.zeros(shape) for name, shape in parameter_shapes(config).items()}


class TestModelConfig:
    def test_defaults_match_published_burgers_setup(self):
        config = ModelConfig()
        assert config.n_parallel == 4 and config.filter_size == 5 and config.n_channels == 8
        assert config.highway == HighwayMode.DIFFUSION

    def test_rejects_even_filter(self):
        with pytest.raises(ValidationError):
            ModelConfig(filter_size=4)

    def test_rejects_unknown_keys(self):
        with pytest.raises(ValidationError):
            ModelConfig(filters=3)

    def test_frozen_filter_needs_wide_layer(self):
        with pytest.raises(ValidationError):
            small_config(frozen=[{"layer": 0, "channel": 0, "role": "dx"}])

    def test_frozen_dz_needs_third_axis(self):
        with pytest.raises(ValidationError):
            small_config(filter_size=5, frozen=[{"layer": 0, "channel": 0, "role": "dz"}])

    def test_frozen_free_role_rejected(self):
        with pytest.raises(ValidationError):
            FrozenFilterConfig(layer=0, channel=0, role="free")

    def test_frozen_channel_twice(self):
        with pytest.raises(ValidationError):
            small_config(
                filter_size=5,
                frozen=[{"layer": 0, "channel": 1, "role": "dx"}, {"layer": 0, "channel": 1, "role": "dy"}],
            )

    def test_boundary_values_follow_bc(self):
        with pytest.raises(ValidationError):
            small_config(bc="dirichlet")
        with pytest.raises(ValidationError):
            small_config(boundary_values=[[0.0, 0.0], [0.0, 0.0]])
        config = small_config(bc="neumann", boundary_values=[[0.0, 0.0], [0.0, 0.0]])
        assert config.pad_spec().faces(2) == ((0.0, 0.0), (0.0, 0.0))


class TestModelParams:
    def test_declaration_order(self):
        names = list(parameter_shapes(small_config()))
        assert names[:6] == [
            "isg.conv1.weight", "isg.conv1.bias", "isg.conv2.weight", "isg.conv2.bias", "isg.out.weight", "isg.out.bias",
        ]
        assert names[-1] == "highway.diff_coef"
        assert "pi.layer1.weight" in names and "pi.aggregate.bias" in names

    def test_no_highway_parameter_without_highway(self):
        assert "highway.diff_coef" not in parameter_shapes(small_config(highway="none"))

    def test_init_is_seeded(self):
        config = small_config()
        a, b, c = ModelParams.init(config, 1), ModelParams.init(config, 1), ModelParams.init(config, 2)
        assert a.allclose(b)
        assert not a.allclose(c)

    def test_init_bounds_and_skip_identity(self):
        config = small_config()
        params = ModelParams.init(config, 0)
        bound = config.init_scale / np.sqrt(2 * 9)
        assert np.max(np.abs(params["pi.layer0.weight"])) <= bound
        out = params["isg.out.weight"]
        np.testing.assert_array_equal(out[:, :2, 0, 0], np.eye(2))
        np.testing.assert_array_equal(params["isg.out.bias"], np.zeros(2))
        np.testing.assert_array_equal(params["highway.diff_coef"], [0.05, 0.05])

    def test_init_zeroes_frozen_channels(self):
        config = small_config(filter_size=5, frozen=[{"layer": 1, "channel": 2, "role": "laplacian", "source": 1}])
        params = ModelParams.init(config, 0)
        assert not params["pi.layer1.weight"][2].any()
        assert params["pi.layer1.bias"][2] == 0.0
        assert params["pi.layer1.weight"][1].any()

    def test_mismatch_reports_diff(self):
        config = small_config()
        arrays = zero_arrays(config)
        arrays["pi.layer0.weight"] = np.zeros((3, 2, 5, 5))
        del arrays["highway.diff_coef"]
        arrays["extra"] = np.zeros(1)
        with pytest.raises(CheckpointMismatchError) as info:
            ModelParams(config, arrays)
        diff = info.value.diff
        assert diff["pi.layer0.weight"] == ((3, 2, 3, 3), (3, 2, 5, 5))
        assert diff["highway.diff_coef"] == ((2,), None)
        assert diff["extra"] == (None, (1,))
        assert shape_diff(config, arrays) == diff

    def test_non_finite_rejected(self):
        config = small_config()
        arrays = zero_arrays(config)
        arrays["pi.aggregate.bias"] = np.array([np.inf, 0.0])
        with pytest.raises(ShapeError):
            ModelParams(config, arrays)

    def test_read_only_and_replace(self):
        params = ModelParams.zeros(small_config())
        with pytest.raises(ValueError):
            params["pi.aggregate.bias"][0] = 1.0
        updated = params.replace({"pi.aggregate.bias": np.ones(2)})
        np.testing.assert_array_equal(updated["pi.aggregate.bias"], np.ones(2))
        np.testing.assert_array_equal(params["pi.aggregate.bias"], np.zeros(2))


class TestInitialStateGenerator:
    def test_identity_reduces_to_interpolation(self):
        config = small_config()
        arrays = zero_arrays(config)
        identity_isg(config, arrays)
        params = ModelParams(config, arrays)
        coarse = random_state(1, shape=(4, 4), spacing=(2.0, 2.0))
        fine = isg_forward(coarse, params, config, (8, 8), (2, 2))
        expected = upsample(coarse, (8, 8), Alignment.PERIODIC)
        np.testing.assert_allclose(fine.values, expected.values, atol=1e-14)
        assert fine.spacing == (1.0, 1.0)

    def test_endpoint_grid(self):
        config = small_config()
        coarse = random_state(2, shape=(5, 5))
        fine = isg_forward(coarse, ModelParams.init(config, 0), config, (9, 9), (2, 2))
        assert fine.shape == (9, 9)
        assert fine.channels == 2

    def test_not_a_subsample(self):
        config = small_config()
        with pytest.raises(ShapeError):
            isg_forward(random_state(shape=(4, 4)), ModelParams.init(config, 0), config, (9, 9), (2, 2))

    def test_channel_mismatch(self):
        config = small_config()
        coarse = Field.from_array(np.zeros((3, 4, 4)))
        with pytest.raises(ShapeError):
            isg_forward(coarse, ModelParams.init(config, 0), config, (8, 8), (2, 2))


class TestPiBlock:
    def test_zero_residual_is_passthrough(self):
        config = small_config()
        arrays = ModelParams.init(config, 0).to_dict()
        arrays["pi.aggregate.weight"][:] = 0.0
        arrays["pi.aggregate.bias"][:] = 0.0
        arrays["highway.diff_coef"][:] = 0.0
        params = ModelParams(config, arrays)
        state = random_state(3, shape=(8, 8))
        np.testing.assert_array_equal(euler_step(state, params, config).values, state.values)

    def test_product_of_pointwise_layers(self):
        config = small_config(filter_size=1, n_channels=1, highway="none")
        arrays = zero_arrays(config)
        arrays["pi.layer0.weight"][0, 0] = 1.0
        arrays["pi.layer1.weight"][0, 1] = 1.0
        params = ModelParams(config, arrays)
        state = random_state(4, shape=(6, 6))
        product = product_term(state, params, config).values[0]
        np.testing.assert_allclose(product, state.values[0] * state.values[1])

    def test_reproduces_grayscott(self):
        config = reaction_config()
        params = representable_reaction_params(config, GS["kappa"], GS["f"], GS["mu_u"], GS["mu_v"])
        state = random_state(5)
        expected = grayscott_rhs(state, GS["mu_u"], GS["mu_v"], GS["kappa"], GS["f"]).values
        np.testing.assert_allclose(pi_block_residual(state, params, config).values, expected, atol=1e-12)

    def test_representable_needs_three_layers(self):
        with pytest.raises(SpecError):
            representable_reaction_params(small_config(), 0.05, 0.02)

    def test_diffusion_only_step(self):
        config = reaction_config()
        params = highway_only(representable_reaction_params(config, 0.0, 0.0, 0.3, 0.1))
        state = random_state(6)
        step = euler_step(state, params, config).values
        lap = laplacian(state).values
        expected = state.values + config.dt * np.array([0.3, 0.1])[:, None, None] * lap
        np.testing.assert_allclose(step, expected, atol=1e-12)

    def test_highway_zero_coefficient(self):
        state = random_state(7, shape=(8, 8))
        out = highway_diffusion(state, np.zeros(2))
        np.testing.assert_array_equal(out.values, np.zeros((2, 8, 8)))

    def test_highway_of_constant_field(self):
        state = Field.from_array(np.full((2, 8, 8), 0.7), (0.5, 0.5))
        out = highway_diffusion(state, np.array([1.0, 2.0]))
        np.testing.assert_allclose(out.values, 0.0, atol=1e-12)

    def test_highway_small_grid(self):
        with pytest.raises(DimensionError):
            highway_diffusion(Field.from_array(np.zeros((2, 4, 8))), np.ones(2))

    def test_periodic_shift_equivariance(self):
        config = small_config()
        params = ModelParams.init(config, 3)
        state = random_state(8, shape=(10, 12), spacing=(1.0, 1.0))
        shifted = Field.from_array(np.roll(state.values, (3, -2), axis=(1, 2)), state.spacing)
        a = np.roll(pi_block_residual(state, params, config).values, (3, -2), axis=(1, 2))
        b = pi_block_residual(shifted, params, config).values
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_residual_consistent_with_step(self):
        config = small_config()
        params = ModelParams.init(config, 4)
        state = random_state(9, shape=(8, 8))
        residual = pi_block_residual(state, params, config).values
        step = euler_step(state, params, config).values
        np.testing.assert_allclose((step - state.values) / config.dt, residual, atol=1e-9)

    def test_dirichlet_model_runs(self):
        config = small_config(bc="dirichlet", boundary_values=[[0.0, 1.0], [0.5, 0.5]])
        params = ModelParams.init(config, 0)
        out = pi_block_residual(random_state(10, shape=(8, 8)), params, config)
        assert out.shape == (8, 8)


class TestFrozenFilters:
    def test_frozen_channel_is_finite_difference(self):
        config = small_config(
            filter_size=5,
            frozen=[
                {"layer": 0, "channel": 0, "role": "dx", "source": 0},
                {"layer": 0, "channel": 1, "role": "dy", "source": 1},
            ],
        )
        params = ModelParams.init(config, 0)
        state = random_state(11, shape=(12, 12), spacing=(0.1, 0.2))
        w, b = layer_filters(params, config, 0, state.spacing)
        out = conv(state, w, b, PadSpec.periodic()).values
        np.testing.assert_allclose(out[0], first_derivative(state, 0).values[0], atol=1e-10)
        np.testing.assert_allclose(out[1], first_derivative(state, 1).values[1], atol=1e-10)

    def test_layout_follows_spacing(self):
        config = small_config(filter_size=5, frozen=[{"layer": 0, "channel": 0, "role": "laplacian"}])
        _, fixed_a, _ = frozen_layout(config, 0, (1.0, 1.0))
        _, fixed_b, _ = frozen_layout(config, 0, (0.5, 0.5))
        np.testing.assert_allclose(fixed_b, 4.0 * fixed_a)
        assert frozen_layout(config, 1, (1.0, 1.0)) is None


class TestRollout:
    def test_length_and_times(self):
        config = reaction_config()
        params = representable_reaction_params(config, GS["kappa"], GS["f"], GS["mu_u"], GS["mu_v"])
        traj = rollout_from_state(random_state(12), params, config, 4)
        assert len(traj) == 5
        np.testing.assert_allclose(traj.times, np.arange(5) * 0.5)

    def test_zero_steps_is_isg_output(self):
        config = small_config()
        params = ModelParams.init(config, 0)
        coarse = random_state(13, shape=(4, 4), spacing=(2.0, 2.0))
        traj = rollout(coarse, params, config, 0, (8, 8), (2, 2))
        assert len(traj) == 1
        np.testing.assert_array_equal(traj[0].values, isg_forward(coarse, params, config, (8, 8), (2, 2)).values)

    def test_negative_steps(self):
        config = small_config()
        with pytest.raises(SpecError):
            rollout_from_state(random_state(shape=(8, 8)), ModelParams.init(config, 0), config, -1)

    def test_divergence(self):
        config = reaction_config(dt=1.0)
        params = representable_reaction_params(config, GS["kappa"], GS["f"])
        params = params.replace({"pi.aggregate.bias": np.array([1e7, 0.0])})
        with pytest.raises(DivergenceError) as info:
            rollout_from_state(random_state(14), params, config, 5)
        assert info.value.step == 1


class TestBaselines:
    def test_persistence_holds_last_training_snapshot(self):
        values = np.arange(5 * 2 * 3 * 3, dtype=float).reshape(5, 2, 3, 3)
        traj = Trajectory.from_array(values, 0.1)
        held = persistence_baseline(traj, 2)
        assert len(held) == 5
        np.testing.assert_array_equal(held[1].values, values[1])
        np.testing.assert_array_equal(held[4].values, values[2])

    def test_persistence_index_out_of_range(self):
        traj = Trajectory.from_array(np.zeros((3, 1, 2, 2)), 0.1)
        with pytest.raises(SpecError):
            persistence_baseline(traj, 3)

    def test_highway_only_zeroes_aggregation(self):
        params = highway_only(ModelParams.init(small_config(), 0))
        assert not params["pi.aggregate.weight"].any()
        assert not params["pi.aggregate.bias"].any()

    def test_highway_only_needs_highway(self):
        with pytest.raises(SpecError):
            highway_only(ModelParams.init(small_config(highway="none"), 0))
