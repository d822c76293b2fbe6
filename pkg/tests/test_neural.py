"""MLP forward/backward, Adam, soft updates and checkpoints."""

import numpy as np
import pytest

from clorl.core.exceptions import (
    CheckpointFormatException,
    ConfigException,
    NonFiniteException,
    ShapeMismatchException,
)
from clorl.modules.neural import (
    AdamState,
    CheckpointRepository,
    LrSchedule,
    MlpSpec,
    ParamSet,
    adam_step,
    backward,
    forward,
    forward_cached,
    init_params,
    soft_update,
)


def _reference_forward(params, inputs):
    """Straightforward loop over layers, no caching, no batching tricks."""
    layers = params.layers
    out = []
    for x in np.atleast_2d(inputs):
        h = x
        for i, (w, b) in enumerate(layers):
            z = np.array([sum(h[k] * w[k, j] for k in range(w.shape[0])) + b[j] for j in range(w.shape[1])])
            h = z if i == len(layers) - 1 else np.maximum(z, 0.0)
        out.append(h)
    return np.array(out)


def _fd_param_grad(params, spec, inputs, upstream, h=1e-6, rng_seed=None):
    flat = params.flat()
    numeric = np.empty_like(flat)

    def objective(p):
        train_rng = np.random.default_rng(rng_seed) if rng_seed is not None else None
        return float(np.sum(forward(p, spec, inputs, train_rng) * upstream))

    for i in range(flat.size):
        step = np.zeros_like(flat)
        step[i] = h
        numeric[i] = (objective(params.with_flat(flat + step)) - objective(params.with_flat(flat - step))) / (2 * h)
    return numeric


class TestMlpSpec:

    def test_linear_map_parameter_count(self):
        spec = MlpSpec(input_dim=3, hidden_dim=4, n_hidden_layers=0, output_dim=2)
        assert spec.layer_dims == [(3, 2)]
        assert spec.n_params == 8

    def test_categorical_critic_parameter_count(self):
        spec = MlpSpec(input_dim=17, hidden_dim=256, n_hidden_layers=3, output_dim=101)
        assert spec.n_params == 17 * 256 + 256 + 2 * (256 * 256 + 256) + 256 * 101 + 101

    def test_init_matches_spec(self):
        spec = MlpSpec(input_dim=17, output_dim=101)
        params = init_params(spec, np.random.default_rng(0))
        assert params.n_params == spec.n_params
        assert params.shapes == [(17, 256), (256,), (256, 256), (256,), (256, 256), (256,), (256, 101), (101,)]

    def test_init_is_deterministic(self):
        spec = MlpSpec(input_dim=3, output_dim=1)
        a = init_params(spec, np.random.default_rng(0))
        b = init_params(spec, np.random.default_rng(0))
        c = init_params(spec, np.random.default_rng(1))
        assert a.equals(b)
        assert not a.equals(c)


class TestForward:

    def test_zero_weights_emit_bias(self):
        spec = MlpSpec(input_dim=3, hidden_dim=5, n_hidden_layers=2, output_dim=2)
        params = init_params(spec, np.random.default_rng(0)).zeros_like()
        arrays = list(params.arrays)
        arrays[-1] = np.array([1.5, -2.0])
        out = forward(ParamSet(tuple(arrays)), spec, np.random.default_rng(1).normal(size=(4, 3)))
        np.testing.assert_array_equal(out, np.tile([1.5, -2.0], (4, 1)))

    def test_relu_clamps_negative_input(self):
        spec = MlpSpec(input_dim=1, hidden_dim=1, n_hidden_layers=1, output_dim=1)
        params = ParamSet.from_layers([(np.ones((1, 1)), np.zeros(1)), (np.ones((1, 1)), np.zeros(1))])
        assert forward(params, spec, np.array([-3.0]))[0] == 0.0
        assert forward(params, spec, np.array([2.0]))[0] == 2.0

    def test_matches_reference_implementation(self):
        spec = MlpSpec(input_dim=4, hidden_dim=6, n_hidden_layers=3, output_dim=3)
        rng = np.random.default_rng(5)
        for _ in range(5):
            params = init_params(spec, rng).map(lambda a: a + rng.normal(scale=0.1, size=a.shape))
            inputs = rng.normal(size=(7, 4))
            np.testing.assert_allclose(forward(params, spec, inputs), _reference_forward(params, inputs), rtol=0, atol=1e-12)

    def test_single_vector_keeps_no_batch_axis(self):
        spec = MlpSpec(input_dim=2, hidden_dim=3, n_hidden_layers=1, output_dim=4)
        params = init_params(spec, np.random.default_rng(0))
        assert forward(params, spec, np.ones(2)).shape == (4,)
        assert forward(params, spec, np.ones((5, 2))).shape == (5, 4)

    def test_dimension_mismatch(self):
        spec = MlpSpec(input_dim=2, hidden_dim=3, n_hidden_layers=1, output_dim=1)
        params = init_params(spec, np.random.default_rng(0))
        with pytest.raises(ShapeMismatchException):
            forward(params, spec, np.ones(3))
        other = init_params(MlpSpec(input_dim=3, hidden_dim=3, n_hidden_layers=1, output_dim=1), np.random.default_rng(0))
        with pytest.raises(ShapeMismatchException):
            forward(other, spec, np.ones(2))

    def test_dropout_only_in_train_mode(self):
        spec = MlpSpec(input_dim=3, hidden_dim=64, n_hidden_layers=2, output_dim=2, dropout_rate=0.5)
        params = init_params(spec, np.random.default_rng(0))
        inputs = np.random.default_rng(1).normal(size=(8, 3))
        eval_a = forward(params, spec, inputs)
        eval_b = forward(params, spec, inputs)
        np.testing.assert_array_equal(eval_a, eval_b)

        train_a = forward(params, spec, inputs, np.random.default_rng(2))
        train_b = forward(params, spec, inputs, np.random.default_rng(2))
        np.testing.assert_array_equal(train_a, train_b)
        assert not np.allclose(train_a, eval_a)

    def test_dropout_keeps_activations_unbiased(self):
        spec = MlpSpec(input_dim=1, hidden_dim=1, n_hidden_layers=1, output_dim=1, dropout_rate=0.25)
        params = ParamSet.from_layers([(np.ones((1, 1)), np.zeros(1)), (np.ones((1, 1)), np.zeros(1))])
        inputs = np.ones((200_000, 1))
        mean = forward(params, spec, inputs, np.random.default_rng(0)).mean()
        assert mean == pytest.approx(1.0, abs=0.01)


class TestBackward:

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for case in range(50):
            spec = MlpSpec(
                input_dim=int(rng.integers(1, 5)),
                hidden_dim=int(rng.integers(2, 7)),
                n_hidden_layers=int(rng.integers(0, 3)),
                output_dim=int(rng.integers(1, 4)),
            )
            params = init_params(spec, rng).map(lambda a: a + rng.normal(scale=0.2, size=a.shape))
            inputs = rng.normal(size=(3, spec.input_dim))
            upstream = rng.normal(size=(3, spec.output_dim))

            grads, input_grad = backward(params, spec, inputs, upstream)
            np.testing.assert_allclose(
                grads.flat(), _fd_param_grad(params, spec, inputs, upstream), rtol=1e-5, atol=1e-7,
                err_msg=f"case {case}",
            )
            h = 1e-6
            numeric_input = np.empty_like(inputs)
            for idx in np.ndindex(inputs.shape):
                step = np.zeros_like(inputs)
                step[idx] = h
                numeric_input[idx] = (
                    np.sum(forward(params, spec, inputs + step) * upstream)
                    - np.sum(forward(params, spec, inputs - step) * upstream)
                ) / (2 * h)
            np.testing.assert_allclose(input_grad, numeric_input, rtol=1e-5, atol=1e-7, err_msg=f"case {case}")

    def test_categorical_head_shape(self):
        spec = MlpSpec(input_dim=3, hidden_dim=4, n_hidden_layers=2, output_dim=21)
        rng = np.random.default_rng(3)
        params = init_params(spec, rng)
        inputs = rng.normal(size=(2, 3))
        upstream = rng.normal(size=(2, 21))
        grads, _ = backward(params, spec, inputs, upstream)
        np.testing.assert_allclose(grads.flat(), _fd_param_grad(params, spec, inputs, upstream), rtol=1e-5, atol=1e-7)

    def test_dropout_mask_is_reused(self):
        spec = MlpSpec(input_dim=2, hidden_dim=5, n_hidden_layers=2, output_dim=1, dropout_rate=0.3)
        rng = np.random.default_rng(8)
        params = init_params(spec, rng)
        inputs = rng.normal(size=(4, 2))
        upstream = rng.normal(size=(4, 1))
        _, cache = forward_cached(params, spec, inputs, np.random.default_rng(42))
        grads, _ = backward(params, spec, inputs, upstream, cache=cache)
        numeric = _fd_param_grad(params, spec, inputs, upstream, rng_seed=42)
        np.testing.assert_allclose(grads.flat(), numeric, rtol=1e-5, atol=1e-7)

    def test_zero_upstream(self):
        spec = MlpSpec(input_dim=3, hidden_dim=4, n_hidden_layers=2, output_dim=2)
        params = init_params(spec, np.random.default_rng(0))
        grads, input_grad = backward(params, spec, np.ones((2, 3)), np.zeros((2, 2)))
        assert not np.any(grads.flat())
        assert not np.any(input_grad)

    def test_linear_layer_closed_form(self):
        spec = MlpSpec(input_dim=3, hidden_dim=1, n_hidden_layers=0, output_dim=2)
        params = init_params(spec, np.random.default_rng(0))
        x = np.array([1.0, -2.0, 0.5])
        g = np.array([0.3, -1.1])
        grads, input_grad = backward(params, spec, x, g)
        np.testing.assert_allclose(grads[0], np.outer(x, g))
        np.testing.assert_allclose(grads[1], g)
        np.testing.assert_allclose(input_grad, params[0] @ g)

    def test_upstream_shape_mismatch(self):
        spec = MlpSpec(input_dim=3, hidden_dim=4, n_hidden_layers=1, output_dim=2)
        params = init_params(spec, np.random.default_rng(0))
        with pytest.raises(ShapeMismatchException):
            backward(params, spec, np.ones((2, 3)), np.ones((2, 3)))
        with pytest.raises(ShapeMismatchException):
            backward(params, spec, np.ones((2, 3)), np.ones((3, 2)))


class TestAdam:

    @staticmethod
    def _scalar(x):
        return ParamSet((np.array([x], dtype=np.float64),))

    def test_zero_gradient_is_a_no_op(self):
        params = self._scalar(1.25)
        state = AdamState.init(params, 0.1)
        new_state, new_params = adam_step(state, params, params.zeros_like())
        assert new_params.equals(params)
        assert new_state.step == 1
        assert not np.any(new_state.first_moment.flat())
        assert not np.any(new_state.second_moment.flat())

    @pytest.mark.parametrize("g", [3.0, -0.01])
    def test_first_step_moves_by_lr(self, g):
        params = self._scalar(0.0)
        _, new_params = adam_step(AdamState.init(params, 0.1), params, self._scalar(g))
        assert new_params[0][0] == pytest.approx(-0.1 * np.sign(g), rel=1e-5)

    def test_minimizes_quadratic(self):
        params = self._scalar(5.0)
        state = AdamState.init(params, 0.1)
        for _ in range(100):
            state, params = adam_step(state, params, params.map(lambda a: 2.0 * a))
        assert abs(params[0][0]) < 0.5

    def test_rejects_non_finite_gradient(self):
        params = self._scalar(0.0)
        with pytest.raises(NonFiniteException):
            adam_step(AdamState.init(params, 0.1), params, self._scalar(np.inf))

    def test_rejects_misaligned_gradient(self):
        params = self._scalar(0.0)
        with pytest.raises(ShapeMismatchException):
            adam_step(AdamState.init(params, 0.1), params, ParamSet((np.zeros(2),)))

    def test_cosine_schedule_endpoints(self):
        state = AdamState.init(self._scalar(0.0), 3e-4, LrSchedule.cosine(1000))
        assert state.learning_rate(0) == 3e-4
        assert state.learning_rate(500) == pytest.approx(1.5e-4)
        assert abs(state.learning_rate(1000)) < 1e-12

    def test_constant_schedule(self):
        state = AdamState.init(self._scalar(0.0), 1e-3)
        assert state.learning_rate(0) == state.learning_rate(10**6) == 1e-3

    def test_cosine_requires_horizon(self):
        with pytest.raises(ValueError):
            LrSchedule(kind="cosine")

    def test_deterministic_trajectory(self):
        spec = MlpSpec(input_dim=2, hidden_dim=8, n_hidden_layers=2, output_dim=1)

        def run():
            rng = np.random.default_rng(0)
            params = init_params(spec, rng)
            state = AdamState.init(params, 1e-2)
            for _ in range(20):
                x = rng.normal(size=(16, 2))
                y = forward(params, spec, x)
                grads, _ = backward(params, spec, x, 2 * (y - x.sum(axis=1, keepdims=True)) / 16)
                state, params = adam_step(state, params, grads)
            return params

        assert run().equals(run())


class TestSoftUpdate:

    def test_full_rate_copies_online(self):
        rng = np.random.default_rng(0)
        target = ParamSet((rng.normal(size=(3, 2)), rng.normal(size=2)))
        online = ParamSet((rng.normal(size=(3, 2)), rng.normal(size=2)))
        assert soft_update(target, online, 1.0).equals(online)

    def test_small_rate(self):
        target = ParamSet((np.zeros(3),))
        online = ParamSet((np.ones(3),))
        np.testing.assert_allclose(soft_update(target, online, 0.005)[0], 0.005)

    def test_two_steps_compose(self):
        rng = np.random.default_rng(2)
        target = ParamSet((rng.normal(size=(4, 3)), rng.normal(size=3)))
        online = ParamSet((rng.normal(size=(4, 3)), rng.normal(size=3)))
        tau = 0.05
        twice = soft_update(soft_update(target, online, tau), online, tau)
        once = soft_update(target, online, 1.0 - (1.0 - tau) ** 2)
        for a, b in zip(twice.arrays, once.arrays):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)

    def test_fixed_point(self):
        params = ParamSet((np.random.default_rng(1).normal(size=5),))
        np.testing.assert_allclose(soft_update(params, params, 0.3)[0], params[0], rtol=1e-15)

    @pytest.mark.parametrize("tau", [0.0, -0.1, 1.5])
    def test_rate_out_of_range(self, tau):
        params = ParamSet((np.zeros(2),))
        with pytest.raises(ConfigException):
            soft_update(params, params, tau)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchException):
            soft_update(ParamSet((np.zeros(2),)), ParamSet((np.zeros(3),)), 0.5)


class TestParamSet:

    def test_flat_round_trip(self):
        params = init_params(MlpSpec(input_dim=3, hidden_dim=4, n_hidden_layers=1, output_dim=2), np.random.default_rng(0))
        assert params.with_flat(params.flat()).equals(params)
        with pytest.raises(ShapeMismatchException):
            params.with_flat(np.zeros(3))

    def test_all_finite(self):
        assert ParamSet((np.zeros(2),)).all_finite()
        assert not ParamSet((np.array([0.0, np.nan]),)).all_finite()


class TestCheckpoint:

    def test_round_trip(self, tmp_path):
        spec = MlpSpec(input_dim=3, hidden_dim=4, n_hidden_layers=2, output_dim=5)
        params = init_params(spec, np.random.default_rng(0))
        path = CheckpointRepository.save(tmp_path / "ckpt" / "critic_0.ckpt", params, spec, step=17, schedule=LrSchedule.cosine(100))
        loaded = CheckpointRepository.load(path)
        assert loaded.spec == spec
        assert loaded.step == 17
        assert loaded.schedule == LrSchedule.cosine(100)
        assert loaded.params.equals(params.map(lambda a: a.astype(np.float32)))

    def test_float32_params_are_bit_exact(self, tmp_path):
        params = ParamSet((np.random.default_rng(2).normal(size=(2, 3)).astype(np.float32), np.zeros(3, dtype=np.float32)))
        loaded = CheckpointRepository.load(CheckpointRepository.save(tmp_path / "a.ckpt", params))
        assert loaded.params.equals(params)
        assert loaded.spec is None

    def test_truncated_file(self, tmp_path):
        spec = MlpSpec(input_dim=2, hidden_dim=3, n_hidden_layers=1, output_dim=1)
        path = CheckpointRepository.save(tmp_path / "a.ckpt", init_params(spec, np.random.default_rng(0)), spec)
        raw = path.read_bytes()
        for cut in (2, 10, len(raw) - 4):
            path.write_bytes(raw[:cut])
            with pytest.raises(CheckpointFormatException):
                CheckpointRepository.load(path)

    def test_trailing_bytes(self, tmp_path):
        params = ParamSet((np.zeros(2, dtype=np.float32),))
        path = CheckpointRepository.save(tmp_path / "a.ckpt", params)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(CheckpointFormatException):
            CheckpointRepository.load(path)
