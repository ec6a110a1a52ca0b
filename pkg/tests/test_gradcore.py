import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prototoken.errors import (
    ConfigError,
    DegenerateVectorError,
    DimensionError,
    LabelError,
    NumericsError,
)
from prototoken.gradcore import (
    AdamState,
    adam_step,
    affine_apply,
    affine_backward,
    activation_apply,
    cosine_similarity,
    finite_diff_check,
    flatten_params,
    softmax_cross_entropy,
    unflatten_params,
)


class TestAffine:
    def test_identity(self):
        y = affine_apply([1.0, 2.0], np.eye(2), [0.0, 0.0])
        np.testing.assert_array_equal(y, [1.0, 2.0])

    def test_direct_scalar_evaluation(self):
        # y_i = sum_j W_ij x_j + b_i evaluated by hand: [1+1+0, 2+2+1]
        y = affine_apply([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0]], [0.0, 1.0])
        np.testing.assert_allclose(y, [2.0, 5.0], rtol=0, atol=0)

    def test_zero_input_returns_bias(self):
        rng = np.random.default_rng(0)
        w = rng.normal(size=(2, 2))
        np.testing.assert_array_equal(affine_apply([0.0, 0.0], w, [3.0, 4.0]), [3.0, 4.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            affine_apply([1.0, 2.0, 3.0], np.eye(2), [0.0, 0.0])
        with pytest.raises(DimensionError):
            affine_apply([1.0, 2.0], np.eye(2), [0.0, 0.0, 0.0])

    def test_backward_zero_upstream(self):
        gx, gw, gb = affine_backward([1.0, 2.0], np.eye(2), [0.0, 0.0])
        assert not gx.any() and not gw.any() and not gb.any()

    def test_backward_direct_formula(self):
        gx, gw, gb = affine_backward([1.0, 0.0], np.eye(2), [1.0, 0.0])
        np.testing.assert_array_equal(gx, [1.0, 0.0])
        np.testing.assert_array_equal(gw, [[1.0, 0.0], [0.0, 0.0]])
        np.testing.assert_array_equal(gb, [1.0, 0.0])

    def test_backward_matches_finite_differences(self):
        # gradient of a random linear functional of the output, over 100 shapes
        rng = np.random.default_rng(42)
        for _ in range(100):
            n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            x = rng.normal(size=n)
            w = rng.normal(size=(m, n))
            b = rng.normal(size=m)
            probe = rng.normal(size=m)

            def loss_of(vec, shapes=(n, m)):
                nn, mm = shapes
                xx = vec[:nn]
                ww = vec[nn:nn + mm * nn].reshape(mm, nn)
                bb = vec[nn + mm * nn:]
                return float(probe @ affine_apply(xx, ww, bb))

            gx, gw, gb = affine_backward(x, w, probe)
            flat = np.concatenate([x, w.ravel(), b])
            analytic = np.concatenate([gx, gw.ravel(), gb])
            assert finite_diff_check(loss_of, flat, analytic) < 1e-6


class TestActivation:
    def test_relu_sign_cases(self):
        y, g = activation_apply([-1.0, 2.0], "relu")
        np.testing.assert_array_equal(y, [0.0, 2.0])
        np.testing.assert_array_equal(g, [0.0, 1.0])

    def test_tanh_origin(self):
        y, g = activation_apply([0.0], "tanh")
        np.testing.assert_array_equal(y, [0.0])
        np.testing.assert_array_equal(g, [1.0])

    def test_tanh_saturation(self):
        y, g = activation_apply([1e3], "tanh")
        assert y[0] == 1.0
        assert abs(g[0]) < 1e-12

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            activation_apply([0.0], "sigmoid")

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(7)
        for kind in ("relu", "tanh"):
            for _ in range(50):
                n = int(rng.integers(1, 9))
                x = rng.normal(size=n)
                # keep relu probes away from the kink, where the derivative jumps
                x[np.abs(x) < 1e-3] = 0.5
                probe = rng.normal(size=n)
                _, local = activation_apply(x, kind)

                def loss_of(v, kind=kind):
                    return float(probe @ activation_apply(v, kind)[0])

                assert finite_diff_check(loss_of, x, probe * local) < 1e-6


class TestSoftmaxCrossEntropy:
    def test_uniform_logits(self):
        loss, _ = softmax_cross_entropy([0.0, 0.0, 0.0, 0.0], 2)
        assert abs(loss - math.log(4.0)) < 1e-12

    def test_confident_correct(self):
        loss, _ = softmax_cross_entropy([100.0, 0.0], 0)
        assert 0.0 <= loss < 1e-40

    def test_direct_high_precision_value(self):
        # independent evaluation of -log(e^1 / (e^1+e^2+e^3)) without max-subtraction
        expected = math.log(math.exp(1) + math.exp(2) + math.exp(3)) - 1.0
        loss, _ = softmax_cross_entropy([1.0, 2.0, 3.0], 0)
        assert abs(loss - expected) < 1e-12
        assert abs(loss - 2.40760596) < 5e-9

    def test_gold_out_of_range(self):
        with pytest.raises(LabelError):
            softmax_cross_entropy([0.0, 1.0], 2)
        with pytest.raises(LabelError):
            softmax_cross_entropy([0.0, 1.0], -1)

    def test_shift_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            logits = rng.normal(size=int(rng.integers(2, 12))) * 10.0
            gold = int(rng.integers(0, logits.size))
            base, _ = softmax_cross_entropy(logits, gold)
            shifted, _ = softmax_cross_entropy(logits + 123.456, gold)
            assert abs(base - shifted) < 1e-10

    def test_loss_nonnegative_and_gradient_matches_fd(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            logits = rng.normal(size=int(rng.integers(2, 9))) * 3.0
            gold = int(rng.integers(0, logits.size))
            loss, grad = softmax_cross_entropy(logits, gold)
            assert loss >= 0.0
            err = finite_diff_check(lambda v: softmax_cross_entropy(v, gold)[0], logits, grad)
            assert err < 1e-6


class TestCosine:
    def test_colinear(self):
        assert cosine_similarity([1.0, 0.0], [2.0, 0.0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 3.0]) == 0.0

    def test_antiparallel(self):
        assert cosine_similarity([1.0, 2.0], [-1.0, -2.0]) == -1.0

    def test_near_zero_norm_rejected(self):
        with pytest.raises(DegenerateVectorError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(DegenerateVectorError):
            cosine_similarity([1.0, 0.0], [1e-13, 0.0])

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
    @settings(max_examples=60, deadline=None)
    def test_symmetry_bound_and_scale_invariance(self, seed, alpha):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 8))
        a = rng.normal(size=n) + 0.1
        b = rng.normal(size=n) + 0.1
        c_ab = cosine_similarity(a, b)
        assert abs(c_ab) <= 1.0
        assert c_ab == cosine_similarity(b, a)
        assert abs(cosine_similarity(alpha * a, b) - c_ab) < 1e-12


class TestAdam:
    def test_zero_gradient_is_noop(self):
        params = {"w": np.array([1.0, -2.0, 3.0])}
        grads = {"w": np.zeros(3)}
        state = AdamState.init_like(params)
        new_params, new_state = adam_step(params, grads, state, lr=0.1)
        np.testing.assert_array_equal(new_params["w"], params["w"])
        assert new_state.t == state.t + 1

    def test_zero_gradient_noop_with_nonzero_second_moment(self):
        # any state with zero first moments: the numerator vanishes
        params = {"w": np.array([5.0])}
        state = AdamState(m={"w": np.zeros(1)}, v={"w": np.array([0.7])}, t=13)
        new_params, _ = adam_step(params, {"w": np.zeros(1)}, state, lr=0.5)
        np.testing.assert_array_equal(new_params["w"], params["w"])

    def test_first_step_is_signed_lr(self):
        for g in (0.37, -5.0, 2e3):
            params = {"x": np.array([1.0])}
            state = AdamState.init_like(params)
            new_params, new_state = adam_step(params, {"x": np.array([g])}, state, lr=0.01)
            # m-hat = g, v-hat = g^2, so the step is lr * g / (|g| + eps) = lr * sign(g)
            step = new_params["x"][0] - 1.0
            assert abs(step + 0.01 * math.copysign(1.0, g)) < 1e-9
            assert new_state.t == 1

    def test_two_steps_match_scalar_recurrence(self):
        g, lr, b1, b2, eps = 0.3, 0.05, 0.9, 0.999, 1e-8
        # independent hand-rolled recurrence
        theta, m, v = 2.0, 0.0, 0.0
        for t in (1, 2):
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            theta -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)

        params = {"x": np.array([2.0])}
        state = AdamState.init_like(params, beta1=b1, beta2=b2, eps=eps)
        for _ in range(2):
            params, state = adam_step(params, {"x": np.array([g])}, state, lr=lr)
        assert abs(params["x"][0] - theta) < 1e-12
        assert state.t == 2

    def test_shape_mismatch(self):
        params = {"w": np.zeros(3)}
        state = AdamState.init_like(params)
        with pytest.raises(DimensionError):
            adam_step(params, {"w": np.zeros(4)}, state, lr=0.1)
        with pytest.raises(DimensionError):
            adam_step(params, {"q": np.zeros(3)}, state, lr=0.1)

    def test_nonpositive_lr(self):
        params = {"w": np.zeros(1)}
        state = AdamState.init_like(params)
        with pytest.raises(ConfigError):
            adam_step(params, {"w": np.zeros(1)}, state, lr=0.0)

    def test_inputs_not_mutated(self):
        params = {"w": np.array([1.0])}
        grads = {"w": np.array([0.5])}
        state = AdamState.init_like(params)
        adam_step(params, grads, state, lr=0.1)
        assert params["w"][0] == 1.0 and grads["w"][0] == 0.5
        assert state.t == 0 and state.m["w"][0] == 0.0


class TestFiniteDiffCheck:
    def test_quadratic_is_nearly_exact(self):
        err = finite_diff_check(lambda v: float(v[0] ** 2), np.array([3.0]), np.array([6.0]))
        assert err < 1e-9

    def test_cross_entropy_closed_form(self):
        rng = np.random.default_rng(5)
        logits = rng.normal(size=6)
        _, grad = softmax_cross_entropy(logits, 2)
        err = finite_diff_check(lambda v: softmax_cross_entropy(v, 2)[0], logits, grad)
        assert err < 1e-6

    def test_wrong_gradient_is_reported(self):
        point = np.array([3.0])
        err = finite_diff_check(lambda v: float(v[0] ** 2), point, np.array([12.0]))
        assert abs(err - 0.5) < 1e-6

    def test_non_finite_objective(self):
        with pytest.raises(NumericsError):
            finite_diff_check(lambda v: float("nan"), np.array([1.0]), np.array([0.0]))


def test_flatten_roundtrip():
    rng = np.random.default_rng(1)
    params = {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=7), "c": rng.normal(size=(2, 1))}
    flat, layout = flatten_params(params)
    back = unflatten_params(flat, layout)
    assert set(back) == set(params)
    for k in params:
        np.testing.assert_array_equal(back[k], params[k])
