import math

import numpy as np
import pytest

from collapse_lab.errors import ConfigError, LabelError, ShapeError
from collapse_lab.model.core import HyperParams, ModelState, class_major_labels, scores
from collapse_lab.model.losses import (
    LossKind,
    grad_objective,
    loss_and_gradient,
    loss_per_sample,
    loss_value,
    objective,
    per_score_gradient,
    softplus,
)

LN2 = math.log(2.0)


def sp(x):
    return math.log1p(math.exp(-abs(x))) + max(x, 0.0)


def flatten(state):
    return np.concatenate([state.W.ravel(), state.H.ravel(), state.b.ravel()])


def unflatten(vector, K, d, N):
    W = vector[:K * d].reshape(K, d)
    H = vector[K * d:K * d + d * N].reshape(d, N)
    b = vector[K * d + d * N:]
    return ModelState(W=W, H=H, b=b)


def finite_difference_gradient(state, hp, kind, step=1e-6):
    x0 = flatten(state)
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = step
        f_plus = objective(unflatten(x0 + e, hp.K, hp.d, hp.N), hp, kind)
        f_minus = objective(unflatten(x0 - e, hp.K, hp.d, hp.N), hp, kind)
        grad[i] = (f_plus - f_minus) / (2 * step)
    return grad


class TestLossValue:
    def test_ce_zero_scores(self):
        assert loss_value(LossKind.CE, np.zeros(2), 0) == pytest.approx(LN2, abs=1e-15)

    def test_bce_zero_scores(self):
        assert loss_value(LossKind.BCE, np.zeros(2), 0) == pytest.approx(2 * LN2, abs=1e-15)

    def test_three_classes(self):
        z = np.array([1.0, 0.0, 0.0])
        assert loss_value(LossKind.CE, z, 0) == pytest.approx(math.log(1 + 2 * math.exp(-1)), abs=1e-14)
        assert loss_value(LossKind.CE, z, 0) == pytest.approx(0.551445, abs=1e-6)
        assert loss_value(LossKind.BCE, z, 0) == pytest.approx(1.699556, abs=1e-6)

    def test_naive_bce_uses_score_difference(self):
        z = np.array([3.0, 1.0])
        assert loss_value(LossKind.NAIVE_BCE, z, 0) == pytest.approx(sp(2.0), abs=1e-14)
        assert loss_value(LossKind.NAIVE_BCE, z, 1) == pytest.approx(sp(-2.0), abs=1e-14)
        assert loss_value(LossKind.NAIVE_BCE, np.zeros(2), 0) == pytest.approx(LN2, abs=1e-15)

    def test_naive_bce_needs_two_classes(self):
        with pytest.raises(ConfigError):
            loss_value(LossKind.NAIVE_BCE, np.zeros(3), 0)

    def test_label_out_of_range(self):
        with pytest.raises(LabelError):
            loss_value(LossKind.CE, np.zeros(3), 3)
        with pytest.raises(LabelError):
            loss_value(LossKind.BCE, np.zeros(3), -1)

    @pytest.mark.parametrize("kind", [LossKind.CE, LossKind.BCE, LossKind.NAIVE_BCE])
    def test_extreme_scores_stay_finite(self, kind):
        for z in ([1e4, -1e4], [-1e4, 1e4], [800.0, 800.0]):
            for label in (0, 1):
                value = loss_value(kind, np.array(z), label)
                assert math.isfinite(value)
                assert value >= 0.0

    def test_ce_large_margin_value(self):
        assert loss_value(LossKind.CE, np.array([-1000.0, 0.0]), 0) == pytest.approx(1000.0)

    def test_ce_shift_invariance(self, rng):
        for _ in range(20):
            z = rng.standard_normal(5) * 3
            c = rng.standard_normal() * 10
            assert abs(loss_value(LossKind.CE, z + c, 2) - loss_value(LossKind.CE, z, 2)) < 1e-12

    def test_bce_is_not_shift_invariant(self):
        z = np.array([0.5, -0.2, 0.1])
        assert loss_value(LossKind.BCE, z + 1.0, 0) != pytest.approx(loss_value(LossKind.BCE, z, 0))

    def test_nonnegative(self, rng):
        Z = rng.standard_normal((4, 50)) * 5
        labels = rng.integers(0, 4, size=50)
        for kind in (LossKind.CE, LossKind.BCE):
            assert np.all(loss_per_sample(kind, Z, labels) >= 0.0)

    def test_parse(self):
        assert LossKind.parse("CE") is LossKind.CE
        assert LossKind.parse("naive-bce") is LossKind.NAIVE_BCE
        with pytest.raises(ConfigError):
            LossKind.parse("focal")


class TestObjective:
    def test_zero_state(self):
        hp = HyperParams(K=5, d=3, n=2, lambda_w=0.3, lambda_h=0.2, lambda_b=0.1)
        state = ModelState(W=np.zeros((5, 3)), H=np.zeros((3, 10)), b=np.zeros(5))
        assert objective(state, hp, LossKind.CE) == pytest.approx(math.log(5), abs=1e-14)
        assert objective(state, hp, LossKind.BCE) == pytest.approx(5 * LN2, abs=1e-14)

    def test_matches_scalar_loop(self, rng, make_state):
        hp = HyperParams(K=3, d=4, n=3, lambda_w=0.01, lambda_h=0.02, lambda_b=0.03)
        state = make_state(rng, 3, 4, 3)
        Z = scores(state.W, state.H, state.b)
        labels = class_major_labels(3, 3)
        for kind in (LossKind.CE, LossKind.BCE):
            total = sum(loss_value(kind, Z[:, i], labels[i]) for i in range(hp.N)) / hp.N
            total += 0.5 * (0.01 * np.sum(state.W ** 2) + 0.02 * np.sum(state.H ** 2)
                            + 0.03 * np.sum(state.b ** 2))
            assert objective(state, hp, kind) == pytest.approx(total, rel=1e-12)

    def test_shape_mismatch(self, rng, make_state):
        hp = HyperParams(K=3, d=4, n=3)
        with pytest.raises(ShapeError):
            objective(make_state(rng, 3, 4, 2), hp, LossKind.CE)


class TestPerScoreGradient:
    def test_zero_scores(self):
        labels = np.array([0])
        for kind in (LossKind.CE, LossKind.BCE):
            G = per_score_gradient(kind, np.zeros((2, 1)), labels)
            np.testing.assert_allclose(G[:, 0], [-0.5, 0.5], atol=1e-15)

    def test_bce_sigmoid_values(self):
        G = per_score_gradient(LossKind.BCE, np.array([[2.0], [-1.0]]), np.array([0]))
        np.testing.assert_allclose(G[:, 0], [-0.119203, 0.268941], atol=1e-6)

    def test_ce_columns_sum_to_zero(self, rng):
        Z = rng.standard_normal((6, 30)) * 4
        G = per_score_gradient(LossKind.CE, Z, rng.integers(0, 6, size=30))
        np.testing.assert_allclose(G.sum(axis=0), 0.0, atol=1e-14)

    def test_naive_bce_moves_difference_only(self, rng):
        Z = rng.standard_normal((2, 10))
        G = per_score_gradient(LossKind.NAIVE_BCE, Z, rng.integers(0, 2, size=10))
        np.testing.assert_allclose(G[0], -G[1])


class TestGradObjective:
    def test_symmetric_saddle(self):
        hp = HyperParams(K=2, d=3, n=1, lambda_w=1e-9, lambda_h=1e-9, lambda_b=0.0)
        state = ModelState(W=np.zeros((2, 3)), H=np.zeros((3, 2)), b=np.zeros(2))
        grad = grad_objective(state, hp, LossKind.CE)
        assert grad.inf_norm() == 0.0

    @pytest.mark.parametrize("kind", [LossKind.CE, LossKind.BCE])
    def test_zero_features_leave_only_decay(self, rng, kind):
        hp = HyperParams(K=3, d=4, n=2, lambda_w=0.07)
        W = rng.standard_normal((3, 4))
        state = ModelState(W=W, H=np.zeros((4, 6)), b=np.zeros(3))
        np.testing.assert_array_equal(grad_objective(state, hp, kind).dW, 0.07 * W)

    def test_ce_bias_gradient_sums_to_zero(self, rng, make_state):
        hp = HyperParams(K=4, d=3, n=5, lambda_b=0.0)
        grad = grad_objective(make_state(rng, 4, 3, 5), hp, LossKind.CE)
        assert abs(grad.db.sum()) < 1e-13

    @pytest.mark.parametrize("kind", [LossKind.CE, LossKind.BCE])
    def test_matches_finite_differences(self, kind):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            K = int(rng.integers(2, 7))
            d = int(rng.integers(1, 9))
            n = int(rng.integers(1, 6))
            lw, lh, lb = rng.uniform(1e-3, 1e-1, size=3)
            hp = HyperParams(K=K, d=d, n=n, lambda_w=lw, lambda_h=lh, lambda_b=lb)
            state = ModelState(W=rng.standard_normal((K, d)),
                               H=rng.standard_normal((d, n * K)),
                               b=rng.standard_normal(K))
            grad = grad_objective(state, hp, kind)
            analytic = np.concatenate([grad.dW.ravel(), grad.dH.ravel(), grad.db.ravel()])
            numeric = finite_difference_gradient(state, hp, kind)
            rel = np.abs(numeric - analytic).max() / np.abs(analytic).max()
            assert rel < 1e-6

    def test_naive_bce_matches_finite_differences(self, rng):
        hp = HyperParams(K=2, d=3, n=4, lambda_w=0.02, lambda_h=0.03, lambda_b=0.01)
        state = ModelState(W=rng.standard_normal((2, 3)), H=rng.standard_normal((3, 8)),
                           b=rng.standard_normal(2))
        grad = grad_objective(state, hp, LossKind.NAIVE_BCE)
        analytic = np.concatenate([grad.dW.ravel(), grad.dH.ravel(), grad.db.ravel()])
        numeric = finite_difference_gradient(state, hp, LossKind.NAIVE_BCE)
        assert np.abs(numeric - analytic).max() / np.abs(analytic).max() < 1e-6


class TestMinibatchGradient:
    def test_all_columns_equal_full_batch(self, rng, make_state):
        hp = HyperParams(K=3, d=4, n=3)
        state = make_state(rng, 3, 4, 3)
        labels = class_major_labels(3, 3)
        full = loss_and_gradient(state.W, state.H, state.b, hp, LossKind.BCE, labels)
        batch = loss_and_gradient(state.W, state.H, state.b, hp, LossKind.BCE, labels,
                                  columns=np.arange(hp.N))
        assert batch[0] == pytest.approx(full[0], rel=1e-14)
        for a, b in zip(full[1:], batch[1:]):
            np.testing.assert_allclose(a, b, atol=1e-14)

    def test_subset_scaling(self, rng, make_state):
        hp = HyperParams(K=3, d=4, n=3, lambda_w=0.1, lambda_h=0.2, lambda_b=0.3)
        state = make_state(rng, 3, 4, 3)
        labels = class_major_labels(3, 3)
        columns = np.array([0, 4, 8])
        value, dW, dH, db = loss_and_gradient(state.W, state.H, state.b, hp, LossKind.CE,
                                              labels, columns=columns)

        Hs = state.H[:, columns]
        G = per_score_gradient(LossKind.CE, scores(state.W, Hs, state.b), labels[columns]) / 3
        np.testing.assert_allclose(dW, G @ Hs.T + 0.1 * state.W, atol=1e-14)
        np.testing.assert_allclose(db, -G.sum(axis=1) + 0.3 * state.b, atol=1e-14)
        untouched = np.setdiff1d(np.arange(hp.N), columns)
        np.testing.assert_allclose(dH[:, untouched], 0.2 * state.H[:, untouched], atol=1e-15)
        assert math.isfinite(value)

    def test_softplus_is_stable(self):
        assert softplus(1000.0) == pytest.approx(1000.0)
        assert softplus(-1000.0) == 0.0
