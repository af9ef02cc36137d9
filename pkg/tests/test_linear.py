import numpy as np
import pytest

from mcsadapt.models.linear import fit_linear_ols, fit_linear_sgd, linear_predict
from mcsadapt.models.losses import LossMode, weighted_quantile


class TestOls:
    def test_exact_linear_data_recovers_coefficients(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(60, 3))
        true_w = np.array([2.0, -1.5, 0.25])
        y = X @ true_w + 4.0
        params = fit_linear_ols(X, y)
        assert np.allclose(params.coef, true_w, atol=1e-8)
        assert params.intercept == pytest.approx(4.0, abs=1e-8)

    def test_constant_target(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 2))
        params = fit_linear_ols(X, np.full(30, 7.0))
        assert params.intercept == pytest.approx(7.0, abs=1e-9)
        assert np.allclose(params.coef, 0.0, atol=1e-9)

    def test_residuals_orthogonal_to_columns(self):
        # independent check of the normal equations on a random system
        rng = np.random.default_rng(2)
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        params = fit_linear_ols(X, y)
        residuals = y - linear_predict(params, X)
        A = np.column_stack([np.ones(50), X])
        assert np.all(np.abs(A.T @ residuals) < 1e-6)

    def test_duplicated_column_still_solves_via_jitter(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=40)
        X = np.column_stack([x, x])  # exactly collinear
        y = 3.0 * x + 1.0
        params = fit_linear_ols(X, y)
        assert np.allclose(linear_predict(params, X), y, atol=1e-4)


class TestSgdQuantile:
    def constant_feature(self, n):
        return np.zeros((n, 1))

    def test_intercept_only_converges_to_median(self):
        y = np.array([1.0, 2.0, 9.0])
        X = self.constant_feature(3)
        params = fit_linear_sgd(X, y, LossMode("quantile", 0.5), epochs=400, lr=0.5, batch_size=1, seed=0)
        assert params.intercept == pytest.approx(2.0, abs=0.25)

    def test_intercept_only_ninth_decile(self):
        y = np.arange(10.0)
        X = self.constant_feature(10)
        # sort-based oracle for the target quantile
        expected = weighted_quantile(y, np.ones(10), 0.9)
        params = fit_linear_sgd(X, y, LossMode("quantile", 0.9), epochs=600, lr=0.5, batch_size=2, seed=1)
        assert params.intercept == pytest.approx(expected, abs=0.5)

    def test_zero_epochs_returns_initial_parameters(self):
        y = np.array([3.0, 5.0, 8.0])
        X = self.constant_feature(3)
        loss = LossMode("quantile", 0.5)
        params = fit_linear_sgd(X, y, loss, epochs=0, seed=7)
        assert np.allclose(params.coef, 0.0)
        assert params.intercept == weighted_quantile(y, np.ones(3), 0.5)

    def test_informative_feature_reduces_pinball(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=400)
        y = 2.0 * x + rng.normal(scale=0.2, size=400)
        X = x[:, None]
        params = fit_linear_sgd(X, y, LossMode("quantile", 0.5), epochs=200, seed=2)
        assert params.coef[0] == pytest.approx(2.0, abs=0.25)

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 2))
        y = rng.normal(size=50)
        a = fit_linear_sgd(X, y, LossMode("quantile", 0.3), epochs=20, seed=9)
        b = fit_linear_sgd(X, y, LossMode("quantile", 0.3), epochs=20, seed=9)
        assert np.array_equal(a.coef, b.coef) and a.intercept == b.intercept

    def test_mae_mode_tracks_median(self):
        y = np.array([0.0, 0.0, 0.0, 10.0])
        X = self.constant_feature(4)
        params = fit_linear_sgd(X, y, LossMode("mae"), epochs=300, lr=0.5, batch_size=4, seed=3)
        assert params.intercept == pytest.approx(0.0, abs=0.4)
