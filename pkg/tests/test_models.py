import numpy as np
import pytest

from mcsadapt.errors import ConfigError, DataError
from mcsadapt.models import (
    LossMode,
    fit_model,
    load_model,
    predict,
    register_algorithm,
    save_model,
    weighted_quantile,
)

ALGOS = ["linear", "qrf", "gbt", "mlp"]

FAST_HP = {
    "linear": {"epochs": 120},
    "qrf": {"n_trees": 10, "max_depth": 4},
    "gbt": {"n_rounds": 15, "max_depth": 2},
    "mlp": {"layers": [8], "epochs": 40},
}


def training_data(seed=0, n=120, d=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.clip(np.round(9.0 + 3.0 * X[:, 0]), -1, 19)
    return X, y


class TestDispatch:
    @pytest.mark.parametrize("algo", ALGOS)
    def test_fit_and_predict_shapes(self, algo):
        X, y = training_data()
        model = fit_model(X, y, algo, LossMode("quantile", 0.3), FAST_HP[algo], seed=1)
        preds = predict(model, X[:10])
        assert preds.shape == (10,)
        assert np.all(np.isfinite(preds))

    def test_unknown_algorithm(self):
        X, y = training_data()
        with pytest.raises(ConfigError):
            fit_model(X, y, "svm", LossMode("mse"))

    def test_arity_mismatch_rejected(self):
        X, y = training_data(d=3)
        model = fit_model(X, y, "linear", LossMode("mse"))
        with pytest.raises(DataError):
            predict(model, X[:, :2])

    @pytest.mark.parametrize("algo", ALGOS)
    def test_single_row_equals_batch_row(self, algo):
        X, y = training_data(seed=2)
        model = fit_model(X, y, algo, LossMode("quantile", 0.4), FAST_HP[algo], seed=3)
        batch = predict(model, X[:6])
        single = np.array([predict(model, X[i : i + 1])[0] for i in range(6)])
        if algo == "mlp":
            # BLAS matmul rounding can differ across batch shapes
            assert np.allclose(batch, single, rtol=1e-12, atol=1e-12)
        else:
            assert np.array_equal(batch, single)

    @pytest.mark.parametrize("algo", ALGOS)
    def test_row_permutation_permutes_outputs(self, algo):
        X, y = training_data(seed=4)
        model = fit_model(X, y, algo, LossMode("mse"), FAST_HP[algo], seed=5)
        perm = np.random.default_rng(0).permutation(8)
        assert np.array_equal(predict(model, X[:8])[perm], predict(model, X[:8][perm]))

    def test_constant_model_constant_vector(self):
        X, y = training_data()
        model = fit_model(X, np.full_like(y, 7.0), "gbt", LossMode("mse"), {"n_rounds": 3}, seed=0)
        assert np.all(predict(model, X[:5]) == 7.0)

    def test_non_finite_training_data_rejected(self):
        X, y = training_data()
        X[0, 0] = np.nan
        with pytest.raises(DataError):
            fit_model(X, y, "linear", LossMode("mse"))


class TestSerialization:
    @pytest.mark.parametrize("algo", ALGOS)
    def test_artifact_round_trip_predictions_identical(self, algo, tmp_path):
        X, y = training_data(seed=6)
        model = fit_model(X, y, algo, LossMode("quantile", 0.25), FAST_HP[algo], seed=7)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert back.kind == model.kind
        assert back.loss == model.loss
        assert np.array_equal(predict(back, X[:20]), predict(model, X[:20]))

    def test_version_field_mandatory(self, tmp_path):
        X, y = training_data()
        model = fit_model(X, y, "linear", LossMode("mse"))
        doc = model.to_dict()
        doc.pop("version")
        import json

        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(DataError):
            load_model(path)


class TestQuantileRecovery:
    @pytest.mark.parametrize("algo", ALGOS)
    @pytest.mark.parametrize("tau", [0.1, 0.25, 0.5])
    def test_constant_features_recover_empirical_quantile(self, algo, tau):
        # constant features carry no signal, so a quantile-trained model
        # must predict the global empirical tau-quantile of the targets;
        # continuous targets keep the quantile off integer CDF steps,
        # where bootstrap noise could flip a whole level
        rng = np.random.default_rng(8)
        n = 1000
        X = np.ones((n, 2))
        y = rng.uniform(0.0, 19.0, size=n)
        expected = weighted_quantile(y, np.ones(n), tau)
        hp = {
            "linear": {"epochs": 150, "lr": 0.5},
            "qrf": {"n_trees": 20, "max_depth": 3},
            "gbt": {"n_rounds": 5, "max_depth": 2},
            "mlp": {"layers": [], "epochs": 250, "lr": 0.05, "batch_size": 200},
        }[algo]
        model = fit_model(X, y, algo, LossMode("quantile", tau), hp, seed=9)
        preds = predict(model, X[:25])
        assert np.all(np.abs(preds - expected) <= 0.5), (algo, tau, preds[:3], expected)


def test_register_algorithm_probe():
    calls = {}

    def probe_fit(X, y, loss, hp, seed):
        calls["n_rows"] = len(X)
        return None, type("P", (), {"to_dict": lambda self: {}})()

    register_algorithm("probe", probe_fit, lambda model, X: np.zeros(len(X)))
    X, y = training_data()
    model = fit_model(X, y, "probe", LossMode("mse"))
    assert calls["n_rows"] == len(X)
    assert np.all(predict(model, X[:4]) == 0.0)
