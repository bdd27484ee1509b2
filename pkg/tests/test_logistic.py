import logging

import numpy as np
import pytest
from scipy.special import expit

from classmap.data import LabeledInput
from classmap.logistic import (_irls, choose_dispatch, diagnose_logistic, logistic_farness,
                               logistic_ld, negative_log_likelihood, read_coefficients,
                               train_logistic)
from classmap.svm import KernelSpec, compute_kernel, svm_farness


def _data(rng, n=200, d=2):
    X = rng.normal(size=(n, d))
    y = (X @ np.arange(1, d + 1) + rng.normal(size=n) > 0).astype(float)
    return X, y


def test_symmetric_data_zero_intercept(rng):
    X = rng.normal(size=(50, 2))
    X = np.vstack([X, -X])
    y = np.r_[(X[:50, 0] + rng.normal(size=50) > 0), np.zeros(50)].astype(float)
    y[50:] = 1.0 - y[:50]
    assert train_logistic(X, y).intercept == pytest.approx(0.0, abs=1e-6)


def test_intercept_only_gives_base_rate():
    y = np.r_[np.ones(30), np.zeros(70)]
    X = np.column_stack([np.ones(100)])
    model = train_logistic(X, y)
    np.testing.assert_allclose(model.predict_proba(X), 0.3, atol=1e-8)
    assert model.kept_columns.size == 0


def test_constant_column_dropped_with_warning(rng, caplog):
    X, y = _data(rng)
    Xc = np.column_stack([X, np.full(len(y), 3.0)])
    with caplog.at_level(logging.WARNING, logger="classmap.logistic"):
        model = train_logistic(Xc, y)
    assert "constant" in caplog.text
    np.testing.assert_array_equal(model.kept_columns, [0, 1])


def test_irls_objective_non_increasing(rng):
    X, y = _data(rng)
    Z = np.column_stack([np.ones(len(y)), X])
    _, converged, _, history = _irls(Z, y, 0.0, 100, 1e-8)
    assert converged
    assert np.all(np.diff(history) <= 1e-12)


def test_gradient_vanishes_at_optimum(rng):
    X, y = _data(rng)
    model = train_logistic(X, y)
    Z = np.column_stack([np.ones(len(y)), X])
    beta = np.r_[model.intercept, model.coef]
    analytic = Z.T @ (y - expit(Z @ beta))
    assert np.abs(analytic).max() < 1e-6
    h = 1e-5
    fd = np.array([(negative_log_likelihood(beta + h * e, Z, y) - negative_log_likelihood(beta - h * e, Z, y)) / (2 * h)
                   for e in np.eye(beta.size)])
    np.testing.assert_allclose(fd, -analytic, atol=1e-5)


def test_separable_data_gets_ridge(rng):
    X = np.r_[rng.uniform(1, 2, 20), rng.uniform(-2, -1, 20)][:, None]
    y = np.r_[np.ones(20), np.zeros(20)]
    model = train_logistic(X, y)
    assert model.ridge == 1e-6 and not model.converged
    assert np.all(np.isfinite(model.coef))
    p = model.predict_proba(X)
    assert np.all((p > 0) & (p < 1))


def test_ld_examples():
    np.testing.assert_allclose(logistic_ld([1, 0, 1], [1.0, 0.5, 0.2]), [0.0, 0.5, 0.8], atol=1e-11)
    assert logistic_ld([1], [1.0])[0] == pytest.approx(0.0, abs=1e-11)


def test_sign_law(rng):
    X, y = _data(rng, n=400)
    model = train_logistic(X, y)
    p = model.predict_proba(X)
    ld = logistic_ld(y, p)
    np.testing.assert_array_equal(ld > 0.5, (p > 0.5) != (y == 1))


def test_dispatch_rule(rng):
    X = rng.normal(size=(100, 4))
    labels = np.repeat([1, 2], 50)
    assert choose_dispatch(X, labels) == "mahalanobis_pooled"
    assert choose_dispatch(rng.normal(size=(100, 11)), labels) == "kpca"


def test_mahalanobis_route_zero_at_mean(rng):
    X = rng.normal(size=(60, 2))
    labels = np.repeat([1, 2], 30)
    # put object 0 exactly at the mean of the other 29 members, hence at the class mean
    X[0] = X[1:30].mean(axis=0)
    raw, _, _ = logistic_farness(X, labels, "mahalanobis_per_class")
    assert raw[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_affine_invariance(rng):
    X, y = _data(rng, n=300, d=3)
    labels = np.where(y == 1, 2, 1)
    A = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    b = rng.normal(size=3)
    t0 = diagnose_logistic(LabeledInput("features", X, labels, ("a", "b")), "mahalanobis_pooled")
    t1 = diagnose_logistic(LabeledInput("features", X @ A.T + b, labels, ("a", "b")), "mahalanobis_pooled")
    np.testing.assert_allclose(t1.ld, t0.ld, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(t1.raw_farness, t0.raw_farness, rtol=1e-8)


def test_kpca_route_equals_linear_kernel_farness(rng):
    X = rng.normal(size=(80, 3))
    labels = np.repeat([1, 2], 40)
    raw, norm, cut = logistic_farness(X, labels, "kpca")
    direct = svm_farness(compute_kernel(KernelSpec("linear"), X), labels)
    np.testing.assert_allclose(norm, direct.normalized, atol=1e-7)


def test_read_coefficients(tmp_path, rng):
    path = tmp_path / "coef.csv"
    path.write_text("name,value\n(Intercept),0.5\nx2,-1.25\n", encoding="utf-8")
    model = read_coefficients(path, ["x1", "x2", "x3"])
    assert model.intercept == 0.5
    np.testing.assert_array_equal(model.coef, [0.0, -1.25, 0.0])
    path.write_text("x9,1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="unknown features"):
        read_coefficients(path, ["x1"])
    path.write_text("x1,abc\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":1:"):
        read_coefficients(path, ["x1"])


def test_diagnose_with_external_model(rng):
    X, y = _data(rng)
    labels = np.where(y == 1, 2, 1)
    fitted = train_logistic(X, y)
    data = LabeledInput("features", X, labels, ("no", "yes"))
    a = diagnose_logistic(data)
    b = diagnose_logistic(data, model=fitted)
    np.testing.assert_array_equal(a.ld, b.ld)
