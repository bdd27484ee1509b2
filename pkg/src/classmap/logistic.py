"""Binary logistic regression fitted by IRLS.

Classes 1 and 2 correspond to responses y = 0 and y = 1.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .da import da_farness, train_da
from .data import DiagnosticTable, LabeledInput
from .svm import KernelSpec, compute_kernel, svm_farness

logger = logging.getLogger(__name__)

PI_CLAMP = 1e-12
SEPARATION_ETA = 30.0
DISPATCHES = ("mahalanobis_pooled", "mahalanobis_per_class", "kpca")


@dataclass(frozen=True)
class LogisticModel:
    intercept: float
    coef: np.ndarray
    kept_columns: np.ndarray
    converged: bool
    ridge: float = 0.0
    n_iter: int = 0

    def linear_predictor(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.intercept + X[:, self.kept_columns] @ self.coef

    def predict_proba(self, X) -> np.ndarray:
        """Fitted probability of y = 1, clamped away from 0 and 1."""
        return np.clip(expit(self.linear_predictor(X)), PI_CLAMP, 1.0 - PI_CLAMP)


def negative_log_likelihood(beta, Z, y, ridge: float = 0.0) -> float:
    eta = Z @ beta
    # log(1 + exp(eta)) - y * eta, stable for large |eta|
    nll = float(np.sum(np.logaddexp(0.0, eta) - y * eta))
    return nll + 0.5 * ridge * float(beta[1:] @ beta[1:])


def _irls(Z, y, ridge: float, max_iter: int, tol: float):
    p = Z.shape[1]
    beta = np.zeros(p)
    penalty = ridge * np.eye(p)
    penalty[0, 0] = 0.0
    obj = negative_log_likelihood(beta, Z, y, ridge)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        pi = expit(Z @ beta)
        w = pi * (1.0 - pi)
        H = Z.T @ (Z * w[:, None]) + penalty
        grad = Z.T @ (y - pi) - penalty @ beta
        step = np.linalg.lstsq(H, grad, rcond=None)[0]
        # step halving keeps the objective non-increasing
        t = 1.0
        while True:
            cand = beta + t * step
            new = negative_log_likelihood(cand, Z, y, ridge)
            if new <= obj or t < 1e-10:
                break
            t *= 0.5
        delta = np.max(np.abs(cand - beta))
        beta, obj = cand, min(new, obj)
        history.append(obj)
        if delta < tol:
            converged = True
            break
    return beta, converged, it, history


def train_logistic(X, y, max_iter: int = 100, tol: float = 1e-8) -> LogisticModel:
    """Maximum-likelihood fit; constant columns are dropped.

    If any fitted linear predictor exceeds 30 in absolute value the data are
    treated as quasi-separated, and the fit is redone with a 1e-6 ridge on
    the slopes and marked as not converged.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if set(np.unique(y)) != {0.0, 1.0}:
        raise ValueError("both response values 0 and 1 must be present")
    kept = np.flatnonzero(np.ptp(X, axis=0) > 0) if X.shape[1] else np.zeros(0, dtype=int)
    dropped = sorted(set(range(X.shape[1])) - set(kept.tolist()))
    if dropped:
        logger.warning("dropping constant feature columns %s", dropped)
    Z = np.column_stack([np.ones(X.shape[0]), X[:, kept]])
    beta, converged, it, _ = _irls(Z, y, 0.0, max_iter, tol)
    ridge = 0.0
    if np.max(np.abs(Z @ beta)) > SEPARATION_ETA:
        ridge = 1e-6
        beta, _, it, _ = _irls(Z, y, ridge, max_iter, tol)
        converged = False
    return LogisticModel(float(beta[0]), beta[1:], kept, converged, ridge, it)


def model_from_coefficients(intercept: float, coef) -> LogisticModel:
    """Wrap externally fitted (e.g. sparse) coefficients."""
    coef = np.asarray(coef, dtype=float)
    return LogisticModel(float(intercept), coef, np.arange(coef.size), True)


def read_coefficients(path, feature_names) -> LogisticModel:
    """Read ``name,value`` rows; the intercept row is named ``intercept`` or ``(Intercept)``.

    Features missing from the file get coefficient 0.
    """
    values: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and row[0].strip().lower() == "name"):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected name,value")
            try:
                values[row[0].strip()] = float(row[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric coefficient {row[1]!r}") from None
    intercept = values.pop("intercept", values.pop("(Intercept)", 0.0))
    unknown = set(values) - set(feature_names)
    if unknown:
        raise ValueError(f"coefficients for unknown features: {sorted(unknown)}")
    return model_from_coefficients(intercept, [values.get(name, 0.0) for name in feature_names])


def logistic_ld(y, pi_hat) -> np.ndarray:
    """Absolute residual |y - pi|."""
    pi = np.clip(np.asarray(pi_hat, dtype=float), PI_CLAMP, 1.0 - PI_CLAMP)
    return np.abs(np.asarray(y, dtype=float) - pi)


def choose_dispatch(X, labels) -> str:
    d = np.atleast_2d(X).shape[1]
    sizes = np.bincount(np.asarray(labels, dtype=int))[1:]
    return "mahalanobis_pooled" if np.all(d <= sizes / 5.0) else "kpca"


def logistic_farness(X, labels, dispatch: str | None = None, quantile: float = 0.995):
    """Raw farness, normalized farness and cutoffs under the chosen route."""
    dispatch = dispatch or choose_dispatch(X, labels)
    if dispatch == "mahalanobis_pooled":
        return da_farness(train_da(X, labels, "lda"), X, labels, quantile)
    if dispatch == "mahalanobis_per_class":
        return da_farness(train_da(X, labels, "qda"), X, labels, quantile)
    if dispatch == "kpca":
        far = svm_farness(compute_kernel(KernelSpec("linear"), X), labels, quantile)
        return far.raw, far.normalized, far.cutoffs
    raise ValueError(f"unknown farness dispatch {dispatch!r}")


def diagnose_logistic(data: LabeledInput, dispatch: str | None = None, quantile: float = 0.995,
                      model: LogisticModel | None = None) -> DiagnosticTable:
    if data.kind != "features":
        raise ValueError("logistic regression needs a feature matrix")
    if data.G != 2:
        raise ValueError("logistic regression needs exactly two classes")
    y = (data.labels == 2).astype(float)
    if model is None:
        model = train_logistic(data.matrix, y)
    pi = model.predict_proba(data.matrix)
    dispatch = dispatch or choose_dispatch(data.matrix, data.labels)
    raw, farness, cutoffs = logistic_farness(data.matrix, data.labels, dispatch, quantile)
    return DiagnosticTable(
        given=data.labels,
        predicted=np.where(pi > 0.5, 2, 1),
        ld=logistic_ld(y, pi),
        farness=farness,
        class_names=data.class_names,
        classifier=f"logistic({dispatch})",
        raw_farness=raw,
        cutoffs=cutoffs,
    )
