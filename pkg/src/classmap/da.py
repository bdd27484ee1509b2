"""Linear and quadratic discriminant analysis with class-map diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DiagnosticTable, LabeledInput
from .numeric import CholeskyFactor, NumericalError, cholesky_ridge, covariance, mahalanobis_many
from .scoring import competing_ld_raw, ld_scale, normalize_farness, predict_with_tie_rule

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class DaModel:
    means: np.ndarray
    covariances: tuple[np.ndarray, ...]
    priors: np.ndarray
    mode: str
    factors: tuple[CholeskyFactor, ...]

    @property
    def d(self) -> int:
        return int(self.means.shape[1])

    @property
    def G(self) -> int:
        return int(self.means.shape[0])


def train_da(X, labels, mode: str = "qda") -> DaModel:
    """Fit class means, priors n_g/n and either per-class (QDA) or pooled (LDA) covariances.

    The pooled covariance uses the residuals from the class means with
    divisor n - G.
    """
    mode = mode.lower()
    if mode not in ("lda", "qda"):
        raise ValueError("mode must be 'lda' or 'qda'")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels, dtype=int)
    n, d = X.shape
    G = int(labels.max())
    sizes = np.bincount(labels, minlength=G + 1)[1:]
    if np.any(sizes == 0):
        raise ValueError("every class needs at least one object")
    means = np.vstack([X[labels == g].mean(axis=0) for g in range(1, G + 1)])
    if mode == "qda":
        for g, size in enumerate(sizes, start=1):
            if size < d + 1:
                raise ValueError(f"class {g} too small for QDA")
        covs = tuple(covariance(X[labels == g], means[g - 1]) for g in range(1, G + 1))
    else:
        if n - G < 1:
            raise NumericalError("degenerate class")
        R = X - means[labels - 1]
        pooled = R.T @ R / (n - G)
        pooled = 0.5 * (pooled + pooled.T)
        covs = (pooled,) * G
    factors = tuple(cholesky_ridge(S) for S in covs)
    return DaModel(means, covs, sizes / n, mode, factors)


def mahalanobis_to_classes(model: DaModel, X) -> np.ndarray:
    """n x G matrix of unsquared Mahalanobis distances to each class."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.column_stack([mahalanobis_many(X, model.means[g], model.factors[g])
                            for g in range(model.G)])


def log_likelihoods(model: DaModel, X) -> np.ndarray:
    """Log of prior times the estimated normal density, for every class."""
    MD = mahalanobis_to_classes(model, X)
    log_dets = np.array([f.log_det for f in model.factors])
    return np.log(model.priors) - 0.5 * model.d * LOG_2PI - 0.5 * log_dets - 0.5 * MD ** 2


def da_ld_raw(ell, given) -> np.ndarray:
    return competing_ld_raw(ell, given)


def da_farness(model: DaModel, X, labels, quantile: float = 0.995):
    """Raw Mahalanobis farness, normalized farness and per-class cutoffs."""
    raw = mahalanobis_to_classes(model, X)
    normalized, cutoffs, _ = normalize_farness(raw, labels, quantile)
    return raw, normalized, cutoffs


def diagnose_da(data: LabeledInput, mode: str = "qda", quantile: float = 0.995) -> DiagnosticTable:
    if data.kind != "features":
        raise ValueError("discriminant analysis needs a feature matrix")
    model = train_da(data.matrix, data.labels, mode)
    ell = log_likelihoods(model, data.matrix)
    ld = ld_scale(da_ld_raw(ell, data.labels))
    raw, farness, cutoffs = da_farness(model, data.matrix, data.labels, quantile)
    return DiagnosticTable(
        given=data.labels,
        predicted=predict_with_tie_rule(ell, data.labels),
        ld=ld,
        farness=farness,
        class_names=data.class_names,
        classifier=model.mode.upper(),
        raw_farness=raw,
        cutoffs=cutoffs,
    )
