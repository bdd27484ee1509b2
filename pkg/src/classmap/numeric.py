"""Numerical primitives shared by the classifiers.

Robust location/scale, covariance with a ridge-guarded Cholesky factor,
Mahalanobis distances, a symmetric eigensolver, PCA and the Yeo-Johnson
based farness cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize_scalar
from scipy.stats import norm

MAD_CONSISTENCY = 1.4826
JACOBI_MAX_DIM = 64


class NumericalError(ArithmeticError):
    """A computation hit a degenerate or singular configuration."""


def robust_location_scale(values) -> tuple[float, float]:
    """Return the sample median and the normal-consistent MAD."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in sample")
    med = float(np.median(x))
    mad = MAD_CONSISTENCY * float(np.median(np.abs(x - med)))
    return med, mad


def covariance(points, center) -> np.ndarray:
    """Covariance around ``center`` with divisor n - 1."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[0] < 2:
        raise NumericalError("degenerate class")
    R = X - np.asarray(center, dtype=float)
    S = R.T @ R / (X.shape[0] - 1)
    return 0.5 * (S + S.T)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower Cholesky factor of a covariance matrix plus the ridge that was added (often 0)."""

    lower: np.ndarray
    ridge: float

    @property
    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))


def cholesky_ridge(sigma, eps: float = 1e-10, max_eps: float = 1e-6) -> CholeskyFactor:
    """Cholesky factor of ``sigma``, ridged only when needed.

    The plain factor is kept unless it fails or some squared pivot drops
    below ``eps * mean(diag)``; then ``eps * mean(diag) * I`` is added and eps
    grows tenfold per failure. Raises NumericalError("singular covariance")
    once ``max_eps`` is exceeded or a pivot falls below 1e-300.
    """
    S = np.asarray(sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("covariance must be square")
    if not np.all(np.isfinite(S)):
        raise NumericalError("singular covariance")
    scale = float(np.mean(np.diag(S)))
    if scale <= 0.0:
        raise NumericalError("singular covariance")
    try:
        L = np.linalg.cholesky(S)
        if np.min(np.diag(L)) ** 2 >= eps * scale:
            return CholeskyFactor(L, 0.0)
    except np.linalg.LinAlgError:
        pass
    identity = np.eye(S.shape[0])
    while eps <= max_eps * (1 + 1e-9):
        ridge = eps * scale
        try:
            L = np.linalg.cholesky(S + ridge * identity)
        except np.linalg.LinAlgError:
            eps *= 10.0
            continue
        if np.all(np.diag(L) > 1e-300):
            return CholeskyFactor(L, ridge)
        eps *= 10.0
    raise NumericalError("singular covariance")


def mahalanobis_many(X, mu, factor: CholeskyFactor) -> np.ndarray:
    """Unsquared Mahalanobis distances of the rows of ``X`` via triangular solve."""
    R = np.atleast_2d(np.asarray(X, dtype=float)) - np.asarray(mu, dtype=float)
    Z = solve_triangular(factor.lower, R.T, lower=True, check_finite=False)
    return np.sqrt(np.sum(Z * Z, axis=0))


def mahalanobis(x, mu, sigma) -> float:
    """Mahalanobis distance of one point; never forms the explicit inverse."""
    return float(mahalanobis_many(np.atleast_2d(x), mu, cholesky_ridge(sigma))[0])


def _canonical_signs(V: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each eigenvector made positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _jacobi_eigh(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    A = A.copy()
    n = A.shape[0]
    V = np.eye(n)
    total = np.sqrt(np.sum(A * A))
    if total == 0.0:
        return np.zeros(n), V
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[offdiag] ** 2))
        if off <= tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def sym_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Cyclic Jacobi up to dimension 64, LAPACK's tridiagonal solver above.
    Eigenvector signs are fixed so the largest-magnitude entry is positive.
    """
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    M = 0.5 * (M + M.T)
    if M.shape[0] <= JACOBI_MAX_DIM:
        w, V = _jacobi_eigh(M)
    else:
        w, V = np.linalg.eigh(M)
    order = np.argsort(-w, kind="stable")
    return w[order], _canonical_signs(V[:, order])


@dataclass(frozen=True)
class PCAResult:
    center: np.ndarray
    loadings: np.ndarray
    scores: np.ndarray
    eigenvalues: np.ndarray
    explained_fraction: float

    @property
    def n_components(self) -> int:
        return self.loadings.shape[1]


def pca(points, n_components: int, rank_tol: float = 1e-12) -> PCAResult:
    """Classical PCA on the covariance matrix.

    If fewer than ``n_components`` eigenvalues exceed ``rank_tol`` times the
    largest, only those are kept; check ``n_components`` on the result.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = X.shape
    if n_components < 1 or n_components > min(n - 1, d):
        raise ValueError(f"n_components must be in [1, {min(n - 1, d)}]")
    center = X.mean(axis=0)
    w, V = sym_eig(covariance(X, center))
    w = np.clip(w, 0.0, None)
    total = float(w.sum())
    rank = int(np.sum(w > rank_tol * w[0])) if w[0] > 0 else 0
    keep = min(n_components, rank)
    loadings = V[:, :keep]
    scores = (X - center) @ loadings
    frac = float(w[:keep].sum() / total) if total > 0 else 0.0
    return PCAResult(center, loadings, scores, w[:keep], frac)


def yeo_johnson(x, lam: float):
    """Yeo-Johnson power transform (elementwise)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    xp, xn = x[pos], x[~pos]
    if abs(lam) < 1e-12:
        out[pos] = np.log1p(xp)
    else:
        out[pos] = np.expm1(lam * np.log1p(xp)) / lam
    if abs(lam - 2.0) < 1e-12:
        out[~pos] = -np.log1p(-xn)
    else:
        out[~pos] = -np.expm1((2.0 - lam) * np.log1p(-xn)) / (2.0 - lam)
    return out if out.ndim else float(out)


def yeo_johnson_inverse(y, lam: float):
    """Inverse of :func:`yeo_johnson`; NaN outside the transform's range."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    pos = y >= 0
    yp, yn = y[pos], y[~pos]
    with np.errstate(invalid="ignore", divide="ignore"):
        if abs(lam) < 1e-12:
            out[pos] = np.expm1(yp)
        else:
            u = lam * yp
            out[pos] = np.where(u > -1, np.expm1(np.log1p(np.where(u > -1, u, 0.0)) / lam), np.nan)
        if abs(lam - 2.0) < 1e-12:
            out[~pos] = -np.expm1(-yn)
        else:
            a = 2.0 - lam
            u = -a * yn
            out[~pos] = np.where(u > -1, -np.expm1(np.log1p(np.where(u > -1, u, 0.0)) / a), np.nan)
    return out if out.ndim else float(out)


def _rectify_point(lam: float, lower: float, upper: float) -> float | None:
    """Where the transform turns linear: the upper quartile when it compresses
    the right tail (lam < 1), the lower quartile when it compresses the left
    (lam > 1), nowhere for lam = 1."""
    if lam < 1.0:
        return upper
    if lam > 1.0:
        return lower
    return None


def _yj_slope(x: float, lam: float) -> float:
    return float((1.0 + x) ** (lam - 1.0) if x >= 0 else (1.0 - x) ** (1.0 - lam))


def rectified_yeo_johnson(x, lam: float, lower: float, upper: float):
    """Yeo-Johnson transform continued linearly beyond a quartile on the compressed side.

    The linear tail keeps the transform unbounded, so any target quantile has
    a finite preimage.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(yeo_johnson(x, lam), dtype=float)
    c = _rectify_point(lam, lower, upper)
    if c is not None:
        tail = x > c if lam < 1.0 else x < c
        y = np.where(tail, yeo_johnson(np.array([c]), lam)[0] + _yj_slope(c, lam) * (x - c), y)
    return y if y.ndim else float(y)


def rectified_yeo_johnson_inverse(y: float, lam: float, lower: float, upper: float) -> float:
    c = _rectify_point(lam, lower, upper)
    if c is not None:
        hc = float(yeo_johnson(np.array([c]), lam)[0])
        if (lam < 1.0 and y > hc) or (lam > 1.0 and y < hc):
            return c + (y - hc) / _yj_slope(c, lam)
    return float(yeo_johnson_inverse(y, lam))


def _log_jacobian(x: np.ndarray, lam: float, lower: float, upper: float) -> float:
    c = _rectify_point(lam, lower, upper)
    if c is not None:
        x = np.minimum(x, c) if lam < 1.0 else np.maximum(x, c)
    return float((lam - 1.0) * np.sum(np.sign(x) * np.log1p(np.abs(x))))


def fit_yeo_johnson(values, trim: float = 0.05, bounds=(-4.0, 4.0), tol: float = 1e-9) -> float:
    """Maximise the Gaussian profile likelihood of the central ``1 - 2 trim`` of
    the values under the rectified transform; returns lambda."""
    x = np.sort(np.asarray(values, dtype=float))
    lower, upper = np.quantile(x, [0.25, 0.75])
    cut = int(np.floor(trim * x.size))
    core = x[cut:x.size - cut] if cut > 0 else x

    def neg_loglik(lam):
        var = float(np.var(rectified_yeo_johnson(core, lam, lower, upper)))
        if var <= 0.0 or not np.isfinite(var):
            return np.inf
        return 0.5 * core.size * np.log(var) - _log_jacobian(core, lam, lower, upper)

    res = minimize_scalar(neg_loglik, bounds=bounds, method="bounded", options={"xatol": tol})
    return float(res.x)


@dataclass(frozen=True)
class FarnessCalibration:
    """Cutoff for raw farness derived from a central-normality transform.

    The transform acts on the standardized values ``(raw - center) / spread``
    (median and MAD of the class); ``location`` and ``scale`` live in the
    transformed space and ``cutoff`` is in raw units. ``lower`` and ``upper``
    are the quartiles of the standardized values, where the transform may
    turn linear.
    """

    lam: float
    location: float
    scale: float
    cutoff: float
    quantile: float = 0.995
    center: float = 0.0
    spread: float = 1.0
    lower: float = 0.0
    upper: float = 0.0

    def transform(self, raw):
        z = (np.asarray(raw, dtype=float) - self.center) / self.spread
        return rectified_yeo_johnson(z, self.lam, self.lower, self.upper)


def calibrate_farness(raw_farness, quantile: float = 0.995, lam: float | None = None) -> FarnessCalibration:
    """Fit the farness cutoff of one class.

    The values are standardized by their median and MAD before the fit, so
    the cutoff moves with shifts and rescalings of the data. Pass ``lam`` to
    skip the fit.
    """
    x = np.asarray(raw_farness, dtype=float).ravel()
    if x.size < 10:
        raise ValueError("need at least 10 farness values to calibrate")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("farness values must be finite and nonnegative")
    if not 0.0 < quantile < 1.0:
        raise ValueError("quantile must lie in (0, 1)")
    if np.all(x == x[0]):
        raise NumericalError("degenerate farness distribution")
    center, spread = robust_location_scale(x)
    if spread <= 0.0:
        spread = float(np.std(x))
    z = (x - center) / spread
    lower, upper = (float(v) for v in np.quantile(z, [0.25, 0.75]))
    if lam is None:
        lam = fit_yeo_johnson(z)
    y = rectified_yeo_johnson(z, lam, lower, upper)
    location, scale = robust_location_scale(y)
    if scale <= 0.0:
        scale = float(np.std(y))
    if scale <= 0.0:
        raise NumericalError("degenerate farness distribution")
    back = rectified_yeo_johnson_inverse(location + scale * norm.ppf(quantile), lam, lower, upper)
    cutoff = center + spread * back
    if not np.isfinite(cutoff) or cutoff <= 0.0:
        raise NumericalError("farness cutoff is not positive")
    return FarnessCalibration(float(lam), float(location), float(scale), float(cutoff),
                              float(quantile), float(center), float(spread), lower, upper)
