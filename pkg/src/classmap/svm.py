"""Kernels, a binary SMO support vector classifier and kernel-PCA farness.

Class 1 is coded +1 and class 2 is coded -1, so a positive decision value
predicts class 1 and a decision value <= 0 predicts class 2.
"""

from __future__ import annotations

import logging
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .data import DiagnosticTable, LabeledInput
from .numeric import NumericalError, sym_eig
from .scoring import ld_scale, normalize_farness

logger = logging.getLogger(__name__)

KERNEL_KINDS = ("linear", "polynomial", "rbf", "spectrum", "precomputed")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    gamma: float = 1.0
    coef0: float = 0.0
    degree: int = 3
    length: int = 3

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind in ("polynomial", "rbf") and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError("degree must be a positive integer")
        if self.kind == "spectrum" and (int(self.length) != self.length or self.length < 1):
            raise ValueError("spectrum length must be a positive integer")


def spectrum_counts(texts: Sequence[str], length: int) -> sparse.csr_matrix:
    """Sparse matrix of overlapping substring counts over case-folded UTF-8 bytes."""
    vocab: dict[bytes, int] = {}
    rows, cols, vals = [], [], []
    for r, text in enumerate(texts):
        raw = text.casefold().encode("utf-8")
        counts = Counter(raw[s:s + length] for s in range(len(raw) - length + 1))
        for key in sorted(counts):
            rows.append(r)
            cols.append(vocab.setdefault(key, len(vocab)))
            vals.append(counts[key])
    shape = (len(texts), max(len(vocab), 1))
    return sparse.csr_matrix((np.asarray(vals, dtype=float), (rows, cols)), shape=shape)


def compute_kernel(spec: KernelSpec, data, other=None) -> np.ndarray:
    """Kernel matrix between the objects of ``data`` and ``other`` (default: ``data``)."""
    if spec.kind == "spectrum":
        if other is None:
            A = B = spectrum_counts(list(data), spec.length)
        else:
            # shared vocabulary
            both = spectrum_counts(list(data) + list(other), spec.length)
            A, B = both[:len(data)], both[len(data):]
        return np.asarray((A @ B.T).todense(), dtype=float)
    X = np.atleast_2d(np.asarray(data, dtype=float))
    Y = X if other is None else np.atleast_2d(np.asarray(other, dtype=float))
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite feature value")
    if spec.kind == "precomputed":
        raise ValueError("precomputed kernels are supplied, not computed")
    if spec.kind == "linear":
        K = X @ Y.T
    elif spec.kind == "polynomial":
        K = (spec.gamma * (X @ Y.T) + spec.coef0) ** int(spec.degree)
    else:
        K = np.exp(-spec.gamma * cdist(X, Y, "sqeuclidean"))
    if other is None:
        K = 0.5 * (K + K.T)
    return K


@dataclass(frozen=True)
class SvmModel:
    support: np.ndarray
    dual_coef: np.ndarray
    intercept: float
    cost: float
    alpha: np.ndarray
    converged: bool
    n_iter: int
    kernel: KernelSpec | None = None

    def decision_function(self, K_cross) -> np.ndarray:
        """Decision values from kernel rows against the training objects."""
        K_cross = np.atleast_2d(np.asarray(K_cross, dtype=float))
        return K_cross[:, self.support] @ self.dual_coef + self.intercept


def train_svm_smo(K, labels, cost: float = 1.0, tol: float = 1e-3,
                  max_iter: int | None = None, kernel: KernelSpec | None = None) -> SvmModel:
    """C-SVC dual solved by SMO with the maximal-violating-pair working set.

    ``labels`` take values 1 and 2. Without shrinking, each iteration costs
    two kernel rows; ``max_iter`` defaults to 10**7 kernel evaluations.
    """
    K = np.asarray(K, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n = labels.size
    if K.shape != (n, n):
        raise ValueError("kernel must be n x n")
    if not cost > 0:
        raise ValueError("cost must be positive")
    if set(np.unique(labels)) != {1, 2}:
        raise ValueError("both classes 1 and 2 must be present")
    if max_iter is None:
        max_iter = max(10_000_000 // max(n, 1), 1000)
    y = np.where(labels == 1, 1.0, -1.0)
    C = float(cost)
    tau = 1e-12
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    converged = False
    it = 0
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        v = -y * grad
        vu = np.where(up, v, -np.inf)
        vl = np.where(low, v, np.inf)
        top, bottom = vu.max(), vl.min()
        if top - bottom < tol:
            converged = True
            break
        # an unclipped update leaves its pair exactly tied; resolve such
        # near-ties by index so roundoff cannot change the path
        slack = 1e-10 * max(1.0, abs(top), abs(bottom))
        i = int(np.argmax(vu >= top - slack))
        j = int(np.argmax(vl <= bottom + slack))
        it += 1
        Kij = K[i, j]
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = diag[i] + diag[j] + 2.0 * y[i] * y[j] * Kij
            quad = quad if quad > 0 else tau
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = diag[i] + diag[j] - 2.0 * Kij
            quad = quad if quad > 0 else tau
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        alpha[i], alpha[j] = ni, nj
        grad += y * (y[i] * (ni - ai) * K[i] + y[j] * (nj - aj) * K[j])
    if not converged:
        warnings.warn(f"SMO stopped after {max_iter} iterations without meeting tol={tol}",
                      RuntimeWarning, stacklevel=2)
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean(yg[free]))
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (~at_upper & (y < 0))
        ub = float(np.min(yg[ub_mask])) if ub_mask.any() else np.inf
        lb = float(np.max(yg[lb_mask])) if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb)
    support = np.flatnonzero(alpha > 0)
    return SvmModel(support, alpha[support] * y[support], -rho, C, alpha, converged, it, kernel)


def svm_predict(decision_values) -> np.ndarray:
    return np.where(np.asarray(decision_values) > 0, 1, 2)


def svm_ld_raw(decision_values, labels) -> np.ndarray:
    dv = np.asarray(decision_values, dtype=float)
    return np.where(np.asarray(labels) == 1, -dv, dv)


def svm_ld(decision_values, labels) -> np.ndarray:
    return ld_scale(svm_ld_raw(decision_values, labels))


@dataclass(frozen=True)
class ClassSubspace:
    """Kernel PCA of one class, held implicitly through the kernel.

    ``coef`` maps centered cross-kernel rows to scores: t = kc @ coef.
    """

    members: np.ndarray
    coef: np.ndarray
    eigenvalues: np.ndarray
    row_means: np.ndarray
    grand_mean: float
    score_median: np.ndarray
    score_mad: np.ndarray
    usable: np.ndarray
    member_od2: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.eigenvalues.size)

    def centered_cross(self, K_rows) -> np.ndarray:
        Kx = np.atleast_2d(np.asarray(K_rows, dtype=float))[:, self.members]
        return Kx - Kx.mean(axis=1, keepdims=True) - self.row_means + self.grand_mean

    def scores(self, K_rows) -> np.ndarray:
        return self.centered_cross(K_rows) @ self.coef

    def sq_norm_to_center(self, K_rows, K_diag) -> np.ndarray:
        Kx = np.atleast_2d(np.asarray(K_rows, dtype=float))[:, self.members]
        return np.asarray(K_diag, dtype=float) - 2.0 * Kx.mean(axis=1) + self.grand_mean


def kpca_class_subspace(K, members, rel_tol: float = 1e-10, mad_floor: float = 1e-12) -> ClassSubspace:
    """Kernel PCA on the objects in ``members``, keeping every non-null component."""
    K = np.asarray(K, dtype=float)
    members = np.asarray(members, dtype=int)
    if members.size < 2:
        raise ValueError("kernel PCA needs at least two class members")
    Kmm = K[np.ix_(members, members)]
    row_means = Kmm.mean(axis=0)
    grand = float(Kmm.mean())
    Kc = Kmm - row_means[:, None] - row_means[None, :] + grand
    w, V = sym_eig(Kc)
    keep = w > rel_tol * w[0] if w[0] > 0 else np.zeros(w.size, dtype=bool)
    lam = w[keep]
    coef = V[:, keep] / np.sqrt(lam)
    # a member's residual is carried by the dropped components alone; those
    # below the eigensolver's roundoff level count as exact zeros
    noise = w.size * np.finfo(float).eps * max(float(w[0]), 0.0)
    dropped = w[~keep]
    member_od2 = (V[:, ~keep] ** 2) @ np.where(dropped > noise, dropped, 0.0)
    T = Kc @ coef
    if lam.size:
        med = np.median(T, axis=0)
        mad = 1.4826 * np.median(np.abs(T - med), axis=0)
        spread = T.max(axis=0) - T.min(axis=0)
        usable = (mad > mad_floor * spread) & (spread > 0)
    else:
        med = mad = np.zeros(0)
        usable = np.zeros(0, dtype=bool)
    return ClassSubspace(members, coef, lam, row_means, grand, med, mad, usable, member_od2)


def score_distance(sub: ClassSubspace, K_rows) -> np.ndarray:
    """Robustly standardized distance inside the class subspace."""
    T = sub.scores(K_rows)[:, sub.usable]
    Z = (T - sub.score_median[sub.usable]) / sub.score_mad[sub.usable]
    return np.sqrt(np.sum(Z * Z, axis=1))


def orthogonal_distance(sub: ClassSubspace, K_rows, K_diag, row_ids=None) -> np.ndarray:
    """Feature-space distance from each object to the class's affine span.

    ``row_ids`` names the object behind each kernel row; rows of class
    members then use the eigen-residual, which avoids cancellation.
    """
    T = sub.scores(K_rows)
    total = sub.sq_norm_to_center(K_rows, K_diag)
    od2 = total - np.sum(T * T, axis=1)
    bad = od2 < -1e-8 * np.maximum(np.abs(total), 1.0)
    if np.any(bad):
        raise NumericalError("negative squared orthogonal distance; kernel not PSD?")
    if row_ids is not None:
        pos = {int(m): j for j, m in enumerate(sub.members)}
        for r, i in enumerate(np.asarray(row_ids, dtype=int)):
            j = pos.get(int(i))
            if j is not None:
                od2[r] = sub.member_od2[j]
    return np.sqrt(np.clip(od2, 0.0, None))


@dataclass(frozen=True)
class KpcaFarness:
    raw: np.ndarray
    normalized: np.ndarray
    cutoffs: np.ndarray
    sd: np.ndarray
    od: np.ndarray
    od_used: np.ndarray


def kpca_distances(K, labels) -> tuple[np.ndarray, np.ndarray, list[ClassSubspace]]:
    """Unscaled score and orthogonal distances of every object to every class."""
    K = np.asarray(K, dtype=float)
    labels = np.asarray(labels, dtype=int)
    G = int(labels.max())
    kdiag = np.diag(K)
    SD = np.empty((labels.size, G))
    OD = np.empty((labels.size, G))
    subs = []
    for g in range(1, G + 1):
        sub = kpca_class_subspace(K, np.flatnonzero(labels == g))
        subs.append(sub)
        SD[:, g - 1] = score_distance(sub, K)
        OD[:, g - 1] = orthogonal_distance(sub, K, kdiag, np.arange(labels.size))
    return SD, OD, subs


def svm_farness(K, labels, quantile: float = 0.995, od_rel_tol: float = 1e-6) -> KpcaFarness:
    """Combine median-scaled score and orthogonal distances into normalized farness.

    Score distances to class g are scaled by their median over members of g,
    orthogonal distances by their median over non-members. An orthogonal
    scaling median at the numerical noise level (below ``od_rel_tol`` times
    the typical distance to the class center) drops the OD term.
    """
    K = np.asarray(K, dtype=float)
    labels = np.asarray(labels, dtype=int)
    SD, OD, subs = kpca_distances(K, labels)
    G = SD.shape[1]
    kdiag = np.diag(K)
    used = np.ones(G, dtype=bool)
    for g in range(1, G + 1):
        inside = labels == g
        sd_med = float(np.median(SD[inside, g - 1]))
        if sd_med > 0:
            SD[:, g - 1] /= sd_med
        else:
            logger.warning("class %d: in-class score distances have zero median", g)
        typical = np.sqrt(max(float(np.median(subs[g - 1].sq_norm_to_center(K, kdiag))), 0.0))
        od_med = float(np.median(OD[~inside, g - 1])) if (~inside).any() else 0.0
        if od_med > od_rel_tol * typical and od_med > 0:
            OD[:, g - 1] /= od_med
        else:
            if od_med > 0:
                logger.warning("class %d: orthogonal distances negligible, OD term dropped", g)
            OD[:, g - 1] = 0.0
            used[g - 1] = False
    raw = np.sqrt(SD ** 2 + OD ** 2)
    normalized, cutoffs, _ = normalize_farness(raw, labels, quantile)
    return KpcaFarness(raw, normalized, cutoffs, SD, OD, used)


def kernel_for(data: LabeledInput, spec: KernelSpec) -> np.ndarray:
    if data.kind == "kernel":
        return data.matrix
    if data.kind == "strings":
        if spec.kind != "spectrum":
            raise ValueError("string input needs the spectrum kernel")
        return compute_kernel(spec, data.texts)
    if data.kind == "features":
        if spec.kind in ("spectrum", "precomputed"):
            raise ValueError(f"{spec.kind} kernel does not apply to feature input")
        return compute_kernel(spec, data.matrix)
    raise ValueError("SVM needs features, strings or a kernel matrix")


def diagnose_svm(data: LabeledInput, spec: KernelSpec = KernelSpec(), cost: float = 1.0,
                 quantile: float = 0.995, decision_values=None, tol: float = 1e-3) -> DiagnosticTable:
    """Binary SVM diagnostics; pass ``decision_values`` to skip training."""
    if data.G != 2:
        raise ValueError("binary SVM needs exactly two classes; use voting for more")
    K = kernel_for(data, spec)
    if decision_values is None:
        model = train_svm_smo(K, data.labels, cost, tol=tol, kernel=spec)
        dv = model.decision_function(K)
    else:
        dv = np.asarray(decision_values, dtype=float)
        if dv.shape != (data.n,):
            raise ValueError("need one decision value per object")
    far = svm_farness(K, data.labels, quantile)
    return DiagnosticTable(
        given=data.labels,
        predicted=svm_predict(dv),
        ld=svm_ld(dv, data.labels),
        farness=far.normalized,
        class_names=data.class_names,
        classifier=f"SVM({spec.kind})",
        raw_farness=far.raw,
        cutoffs=far.cutoffs,
    )
