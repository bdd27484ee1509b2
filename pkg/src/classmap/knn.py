"""k-nearest neighbors on a dissimilarity matrix.

Neighborhoods absorb every object tied with the k-th smallest dissimilarity,
so they may hold more than k members. Tie detection is exact (no epsilon).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .data import DiagnosticTable, LabeledInput
from .scoring import normalize_farness


@dataclass(frozen=True)
class Neighborhood:
    owner: int
    members: np.ndarray
    d_star: float

    @property
    def k_effective(self) -> int:
        return int(self.members.size)


def _check_k(n: int, k: int) -> None:
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")


def build_neighborhood(diss, i: int, k: int) -> Neighborhood:
    D = np.asarray(diss, dtype=float)
    n = D.shape[0]
    _check_k(n, k)
    row = D[i].copy()
    row[i] = np.inf
    d_star = float(np.partition(row, k - 1)[k - 1])
    members = np.flatnonzero(row <= d_star)
    return Neighborhood(i, members, d_star)


def neighborhood_matrix(diss, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean n x n membership matrix for all neighborhoods, and each d_i*."""
    D = np.array(diss, dtype=float)
    n = D.shape[0]
    _check_k(n, k)
    np.fill_diagonal(D, np.inf)
    d_star = np.partition(D, k - 1, axis=1)[:, k - 1]
    return D <= d_star[:, None], d_star


def class_counts(member_mask, labels, G: int) -> np.ndarray:
    """n x G integer counts n_i(g) of each label inside each neighborhood."""
    onehot = np.zeros((labels.size, G), dtype=np.int64)
    onehot[np.arange(labels.size), labels - 1] = 1
    return np.asarray(member_mask, dtype=np.int64) @ onehot


def knn_predict(nb: Neighborhood, labels, diss, G: int | None = None) -> int:
    """Most frequent label in the neighborhood.

    Ties go to the label whose members are closest on average, then to the
    smallest label.
    """
    labels = np.asarray(labels, dtype=int)
    D = np.asarray(diss, dtype=float)
    G = int(labels.max()) if G is None else G
    member_labels = labels[nb.members]
    counts = np.bincount(member_labels, minlength=G + 1)[1:]
    tied = np.flatnonzero(counts == counts.max()) + 1
    if tied.size == 1:
        return int(tied[0])
    dists = D[nb.owner, nb.members]
    avg = np.array([dists[member_labels == g].mean() for g in tied])
    return int(tied[np.flatnonzero(avg == avg.min())[0]])


def knn_ld_from_counts(counts, given) -> np.ndarray:
    """Label dissimilarity (LD_raw + 1) / 2 evaluated in integer arithmetic."""
    C = np.atleast_2d(np.asarray(counts, dtype=np.int64))
    idx = np.asarray(given, dtype=int) - 1
    rows = np.arange(C.shape[0])
    k_eff = C.sum(axis=1)
    own = C[rows, idx]
    best = C.max(axis=1)
    others = C.copy()
    others[rows, idx] = -1
    rival = others.max(axis=1)
    diff = np.where(own < best, best - own, rival - own)
    return (diff + k_eff) / (2 * k_eff)


def knn_ld(nb: Neighborhood, labels, given: int, G: int | None = None) -> float:
    labels = np.asarray(labels, dtype=int)
    G = int(labels.max()) if G is None else G
    counts = np.bincount(labels[nb.members], minlength=G + 1)[1:]
    return float(knn_ld_from_counts(counts[None, :], [given])[0])


def knn_raw_farness(diss, labels, k: int) -> np.ndarray:
    """Median of the k smallest dissimilarities from each object to each class.

    Object i itself is excluded; classes with fewer than k candidates use
    all of them.
    """
    D = np.array(diss, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n = D.shape[0]
    G = int(labels.max())
    np.fill_diagonal(D, np.inf)
    F = np.empty((n, G))
    for g in range(1, G + 1):
        cols = np.flatnonzero(labels == g)
        if cols.size == 0:
            raise ValueError(f"class {g} is empty")
        S = np.sort(D[:, cols], axis=1)
        inside = labels == g
        for mask, available in ((inside, cols.size - 1), (~inside, cols.size)):
            if not mask.any():
                continue
            m = min(k, available)
            if m == 0:
                raise ValueError(f"class {g} has no other members")
            F[mask, g - 1] = np.median(S[mask, :m], axis=1)
    return F


def knn_farness(diss, labels, k: int, quantile: float = 0.995):
    """Raw, median-scaled and cutoff-normalized farness plus the cutoffs."""
    raw = knn_raw_farness(diss, labels, k)
    med = np.median(raw, axis=0)
    scaled = raw / np.where(med > 0, med, 1.0)
    normalized, cutoffs, _ = normalize_farness(scaled, labels, quantile)
    return raw, scaled, normalized, cutoffs


def knn_predict_all(diss, labels, k: int) -> np.ndarray:
    D = np.asarray(diss, dtype=float)
    labels = np.asarray(labels, dtype=int)
    G = int(labels.max())
    mask, d_star = neighborhood_matrix(D, k)
    counts = class_counts(mask, labels, G)
    pred = np.argmax(counts, axis=1) + 1
    n_top = np.sum(counts == counts.max(axis=1, keepdims=True), axis=1)
    for i in np.flatnonzero(n_top > 1):
        nb = Neighborhood(int(i), np.flatnonzero(mask[i]), float(d_star[i]))
        pred[i] = knn_predict(nb, labels, D, G)
    return pred


def euclidean_dissimilarity(X) -> np.ndarray:
    return squareform(pdist(np.asarray(X, dtype=float)))


def diagnose_knn(data: LabeledInput, k: int, quantile: float = 0.995) -> DiagnosticTable:
    if data.kind == "features":
        diss = euclidean_dissimilarity(data.matrix)
    elif data.kind == "dissimilarity":
        diss = data.matrix
    else:
        raise ValueError("kNN needs a dissimilarity matrix or features")
    mask, _ = neighborhood_matrix(diss, k)
    counts = class_counts(mask, data.labels, data.G)
    raw, scaled, farness, cutoffs = knn_farness(diss, data.labels, k, quantile)
    return DiagnosticTable(
        given=data.labels,
        predicted=knn_predict_all(diss, data.labels, k),
        ld=knn_ld_from_counts(counts, data.labels),
        farness=farness,
        class_names=data.class_names,
        classifier=f"kNN(k={k})",
        raw_farness=scaled,
        cutoffs=cutoffs,
    )
