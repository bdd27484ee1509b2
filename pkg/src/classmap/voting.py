"""One-versus-one majority voting over any binary classifier.

A binary engine is a callable ``engine(train_idx, pair_labels)`` that trains
on the objects ``train_idx`` (``pair_labels`` in {1, 2}) and returns decision
values for *all* objects; a positive value is a vote for the first class of
the pair, anything else a vote for the second.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .da import da_farness, log_likelihoods, train_da
from .data import DiagnosticTable, LabeledInput
from .knn import euclidean_dissimilarity, knn_farness
from .logistic import train_logistic
from .svm import KernelSpec, kernel_for, svm_farness, train_svm_smo

BinaryEngine = Callable[[np.ndarray, np.ndarray], np.ndarray]


class PairwiseTrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class VoteTable:
    votes: np.ndarray

    @property
    def G(self) -> int:
        return int(self.votes.shape[1])

    @property
    def C(self) -> int:
        return self.G * (self.G - 1) // 2

    @property
    def top(self) -> np.ndarray:
        return self.votes.max(axis=1)

    def competing(self, given) -> np.ndarray:
        """Most votes among the classes other than the given one."""
        V = self.votes.copy()
        V[np.arange(V.shape[0]), np.asarray(given) - 1] = -1
        return V.max(axis=1)


def svm_engine(K, cost: float = 1.0, tol: float = 1e-3) -> BinaryEngine:
    K = np.asarray(K, dtype=float)

    def engine(idx, pair_labels):
        model = train_svm_smo(K[np.ix_(idx, idx)], pair_labels, cost, tol=tol)
        return model.decision_function(K[:, idx])

    return engine


def da_engine(X, mode: str = "qda") -> BinaryEngine:
    X = np.asarray(X, dtype=float)

    def engine(idx, pair_labels):
        ell = log_likelihoods(train_da(X[idx], pair_labels, mode), X)
        return ell[:, 0] - ell[:, 1]

    return engine


def logistic_engine(X) -> BinaryEngine:
    X = np.asarray(X, dtype=float)

    def engine(idx, pair_labels):
        model = train_logistic(X[idx], (pair_labels == 2).astype(float))
        return -model.linear_predictor(X)

    return engine


def run_one_vs_one(engine: BinaryEngine, labels, G: int | None = None,
                   n_jobs: int | None = None) -> VoteTable:
    """Train on every class pair (a < b) and let each model vote for every object."""
    labels = np.asarray(labels, dtype=int)
    G = int(labels.max()) if G is None else G
    if G < 2:
        raise ValueError("need at least two classes")
    pairs = list(itertools.combinations(range(1, G + 1), 2))

    def fit(pair):
        a, b = pair
        idx = np.flatnonzero((labels == a) | (labels == b))
        try:
            dv = np.asarray(engine(idx, np.where(labels[idx] == a, 1, 2)), dtype=float)
        except Exception as exc:
            raise PairwiseTrainingError(f"training failed for class pair ({a}, {b}): {exc}") from exc
        return np.where(dv > 0, a, b)

    workers = n_jobs or min(len(pairs), os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            winners = list(pool.map(fit, pairs))
    else:
        winners = [fit(p) for p in pairs]
    votes = np.zeros((labels.size, G), dtype=int)
    rows = np.arange(labels.size)
    for w in winners:
        votes[rows, w - 1] += 1
    return VoteTable(votes)


def voting_predict(votes) -> np.ndarray:
    """Class with most votes; ties go to the class listed first."""
    return np.argmax(np.atleast_2d(votes), axis=1) + 1


def voting_ld(votes, given) -> np.ndarray:
    """Label dissimilarity in [0, 1] from vote counts."""
    table = VoteTable(np.atleast_2d(np.asarray(votes, dtype=int)))
    given = np.atleast_1d(np.asarray(given, dtype=int))
    own = table.votes[np.arange(given.size), given - 1]
    top = table.top
    rival = table.competing(given)
    half = table.G // 2
    # (raw + 1) / 2 written over a common denominator
    losing = (2 * top - own) / np.where(top > 0, 2 * top, 1)
    winning = (rival - own + half) / (2 * half)
    return np.where(own < top, losing, winning)


def voting_ld_raw(votes, given) -> np.ndarray:
    return 2.0 * voting_ld(votes, given) - 1.0


@dataclass(frozen=True)
class VoteBoundReport:
    G: int
    n_tournaments: int
    bound: int
    min_competing: int
    ld_raw_min: float
    ld_raw_max: float

    @property
    def holds(self) -> bool:
        return self.min_competing >= self.bound

    @property
    def sharp(self) -> bool:
        return self.min_competing == self.bound


def verify_vote_bounds(G: int) -> VoteBoundReport:
    """Enumerate every tournament on G classes and check the competing-vote bound.

    Only the given labels that top the vote count matter for the bound;
    the LD_raw range is taken over all (tournament, given label) pairs.
    """
    if not 3 <= G <= 7:
        raise ValueError("G must lie in 3..7")
    pairs = list(itertools.combinations(range(G), 2))
    C = len(pairs)
    codes = np.arange(2 ** C, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(C)) & 1
    votes = np.zeros((codes.size, G), dtype=int)
    for col, (a, b) in enumerate(pairs):
        votes[:, a] += 1 - bits[:, col]
        votes[:, b] += bits[:, col]
    assert np.all(votes.sum(axis=1) == C)
    table = VoteTable(votes)
    bound = math.ceil(G / 2) - 1
    min_comp = None
    lo, hi = np.inf, -np.inf
    for g in range(1, G + 1):
        given = np.full(codes.size, g)
        rival = table.competing(given)
        on_top = votes[:, g - 1] == table.top
        if on_top.any():
            m = int(rival[on_top].min())
            min_comp = m if min_comp is None else min(min_comp, m)
        raw = voting_ld_raw(votes, given)
        lo, hi = min(lo, float(raw.min())), max(hi, float(raw.max()))
    return VoteBoundReport(G, int(codes.size), bound, int(min_comp), lo, hi)


def diagnose_vote(data: LabeledInput, engine: str = "svm", spec: KernelSpec = KernelSpec(),
                  cost: float = 1.0, farness: str | None = None, k: int = 5,
                  mode: str = "qda", quantile: float = 0.995,
                  n_jobs: int | None = None) -> DiagnosticTable:
    """Majority-voting diagnostics.

    ``farness`` is ``"kpca"`` (default), ``"mahalanobis"`` (features) or
    ``"knn"`` (euclidean dissimilarities from features, using ``k``).
    """
    if engine == "svm":
        K = kernel_for(data, spec)
        binary = svm_engine(K, cost)
    elif data.kind != "features":
        raise ValueError(f"the {engine} engine needs a feature matrix")
    elif engine == "da":
        binary = da_engine(data.matrix, mode)
    elif engine == "logistic":
        binary = logistic_engine(data.matrix)
    else:
        raise ValueError(f"unknown binary engine {engine!r}")
    table = run_one_vs_one(binary, data.labels, data.G, n_jobs)
    farness = farness or "kpca"
    if farness == "kpca":
        K = kernel_for(data, spec if data.kind != "features" or engine == "svm" else KernelSpec())
        far = svm_farness(K, data.labels, quantile)
        raw, normalized, cutoffs = far.raw, far.normalized, far.cutoffs
    elif data.kind != "features":
        raise ValueError(f"{farness} farness needs a feature matrix")
    elif farness == "mahalanobis":
        raw, normalized, cutoffs = da_farness(train_da(data.matrix, data.labels, mode),
                                              data.matrix, data.labels, quantile)
    elif farness == "knn":
        _, raw, normalized, cutoffs = knn_farness(euclidean_dissimilarity(data.matrix),
                                                  data.labels, k, quantile)
    else:
        raise ValueError(f"unknown farness route {farness!r}")
    return DiagnosticTable(
        given=data.labels,
        predicted=voting_predict(table.votes),
        ld=voting_ld(table.votes, data.labels),
        farness=normalized,
        class_names=data.class_names,
        classifier=f"vote({engine})",
        raw_farness=raw,
        cutoffs=cutoffs,
    )
