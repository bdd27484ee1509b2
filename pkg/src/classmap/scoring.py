"""Label-dissimilarity rescaling and per-class farness normalization."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .numeric import FarnessCalibration, calibrate_farness


def ld_scale(ld_raw) -> np.ndarray:
    """Map unbounded raw label dissimilarities into [0, 1].

    Each value is divided by the median absolute raw value and passed through
    the logistic function, so a raw value of 0 lands exactly at 0.5. If that
    median is 0 the smallest positive absolute value is used instead; if all
    raw values are 0 every object gets 0.5.
    """
    raw = np.asarray(ld_raw, dtype=float)
    a = np.abs(raw)
    scale = float(np.median(a)) if a.size else 0.0
    if scale <= 0.0:
        positive = a[a > 0]
        if positive.size == 0:
            return np.full(raw.shape, 0.5)
        scale = float(positive.min())
    return expit(raw / scale)


def competing_ld_raw(scores, given) -> np.ndarray:
    """Best score minus the given label's score, or the best competitor's
    score minus it when the given label already has the best score.

    ``scores`` is n x G (larger is better), ``given`` holds labels 1..G.
    """
    S = np.atleast_2d(np.asarray(scores, dtype=float))
    idx = np.asarray(given, dtype=int) - 1
    rows = np.arange(S.shape[0])
    own = S[rows, idx]
    best = S.max(axis=1)
    others = S.copy()
    others[rows, idx] = -np.inf
    rival = others.max(axis=1)
    return np.where(own < best, best - own, rival - own)


def predict_with_tie_rule(scores, given) -> np.ndarray:
    """Argmax over classes; the given label wins ties, else the lowest index."""
    S = np.atleast_2d(np.asarray(scores, dtype=float))
    idx = np.asarray(given, dtype=int) - 1
    rows = np.arange(S.shape[0])
    best = S.max(axis=1)
    first = np.argmax(S, axis=1)
    return np.where(S[rows, idx] == best, idx, first) + 1


def normalize_farness(raw, labels, quantile: float = 0.995):
    """Divide each farness column by the cutoff fitted on its own class.

    Returns the normalized matrix, the cutoff vector and the calibrations.
    """
    F = np.atleast_2d(np.asarray(raw, dtype=float))
    labels = np.asarray(labels, dtype=int)
    cals: list[FarnessCalibration] = []
    for g in range(1, F.shape[1] + 1):
        cals.append(calibrate_farness(F[labels == g, g - 1], quantile))
    cutoffs = np.array([c.cutoff for c in cals])
    return F / cutoffs, cutoffs, cals
