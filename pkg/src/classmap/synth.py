"""Seeded example data sets used by the acceptance suite and the ``synth`` command."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .data import LabeledInput

KINDS = ("gauss2", "knn-grid", "mislabel", "blobs3", "gauss1", "strings")


def two_gaussians(n_per_class: int = 100, d: int = 2, shift: float = 6.0, seed: int = 0) -> LabeledInput:
    """Two well separated spherical Gaussian blobs."""
    rng = np.random.default_rng(seed)
    mu = np.zeros(d)
    mu[0] = shift / 2
    X = np.vstack([rng.normal(size=(n_per_class, d)) + mu, rng.normal(size=(n_per_class, d)) - mu])
    return LabeledInput("features", X, np.repeat([1, 2], n_per_class), ("A", "B"))


def overlapping_pair(n: int = 400, d: int = 2, shift: float = 1.5, seed: int = 0) -> LabeledInput:
    """Two overlapping Gaussian classes (continuous, so no dissimilarity ties)."""
    rng = np.random.default_rng(seed)
    labels = np.repeat([1, 2], [n // 2, n - n // 2])
    X = rng.normal(size=(n, d))
    X[:, 0] += np.where(labels == 1, shift / 2, -shift / 2)
    return LabeledInput("features", X, labels, ("A", "B"))


def mislabeled_pair(n_per_class: int = 500, n_flip: int = 5, seed: int = 0):
    """Gaussians at (+-4, 0) with unit variance; ``n_flip`` randomly chosen
    objects get the other class's label.

    Returns the input and the indices of the relabeled objects.
    """
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(size=(n_per_class, 2)) + [4.0, 0.0],
                   rng.normal(size=(n_per_class, 2)) - [4.0, 0.0]])
    labels = np.repeat([1, 2], n_per_class)
    flipped = np.sort(rng.choice(labels.size, size=n_flip, replace=False))
    labels[flipped] = 3 - labels[flipped]
    return LabeledInput("features", X, labels, ("left", "right")), flipped


def three_blobs(n_per_class: int = 60, d: int = 2, spread: float = 8.0, seed: int = 0) -> LabeledInput:
    if d < 2:
        raise ValueError("three_blobs needs d >= 2")
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * np.arange(3) / 3
    centers = np.zeros((3, d))
    centers[:, 0] = spread * np.cos(angles)
    centers[:, 1] = spread * np.sin(angles)
    X = np.vstack([rng.normal(size=(n_per_class, d)) + c for c in centers])
    return LabeledInput("features", X, np.repeat([1, 2, 3], n_per_class), ("red", "green", "blue"))


def single_gaussian(n: int = 2000, d: int = 3, seed: int = 0) -> LabeledInput:
    """One Gaussian class with a random covariance, plus a small far-away second class."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d)) + 2 * np.eye(d)
    X = rng.normal(size=(n, d)) @ A.T + rng.normal(size=d)
    Y = rng.normal(size=(max(d + 10, 20), d)) + 50.0
    labels = np.repeat([1, 2], [n, Y.shape[0]])
    return LabeledInput("features", np.vstack([X, Y]), labels, ("main", "other"))


def toy_strings(n_per_class: int = 20, seed: int = 0) -> LabeledInput:
    rng = np.random.default_rng(seed)
    pos = ["great", "wonderful", "loved", "excellent", "enjoyed", "superb"]
    neg = ["boring", "awful", "hated", "dull", "terrible", "waste"]
    filler = ["the", "book", "story", "plot", "characters", "was", "really", "quite", "and"]
    texts, labels = [], []
    for label, vocab in ((1, pos), (2, neg)):
        for _ in range(n_per_class):
            words = list(rng.choice(filler, size=6)) + list(rng.choice(vocab, size=2))
            rng.shuffle(words)
            texts.append(" ".join(words))
            labels.append(label)
    return LabeledInput("strings", np.zeros((len(texts), 0)), np.array(labels), ("positive", "negative"),
                        texts=tuple(texts))


def make(kind: str, seed: int = 0) -> LabeledInput:
    if kind == "gauss2":
        return two_gaussians(seed=seed)
    if kind == "knn-grid":
        return overlapping_pair(seed=seed)
    if kind == "mislabel":
        return mislabeled_pair(seed=seed)[0]
    if kind == "blobs3":
        return three_blobs(seed=seed)
    if kind == "gauss1":
        return single_gaussian(seed=seed)
    if kind == "strings":
        return toy_strings(seed=seed)
    raise ValueError(f"unknown synthetic data kind {kind!r}; choose from {', '.join(KINDS)}")


def write_csv(data: LabeledInput, path, labels_col: str = "label") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if data.kind == "strings":
            w.writerow(["text", labels_col])
            for text, g in zip(data.texts, data.labels):
                w.writerow([text, data.class_names[g - 1]])
        else:
            cols = [f"x{j + 1}" for j in range(data.matrix.shape[1])]
            w.writerow(cols + [labels_col])
            for row, g in zip(data.matrix, data.labels):
                w.writerow([repr(float(v)) for v in row] + [data.class_names[g - 1]])
    return path
