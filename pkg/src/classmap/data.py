"""Input and output containers shared by the classifiers and the renderer."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

KINDS = ("features", "dissimilarity", "kernel", "strings")


@dataclass(frozen=True)
class LabeledInput:
    """Objects with given labels.

    ``labels`` are dense integers 1..G; ``class_names[g - 1]`` names class g.
    For ``kind="strings"`` the raw texts live in ``texts`` and ``matrix`` is
    left empty until a kernel is computed.
    """

    kind: str
    matrix: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    texts: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown input kind {self.kind!r}")
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        G = len(self.class_names)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty vector")
        if labels.min() < 1 or labels.max() > G:
            raise ValueError(f"labels must lie in 1..{G}")
        if np.any(np.bincount(labels, minlength=G + 1)[1:] == 0):
            raise ValueError("every class needs at least one object")
        if self.kind == "strings":
            if self.texts is None or len(self.texts) != labels.size:
                raise ValueError("strings input needs one text per label")
            return
        M = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", M)
        if M.ndim != 2 or M.shape[0] != labels.size:
            raise ValueError("matrix rows must match the number of labels")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix contains non-finite values")
        if self.kind in ("dissimilarity", "kernel"):
            if M.shape[0] != M.shape[1] or not np.array_equal(M, M.T):
                raise ValueError(f"{self.kind} matrix must be square and symmetric")
        if self.kind == "dissimilarity":
            if np.any(np.diag(M) != 0) or np.any(M < 0):
                raise ValueError("dissimilarity matrix needs zero diagonal and nonnegative entries")

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def d(self) -> int:
        return int(self.matrix.shape[1]) if self.kind == "features" else 0

    @property
    def G(self) -> int:
        return len(self.class_names)


def labels_to_dense(raw: Sequence) -> tuple[np.ndarray, tuple[str, ...]]:
    """Map arbitrary labels to 1..G in order of first appearance."""
    names: dict[str, int] = {}
    dense = []
    for value in raw:
        key = str(value)
        if key not in names:
            names[key] = len(names) + 1
        dense.append(names[key])
    return np.asarray(dense, dtype=int), tuple(names)


@dataclass(frozen=True)
class DiagnosticTable:
    """Per-object diagnostics.

    ``farness`` is normalized so that each class cutoff sits at 1;
    ``raw_farness`` optionally keeps the values before that division.
    """

    given: np.ndarray
    predicted: np.ndarray
    ld: np.ndarray
    farness: np.ndarray
    class_names: tuple[str, ...]
    classifier: str = ""
    raw_farness: np.ndarray | None = None
    cutoffs: np.ndarray | None = None
    outlyingness: np.ndarray = field(init=False)
    is_outlier: np.ndarray = field(init=False)

    def __post_init__(self):
        given = np.asarray(self.given, dtype=int)
        predicted = np.asarray(self.predicted, dtype=int)
        ld = np.asarray(self.ld, dtype=float)
        F = np.atleast_2d(np.asarray(self.farness, dtype=float))
        n, G = given.size, len(self.class_names)
        if predicted.shape != (n,) or ld.shape != (n,) or F.shape != (n, G):
            raise ValueError("inconsistent diagnostic table shapes")
        if np.any(ld < 0) or np.any(ld > 1):
            raise ValueError("label dissimilarity must lie in [0, 1]")
        if np.any(F < 0):
            raise ValueError("farness must be nonnegative")
        for name, value in (("given", given), ("predicted", predicted), ("ld", ld), ("farness", F)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        O = F.min(axis=1)
        object.__setattr__(self, "outlyingness", O)
        object.__setattr__(self, "is_outlier", O > 1.0)
        if self.raw_farness is not None:
            object.__setattr__(self, "raw_farness", np.asarray(self.raw_farness, dtype=float))
        if self.cutoffs is not None:
            object.__setattr__(self, "cutoffs", np.asarray(self.cutoffs, dtype=float))

    @property
    def n(self) -> int:
        return int(self.given.size)

    @property
    def G(self) -> int:
        return len(self.class_names)

    def to_dict(self) -> dict:
        out = {
            "classifier": self.classifier,
            "class_names": list(self.class_names),
            "n": self.n,
            "G": self.G,
            "given": self.given.tolist(),
            "predicted": self.predicted.tolist(),
            "ld": self.ld.tolist(),
            "farness": self.farness.tolist(),
            "outlyingness": self.outlyingness.tolist(),
            "is_outlier": self.is_outlier.tolist(),
        }
        if self.cutoffs is not None:
            out["cutoffs"] = self.cutoffs.tolist()
        if self.raw_farness is not None:
            out["raw_farness"] = self.raw_farness.tolist()
        return out

    def to_json(self) -> str:
        # repr-based float output is the shortest round-trip decimal
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "DiagnosticTable":
        G = len(data["class_names"])
        return cls(
            given=np.asarray(data["given"], dtype=int),
            predicted=np.asarray(data["predicted"], dtype=int),
            ld=np.asarray(data["ld"], dtype=float),
            farness=np.asarray(data["farness"], dtype=float).reshape(-1, G),
            class_names=tuple(data["class_names"]),
            classifier=data.get("classifier", ""),
            raw_farness=None if "raw_farness" not in data
            else np.asarray(data["raw_farness"], dtype=float).reshape(-1, G),
            cutoffs=None if "cutoffs" not in data else np.asarray(data["cutoffs"], dtype=float),
        )

    @classmethod
    def from_json(cls, text: str) -> "DiagnosticTable":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "given", "predicted", "LD"]
                   + [f"f_{g}" for g in range(1, self.G + 1)] + ["O", "outlier"])
        for i in range(self.n):
            w.writerow([i + 1, int(self.given[i]), int(self.predicted[i]), repr(float(self.ld[i]))]
                       + [repr(float(v)) for v in self.farness[i]]
                       + [repr(float(self.outlyingness[i])), int(self.is_outlier[i])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, class_names: Sequence[str], classifier: str = "") -> "DiagnosticTable":
        rows = list(csv.reader(io.StringIO(text)))
        body = rows[1:]
        G = len(class_names)
        return cls(
            given=np.array([int(r[1]) for r in body]),
            predicted=np.array([int(r[2]) for r in body]),
            ld=np.array([float(r[3]) for r in body]),
            farness=np.array([[float(v) for v in r[4:4 + G]] for r in body]).reshape(-1, G),
            class_names=tuple(class_names),
            classifier=classifier,
        )


@dataclass(frozen=True)
class ConfusionSummary:
    """Given-by-predicted counts, plus the overall-outlier split of each cell."""

    counts: np.ndarray
    outlier_cells: np.ndarray
    class_names: tuple[str, ...]

    @property
    def outlier_counts(self) -> np.ndarray:
        return self.outlier_cells.sum(axis=1)

    @property
    def class_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def build_confusion(table: DiagnosticTable) -> ConfusionSummary:
    if table.n == 0:
        raise ValueError("empty diagnostic table")
    G = table.G
    counts = np.zeros((G, G), dtype=int)
    outliers = np.zeros((G, G), dtype=int)
    np.add.at(counts, (table.given - 1, table.predicted - 1), 1)
    np.add.at(outliers, (table.given - 1, table.predicted - 1), table.is_outlier.astype(int))
    return ConfusionSummary(counts, outliers, table.class_names)


def misclassification_rate(table: DiagnosticTable) -> float:
    if table.n == 0:
        raise ValueError("empty diagnostic table")
    return float(np.mean(table.given != table.predicted))
