"""CSV ingestion and artifact writing."""

from __future__ import annotations

import csv
import json
import re
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import ConfusionSummary, DiagnosticTable, LabeledInput, build_confusion, misclassification_rate
from .viz import PlotOptions, layout_classmap, layout_mosaic, render_svg


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def _read_rows(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        except UnicodeDecodeError:
            raise InputError(f"{path}: not valid UTF-8") from None
        header = [h.strip() for h in header]
        seen = set()
        for name in header:
            if name in seen:
                raise InputError(f"{path}: duplicate header name {name!r}")
            seen.add(name)
        rows = []
        try:
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise InputError(f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}")
                rows.append((reader.line_num, row))
        except UnicodeDecodeError:
            raise InputError(f"{path}: not valid UTF-8") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return header, rows


def _dense_labels(raw: Sequence[str], classes: Sequence[str] | None):
    if classes is None:
        names: dict[str, int] = {}
        for value in raw:
            names.setdefault(value, len(names) + 1)
    else:
        names = {c: k for k, c in enumerate(classes, start=1)}
        unknown = sorted(set(raw) - set(names))
        if unknown:
            raise InputError(f"unknown class label {unknown[0]!r}; known classes: {', '.join(classes)}")
        missing = [c for c in classes if c not in set(raw)]
        if missing:
            raise InputError(f"class {missing[0]!r} has no objects")
    return np.array([names[v] for v in raw], dtype=int), tuple(names)


def ingest_csv(path, kind: str = "features", labels_col: str = "label",
               classes: Sequence[str] | None = None, text_col: str | None = None) -> LabeledInput:
    """Read a labeled CSV.

    The labels column is mapped to 1..G in order of first appearance unless
    ``classes`` fixes the order; that order also breaks voting ties. Every
    other column must be numeric, except for ``kind="strings"`` where one
    text column is read.
    """
    header, rows = _read_rows(path)
    if labels_col not in header:
        raise InputError(f"{path}: labels column {labels_col!r} not found (columns: {', '.join(header)})")
    li = header.index(labels_col)
    raw_labels = [row[li].strip() for _, row in rows]
    if any(not v for v in raw_labels):
        line = next(ln for (ln, row) in rows if not row[li].strip())
        raise InputError(f"{path}:{line}: empty label")
    labels, names = _dense_labels(raw_labels, classes)
    others = [c for c in range(len(header)) if c != li]
    if kind == "strings":
        if text_col is None:
            if not others:
                raise InputError(f"{path}: no text column")
            tc = others[0]
        elif text_col in header:
            tc = header.index(text_col)
        else:
            raise InputError(f"{path}: text column {text_col!r} not found")
        texts = tuple(row[tc] for _, row in rows)
        return LabeledInput("strings", np.zeros((len(rows), 0)), labels, names, texts=texts)
    if not others:
        raise InputError(f"{path}: no numeric columns besides {labels_col!r}")
    M = np.empty((len(rows), len(others)))
    for r, (line, row) in enumerate(rows):
        for c, col in enumerate(others):
            cell = row[col].strip()
            try:
                M[r, c] = float(cell)
            except ValueError:
                raise InputError(f"{path}:{line}: column {header[col]!r}: non-numeric value {cell!r}") from None
            if not np.isfinite(M[r, c]):
                raise InputError(f"{path}:{line}: column {header[col]!r}: non-finite value {cell!r}")
    try:
        return LabeledInput(kind, M, labels, names)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_vector(path, column: str | None = None) -> np.ndarray:
    """Read one numeric column (default: the last) from a CSV with header."""
    header, rows = _read_rows(path)
    c = len(header) - 1 if column is None else header.index(column)
    out = []
    for line, row in rows:
        try:
            out.append(float(row[c]))
        except ValueError:
            raise InputError(f"{path}:{line}: non-numeric value {row[c]!r}") from None
    return np.asarray(out)


def feature_names(path, labels_col: str) -> list[str]:
    header, _ = _read_rows(path)
    return [h for h in header if h != labels_col]


def schema() -> dict:
    text = resources.files("classmap").joinpath("schema/diagnostics.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "class"


def summary_text(table: DiagnosticTable, confusion: ConfusionSummary) -> str:
    lines = [
        f"classifier: {table.classifier}",
        f"objects: {table.n}",
        f"classes: {table.G}",
        f"misclassification rate: {misclassification_rate(table):.6f}",
        "",
        "class\tsize\tmisclassified\toutliers\tcutoff",
    ]
    sizes = confusion.class_sizes
    for g, name in enumerate(table.class_names):
        wrong = int(sizes[g] - confusion.counts[g, g])
        cutoff = "" if table.cutoffs is None else repr(float(table.cutoffs[g]))
        lines.append(f"{name}\t{int(sizes[g])}\t{wrong}\t{int(confusion.outlier_counts[g])}\t{cutoff}")
    return "\n".join(lines) + "\n"


def write_outputs(table: DiagnosticTable, out_dir, options: PlotOptions = PlotOptions()) -> list[Path]:
    """Write diagnostics.json/.csv, one class map per class, mosaic.svg and summary.txt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str):
        path = out / name
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)

    put("diagnostics.json", table.to_json())
    put("diagnostics.csv", table.to_csv())
    used = set()
    for g in range(1, table.G + 1):
        stem = safe_name(table.class_names[g - 1])
        if stem in used:
            stem = f"{stem}_{g}"
        used.add(stem)
        put(f"classmap_{stem}.svg", render_svg(layout_classmap(table, g, options), options))
    confusion = build_confusion(table)
    put("mosaic.svg", render_svg(layout_mosaic(confusion, options.show_outliers), options))
    put("summary.txt", summary_text(table, confusion))
    return written
