"""Command-line front end.

Exit codes: 0 success, 2 invalid input or options, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import synth
from .da import diagnose_da
from .files import InputError, feature_names, ingest_csv, read_vector, write_outputs
from .knn import diagnose_knn
from .logistic import DISPATCHES, diagnose_logistic, read_coefficients
from .numeric import NumericalError
from .svm import KERNEL_KINDS, KernelSpec, diagnose_svm
from .viz import DEFAULT_PALETTE, PlotOptions
from .voting import PairwiseTrainingError, diagnose_vote

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
CLASSIFIERS = ("da", "knn", "svm", "logistic", "vote")

log = logging.getLogger("classmap")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _quantile(text: str) -> float:
    value = float(text)
    if not 0.5 < value < 1.0:
        raise argparse.ArgumentTypeError(f"quantile must lie in (0.5, 1), got {text}")
    return value


def _annotation(text: str) -> tuple[int, str]:
    idx, sep, note = text.partition("=")
    if not sep or not note.strip():
        raise argparse.ArgumentTypeError(f"expected idx=label, got {text!r}")
    try:
        i = int(idx)
    except ValueError:
        raise argparse.ArgumentTypeError(f"annotation index must be an integer, got {idx!r}") from None
    if i < 1:
        raise argparse.ArgumentTypeError("annotation indices are 1-based")
    return i, note.strip()


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("input (exactly one)")
    src.add_argument("--input", help="feature CSV")
    src.add_argument("--diss", help="dissimilarity matrix CSV (square, plus labels column)")
    src.add_argument("--kernel", help="kernel matrix CSV (square, plus labels column)")
    src.add_argument("--strings", help="CSV with a text column")
    p.add_argument("--labels-col", default="label")
    p.add_argument("--text-col", help="text column for --strings (default: first non-label column)")
    p.add_argument("--classes", help="comma-separated class order (default: first appearance)")
    p.add_argument("--quantile", type=_quantile, default=0.995)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    plot = p.add_argument_group("plot")
    plot.add_argument("--show-outliers", action="store_true")
    plot.add_argument("--palette", help="comma-separated hex colors")
    plot.add_argument("--annotate", action="append", type=_annotation, default=[],
                      metavar="IDX=LABEL", help="label object IDX (1-based) in its class map")
    plot.add_argument("--width", type=float, default=640.0)
    plot.add_argument("--height", type=float, default=480.0)


def _add_kernel(p: argparse.ArgumentParser, default: str = "linear") -> None:
    p.add_argument("--kernel-kind", choices=KERNEL_KINDS, default=default)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--degree", type=_positive_int, default=3)
    p.add_argument("--coef0", type=float, default=0.0)
    p.add_argument("--spectrum-length", type=_positive_int, default=3)
    p.add_argument("--cost", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="classmap", description="Classification diagnostics and class maps.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("da", help="linear or quadratic discriminant analysis")
    _add_common(p)
    p.add_argument("--mode", choices=("lda", "qda"), default="qda")

    p = sub.add_parser("knn", help="k-nearest neighbors on dissimilarities")
    _add_common(p)
    p.add_argument("--k", type=_positive_int, default=5)

    p = sub.add_parser("svm", help="binary support vector machine")
    _add_common(p)
    _add_kernel(p)
    p.add_argument("--decision-values", help="CSV of precomputed decision values (last column)")

    p = sub.add_parser("logistic", help="binary logistic regression")
    _add_common(p)
    p.add_argument("--dispatch", choices=DISPATCHES, help="farness route (default: by class sizes)")
    p.add_argument("--coefficients", help="name,value CSV of fitted coefficients")

    p = sub.add_parser("vote", help="one-versus-one majority voting")
    _add_common(p)
    _add_kernel(p)
    p.add_argument("--engine", choices=("svm", "da", "logistic"), default="svm")
    p.add_argument("--farness", choices=("kpca", "mahalanobis", "knn"))
    p.add_argument("--mode", choices=("lda", "qda"), default="qda")
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--n-jobs", type=_positive_int)

    p = sub.add_parser("synth", help="write the example data sets as CSV")
    p.add_argument("--kind", choices=synth.KINDS + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data")
    p.add_argument("--labels-col", default="label")
    p.add_argument("--config")
    return parser


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, section headers are ignored."""
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError(f"{path}:{lineno}: expected key = value")
        values[key.strip().replace("-", "_")] = value.strip().strip("\"'")
    return values


def _apply_config(sub: argparse.ArgumentParser, config: dict[str, str], path) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, text in config.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise InputError(f"{path}: unknown option {key!r} for {sub.prog}")
        try:
            if isinstance(action, argparse._StoreTrueAction):
                if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(f"expected a boolean, got {text!r}")
                value = text.lower() in ("true", "1", "yes")
            elif isinstance(action, argparse._AppendAction):
                value = [action.type(t.strip()) for t in text.split(",") if t.strip()]
            else:
                value = action.type(text) if action.type else text
                if action.choices is not None and value not in action.choices:
                    raise ValueError(f"invalid choice {value!r}")
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise InputError(f"{path}: option {key!r}: {exc}") from None
        defaults[key] = value
    sub.set_defaults(**defaults)


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        _apply_config(sub, read_config(args.config), args.config)
        args = parser.parse_args(argv)
    return args


def load_input(args):
    given = [(flag, getattr(args, flag)) for flag in ("input", "diss", "kernel", "strings")
             if getattr(args, flag)]
    if len(given) != 1:
        raise InputError("give exactly one of --input, --diss, --kernel, --strings")
    flag, path = given[0]
    kind = {"input": "features", "diss": "dissimilarity", "kernel": "kernel", "strings": "strings"}[flag]
    classes = [c.strip() for c in args.classes.split(",")] if args.classes else None
    return ingest_csv(path, kind, args.labels_col, classes, text_col=args.text_col), path


def plot_options(args) -> PlotOptions:
    palette = DEFAULT_PALETTE
    if args.palette:
        palette = tuple(c.strip() for c in args.palette.split(","))
        bad = [c for c in palette if not (c.startswith("#") and len(c) in (4, 7)
                                          and all(ch in "0123456789abcdefABCDEF" for ch in c[1:]))]
        if bad:
            raise InputError(f"invalid palette colors: {', '.join(bad)}")
    return PlotOptions(width=args.width, height=args.height, palette=palette,
                       show_outliers=args.show_outliers,
                       annotations={i - 1: note for i, note in args.annotate})


def _kernel_spec(args, data) -> KernelSpec:
    kind = args.kernel_kind
    if data.kind == "kernel":
        kind = "precomputed"
    elif data.kind == "strings":
        kind = "spectrum"
    return KernelSpec(kind, gamma=args.gamma, coef0=args.coef0, degree=args.degree,
                      length=args.spectrum_length)


def diagnose(args):
    data, path = load_input(args)
    for i, _ in args.annotate:
        if i > data.n:
            raise InputError(f"annotation index {i} exceeds the {data.n} objects")
    if args.command == "da":
        if data.kind != "features":
            raise InputError("da needs --input")
        return diagnose_da(data, args.mode, args.quantile)
    if args.command == "knn":
        if data.kind not in ("features", "dissimilarity"):
            raise InputError("knn needs --diss or --input")
        return diagnose_knn(data, args.k, args.quantile)
    if args.command == "svm":
        dv = read_vector(args.decision_values) if args.decision_values else None
        return diagnose_svm(data, _kernel_spec(args, data), args.cost, args.quantile, dv)
    if args.command == "logistic":
        model = None
        if args.coefficients:
            if data.kind != "features":
                raise InputError("logistic needs --input")
            model = read_coefficients(args.coefficients, feature_names(path, args.labels_col))
        return diagnose_logistic(data, args.dispatch, args.quantile, model)
    return diagnose_vote(data, args.engine, _kernel_spec(args, data), args.cost, args.farness,
                         args.k, args.mode, args.quantile, args.n_jobs)


def run_synth(args) -> None:
    kinds = synth.KINDS if args.kind == "all" else (args.kind,)
    for kind in kinds:
        path = synth.write_csv(synth.make(kind, args.seed), Path(args.out) / f"{kind}.csv", args.labels_col)
        print(path)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        if args.command == "synth":
            run_synth(args)
            return EXIT_OK
        table = diagnose(args)
        for path in write_outputs(table, args.out, plot_options(args)):
            log.info("wrote %s", path)
        print((Path(args.out) / "summary.txt").read_text(encoding="utf-8"), end="")
        return EXIT_OK
    except (NumericalError, np.linalg.LinAlgError, PairwiseTrainingError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
