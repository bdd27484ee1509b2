"""Label dissimilarity and farness diagnostics for classifiers, with class maps and mosaic plots."""

from .da import diagnose_da, train_da
from .data import ConfusionSummary, DiagnosticTable, LabeledInput, build_confusion, misclassification_rate
from .files import InputError, ingest_csv, write_outputs
from .knn import diagnose_knn
from .logistic import diagnose_logistic, train_logistic
from .numeric import NumericalError, calibrate_farness
from .svm import KernelSpec, diagnose_svm, train_svm_smo
from .viz import PlotOptions, layout_classmap, layout_mosaic, render_svg
from .voting import PairwiseTrainingError, diagnose_vote, verify_vote_bounds

__all__ = [
    "ConfusionSummary", "DiagnosticTable", "InputError", "KernelSpec", "LabeledInput",
    "NumericalError", "PairwiseTrainingError", "PlotOptions", "build_confusion",
    "calibrate_farness", "diagnose_da", "diagnose_knn", "diagnose_logistic", "diagnose_svm",
    "diagnose_vote", "ingest_csv", "layout_classmap", "layout_mosaic", "misclassification_rate",
    "render_svg", "train_da", "train_logistic", "train_svm_smo", "verify_vote_bounds",
    "write_outputs",
]
