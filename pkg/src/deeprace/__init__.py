"""Data race detection for C/OpenMP/pthread code with a token-sequence CNN and class activation maps."""

__version__ = "0.1.0"

from .patterns import PatternKind, matches_pattern
from .corpus import (BUGGY, CLEAN, CorpusEntry, CorpusStats, Manifest, ManifestError, SynthSpec,
                     build_manifest, scan_corpus, synth_corpus)
from .mutator import MutationResult, QuotaError, apply_balanced_mutation, mutate
from .model import Hyperparams, ModelParams, TrainReport, TrainingError, fit, gradcheck, predict
from .dataset import load_units, train, units_from_source
from .serialization import FormatError, load_model, save_model
from .cam import CamResult, cam_scores, flag_lines, localize, project_to_lines, render_report
from .evaluation import ConfusionMatrix, MetricsReport, confusion, evaluate, iou

__all__ = [
    "PatternKind", "matches_pattern", "BUGGY", "CLEAN", "CorpusEntry", "CorpusStats", "Manifest",
    "ManifestError", "SynthSpec", "build_manifest", "scan_corpus", "synth_corpus",
    "MutationResult", "QuotaError", "apply_balanced_mutation", "mutate", "Hyperparams",
    "ModelParams", "TrainReport", "TrainingError", "fit", "gradcheck", "predict", "load_units",
    "train", "units_from_source", "FormatError", "load_model", "save_model", "CamResult",
    "cam_scores", "flag_lines", "localize", "project_to_lines", "render_report",
    "ConfusionMatrix", "MetricsReport", "confusion", "evaluate", "iou",
]
