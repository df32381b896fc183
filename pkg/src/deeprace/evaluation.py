"""Classification metrics, confusion matrices and line-level IoU."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .cam import DEFAULT_THETA, explain
from .corpus import BUGGY, CLEAN, Manifest
from .dataset import encode_units, load_units
from .model import ModelParams, batched_probs


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def grid(self) -> str:
        """Predicted rows x ground-truth columns."""
        w = max(5, *(len(str(v)) for v in (self.tp, self.fp, self.tn, self.fn))) + 2
        return "\n".join([
            f"{'':<22}{'truth':>{w}}",
            f"{'':<22}{'buggy':>{w}}{'clean':>{w}}",
            f"{'predicted buggy':<22}{self.tp:>{w}}{self.fp:>{w}}",
            f"{'predicted clean':<22}{self.fn:>{w}}{self.tn:>{w}}",
        ])


def _is_buggy(x) -> bool:
    if isinstance(x, str):
        if x not in (BUGGY, CLEAN):
            raise ValueError(f"unknown label {x!r}")
        return x == BUGGY
    return bool(x)


def confusion(predictions: Sequence, truth: Sequence) -> ConfusionMatrix:
    if len(predictions) != len(truth):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(truth)} labels")
    tp = fp = tn = fn = 0
    for p, t in zip(predictions, truth):
        p, t = _is_buggy(p), _is_buggy(t)
        if p and t:
            tp += 1
        elif p:
            fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


# ``None`` marks an undefined rate (zero denominator).
def precision(cm: ConfusionMatrix) -> float | None:
    d = cm.tp + cm.fp
    return cm.tp / d if d else None


def recall(cm: ConfusionMatrix) -> float | None:
    d = cm.tp + cm.fn
    return cm.tp / d if d else None


def accuracy(cm: ConfusionMatrix) -> float | None:
    return (cm.tp + cm.tn) / cm.total if cm.total else None


@dataclass(frozen=True)
class LocalizationTally:
    A: int  # flagged and truly buggy
    B: int  # truly buggy, missed
    C: int  # flagged, not buggy
    N: int  # lines in the unit


def tally(flagged, truth, n_lines: int) -> LocalizationTally:
    flagged, truth = set(flagged), set(truth)
    if n_lines < 1:
        raise ValueError("unit must have at least one line")
    for ln in flagged | truth:
        if not 1 <= ln <= n_lines:
            raise ValueError(f"line {ln} outside 1..{n_lines}")
    return LocalizationTally(len(flagged & truth), len(truth - flagged), len(flagged - truth), n_lines)


def iou(flagged, truth, n_lines: int) -> tuple[float, float]:
    """(paper_literal, standard).

    standard = A / (A + B + C); paper_literal = A / ((A + B) + C / N).  When the
    denominator is zero (nothing to find, nothing flagged) both are 1.
    """
    t = tally(flagged, truth, n_lines)
    std_den = t.A + t.B + t.C
    lit_den = (t.A + t.B) + t.C / t.N
    standard = t.A / std_den if std_den else 1.0
    literal = t.A / lit_den if lit_den else 1.0
    return literal, standard


@dataclass
class MetricsReport:
    confusion: ConfusionMatrix
    precision: float | None
    recall: float | None
    accuracy: float | None
    mean_iou_paper: float | None
    mean_iou_standard: float | None
    tallies: list[dict] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    n_units: int = 0

    def to_json(self) -> str:
        d = asdict(self)
        d["skipped"] = [{"path": p, "error": e} for p, e in self.skipped]
        return json.dumps(d, indent=2) + "\n"

    def to_text(self) -> str:
        fmt = lambda v: "undefined" if v is None else f"{v:.4f}"
        rows = [
            ("units", str(self.n_units)),
            ("skipped files", str(len(self.skipped))),
            ("precision", fmt(self.precision)),
            ("recall", fmt(self.recall)),
            ("accuracy", fmt(self.accuracy)),
            ("mean IoU (literal form)", fmt(self.mean_iou_paper)),
            ("mean IoU (standard)", fmt(self.mean_iou_standard)),
        ]
        w = max(len(k) for k, _ in rows)
        body = "\n".join(f"{k:<{w}}  {v}" for k, v in rows)
        return body + "\n\n" + self.confusion.grid() + "\n"


def report_from(preds: Sequence, labels: Sequence, ious: Sequence[tuple[float, float]] = (),
                tallies: Sequence[dict] = ()) -> MetricsReport:
    cm = confusion(preds, labels)
    lit = float(np.mean([a for a, _ in ious])) if ious else None
    std = float(np.mean([b for _, b in ious])) if ious else None
    return MetricsReport(cm, precision(cm), recall(cm), accuracy(cm), lit, std, list(tallies),
                         n_units=len(preds))


def evaluate(params: ModelParams, manifest: Manifest, split: str = "val",
             theta: float = DEFAULT_THETA, jobs: int = 1) -> MetricsReport:
    units, skipped = load_units(manifest, split, jobs)
    if not units and not skipped:
        raise ValueError(f"split {split!r} is empty")
    samples = encode_units(params, units)
    if samples:
        ids = np.stack([s.ids for s in samples])
        mask = np.stack([s.mask for s in samples])
        probs = batched_probs(params, ids, mask)[:, 1]
    else:
        probs = np.zeros(0)
    preds = [int(p >= params.hp.threshold) for p in probs]
    labels = [u.label for u in units]
    ious, tallies = [], []
    for unit, sample, pred in zip(units, samples, preds):
        if not unit.label:
            continue
        first, n = unit.vector.first_line, unit.vector.n_lines
        flagged = frozenset()
        if pred:
            res = explain(params, sample, theta, unit.vector.unit_name, first, unit.vector.last_line)
            flagged = res.flagged_lines
        rel = lambda lines: {ln - first + 1 for ln in lines}
        lit, std = iou(rel(flagged), rel(unit.truth_lines), n)
        ious.append((lit, std))
        t = tally(rel(flagged), rel(unit.truth_lines), n)
        tallies.append({"path": str(unit.path), "unit": unit.vector.unit_name, **asdict(t),
                        "iou_paper": lit, "iou_standard": std})
    rep = report_from(preds, labels, ious, tallies)
    rep.skipped = skipped
    return rep
