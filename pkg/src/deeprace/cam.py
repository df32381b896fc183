"""Class activation maps projected onto source lines."""
from __future__ import annotations

import html
import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import BUGGY, CLEAN
from .frontend import EncodedSample, encode
from .model import ModelParams, forward_batch
from .dataset import units_from_source
from .patterns import PatternKind

DEFAULT_THETA = 0.5


@dataclass
class CamResult:
    per_token: np.ndarray  # raw score per valid position
    token_lines: np.ndarray  # source line of each valid position
    per_line: dict[int, float]  # heat in [0, 1]
    flagged_lines: frozenset[int]
    predicted: str
    prob_buggy: float
    unit_name: str = "<file>"
    first_line: int = 1
    last_line: int = 1
    logits: np.ndarray | None = None


def cam_scores(params: ModelParams, sample: EncodedSample, cls: int = 1
               ) -> tuple[np.ndarray, np.ndarray]:
    """Per-position class activation for class ``cls`` at valid positions.

    raw(i) = (1 / n_windows) * sum_k W_out[cls, k] * g_k(i), k over every
    filter of every window bank.  Returns ``(raw, logits)``.
    """
    cache = forward_batch(params, sample.ids[None], sample.mask[None])
    G = cache.G[0]  # (L, nF)
    raw = G @ params.W_out[cls] / len(params.hp.window_sizes)
    valid = sample.mask.astype(bool)
    return raw[valid], cache.z[0]


def project_to_lines(raw: np.ndarray, lines: np.ndarray) -> dict[int, float]:
    """Clamp negatives, take the max per line, normalize by the global max."""
    heat: dict[int, float] = {}
    for score, line in zip(np.maximum(np.asarray(raw, dtype=np.float64), 0.0), lines):
        line = int(line)
        heat[line] = max(heat.get(line, 0.0), float(score))
    top = max(heat.values(), default=0.0)
    if top > 0:
        return {ln: h / top for ln, h in heat.items()}
    return {ln: 0.0 for ln in heat}


def flag_lines(heat: dict[int, float], theta: float = DEFAULT_THETA) -> frozenset[int]:
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    return frozenset(ln for ln, h in heat.items() if h > 0 and h >= theta)


def explain(params: ModelParams, sample: EncodedSample, theta: float = DEFAULT_THETA,
            unit_name: str = "<file>", first_line: int = 1, last_line: int = 1) -> CamResult:
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    raw, z = cam_scores(params, sample, 1)
    e = np.exp(z - z.max())
    prob = float(e[1] / e.sum())
    predicted = BUGGY if prob >= params.hp.threshold else CLEAN
    lines = sample.line_map[sample.mask.astype(bool)]
    heat = project_to_lines(raw, lines)
    flagged = flag_lines(heat, theta) if predicted == BUGGY else frozenset()
    return CamResult(raw, lines, heat, flagged, predicted, prob, unit_name, first_line,
                     last_line, z)


def localize(params: ModelParams, source: str, pattern: PatternKind | str,
             theta: float = DEFAULT_THETA) -> list[CamResult]:
    """One result per analysis unit; units predicted clean carry no flagged lines."""
    results = []
    for unit in units_from_source(source, pattern):
        sample = encode(unit.vector, params.vocab, params.hp.max_len)
        results.append(explain(params, sample, theta, unit.vector.unit_name,
                               unit.vector.first_line, unit.vector.last_line))
    return results


def merge_results(results: list[CamResult], n_lines: int) -> CamResult:
    """File-level view over disjoint units: union of heat maps and flags."""
    per_line: dict[int, float] = {}
    flagged: set[int] = set()
    for r in results:
        for ln, h in r.per_line.items():
            per_line[ln] = max(per_line.get(ln, 0.0), h)
        flagged |= r.flagged_lines
    prob = max((r.prob_buggy for r in results), default=0.0)
    predicted = BUGGY if any(r.predicted == BUGGY for r in results) else CLEAN
    tokens = np.concatenate([r.per_token for r in results]) if results else np.zeros(0)
    lines = np.concatenate([r.token_lines for r in results]) if results else np.zeros(0, int)
    return CamResult(tokens, lines, per_line, frozenset(flagged), predicted, prob, "<file>",
                     1, max(n_lines, 1))


# ---------------------------------------------------------------------------
# reports

_ANSI_ON = "\x1b[41m"
_ANSI_OFF = "\x1b[0m"


def render_report(source: str, result: CamResult, fmt: str = "ansi") -> str:
    lines = source.splitlines()
    if fmt == "json":
        return json.dumps({
            "prob_buggy": result.prob_buggy,
            "predicted": result.predicted,
            "lines": [{"line": i, "heat": result.per_line.get(i, 0.0),
                       "flagged": i in result.flagged_lines}
                      for i in range(1, len(lines) + 1)],
        }, indent=2) + "\n"
    if fmt == "ansi":
        out = [f"prob_buggy={result.prob_buggy:.4f} predicted={result.predicted}"]
        width = len(str(len(lines)))
        for i, text in enumerate(lines, 1):
            row = f"{i:>{width}} | {text}"
            out.append(f"{_ANSI_ON}{row}{_ANSI_OFF}" if i in result.flagged_lines else row)
        return "\n".join(out) + "\n"
    if fmt == "html":
        rows = []
        for i, text in enumerate(lines, 1):
            body = html.escape(text) or "&nbsp;"
            if i in result.flagged_lines:
                heat = result.per_line.get(i, 0.0)
                body = (f'<mark style="background: rgba(220, 40, 40, {heat:.3f})">'
                        f"{body}</mark>")
            rows.append(f'<div class="l"><span class="n">{i}</span>{body}</div>')
        return (
            "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>race report</title>"
            "<style>body{font-family:monospace;white-space:pre}"
            ".n{display:inline-block;width:4em;color:#888}"
            "mark{color:inherit}</style></head><body>\n"
            f"<p>prob_buggy={result.prob_buggy:.4f} predicted={result.predicted}</p>\n"
            + "\n".join(rows) + "\n</body></html>\n")
    raise ValueError(f"unknown report format {fmt!r}; expected ansi, html or json")
