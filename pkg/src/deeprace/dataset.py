"""Turn manifest entries into labelled analysis units and encoded samples."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import CorpusEntry, Manifest
from .frontend import LexError, ParseError, TokenVector, build_vocab, encode, extract_units, lex, parse
from .model import Hyperparams, ModelParams, TrainReport, TrainingError, fit
from .patterns import PatternKind

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Unit:
    path: Path
    vector: TokenVector
    label: int  # 1 buggy, 0 clean
    truth_lines: frozenset[int]
    entry: CorpusEntry | None = None


def default_jobs() -> int:
    env = os.environ.get("DEEPRACE_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def units_from_source(source: str, pattern: PatternKind | str, truth_lines: Iterable[int] = (),
                      buggy: bool = False, path: Path | str = "<memory>",
                      entry: CorpusEntry | None = None) -> list[Unit]:
    """Parse and split a file; a unit is buggy when it contains a ground-truth line."""
    truth = frozenset(truth_lines)
    out = []
    for vec in extract_units(parse(lex(source)), pattern):
        inside = frozenset(ln for ln in truth if vec.first_line <= ln <= vec.last_line)
        label = int(buggy and bool(inside))
        out.append(Unit(Path(path), vec, label, inside if label else frozenset(), entry))
    return out


def _load_entry(manifest: Manifest, entry: CorpusEntry) -> list[Unit] | Exception:
    path = manifest.resolve(entry)
    try:
        source = path.read_text(encoding="utf-8", errors="replace")
        return units_from_source(source, entry.pattern, entry.truth_lines, entry.buggy, path, entry)
    except (OSError, LexError, ParseError) as exc:
        return exc


def load_units(manifest: Manifest, split: str | None = None, jobs: int = 1
               ) -> tuple[list[Unit], list[tuple[str, str]]]:
    """Units for one split (or all entries).  Unparseable files are skipped and reported.

    Per-file work may fan out over ``jobs`` threads; results keep manifest order.
    """
    entries = [e for e in manifest if split is None or e.split == split]
    if jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(lambda e: _load_entry(manifest, e), entries))
    else:
        results = [_load_entry(manifest, e) for e in entries]
    units: list[Unit] = []
    skipped: list[tuple[str, str]] = []
    for entry, res in zip(entries, results):
        if isinstance(res, Exception):
            log.warning("skipping %s: %s", entry.path, res)
            skipped.append((entry.path, str(res)))
        else:
            units.extend(res)
    return units, skipped


def train(manifest: Manifest, hp: Hyperparams, jobs: int = 1, on_epoch=None
          ) -> tuple[ModelParams, TrainReport]:
    """Build the vocabulary and length policy from the train split, then fit."""
    train_units, _ = load_units(manifest, "train", jobs)
    val_units, _ = load_units(manifest, "val", jobs)
    if not train_units or not val_units:
        raise TrainingError("manifest needs nonempty train and val splits")
    if len({u.label for u in train_units}) < 2:
        raise TrainingError("training split contains a single class; both labels are required")
    vocab = build_vocab([u.vector for u in train_units])
    max_len = max(len(u.vector) for u in train_units)
    hp.max_len = max(max_len, max(hp.window_sizes))
    hp.validate()
    enc = lambda us: [encode(u.vector, vocab, hp.max_len, u.label, u.truth_lines) for u in us]
    return fit(enc(train_units), enc(val_units), vocab, hp, on_epoch)


def encode_units(params: ModelParams, units: Sequence[Unit]):
    return [encode(u.vector, params.vocab, params.hp.max_len, u.label, u.truth_lines) for u in units]
