"""Corpus collection: local scanning, manifests, and synthetic template corpora."""
from __future__ import annotations

import json
import math
import os
import random
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .patterns import PatternKind, matches_pattern

BUGGY = "buggy"
CLEAN = "clean"
LABELS = (BUGGY, CLEAN)
SPLITS = ("train", "val", "test")
SOURCE_SUFFIXES = (".c", ".h")


@dataclass(frozen=True)
class CorpusEntry:
    path: str
    pattern: PatternKind
    label: str = CLEAN
    truth_lines: tuple[int, ...] = ()
    split: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if bool(self.truth_lines) != (self.label == BUGGY):
            raise ValueError(f"{self.path}: truth_lines must be nonempty exactly when buggy")
        if self.split is not None and self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        object.__setattr__(self, "pattern", PatternKind.parse(self.pattern))
        object.__setattr__(self, "truth_lines", tuple(sorted(set(self.truth_lines))))

    @property
    def buggy(self) -> bool:
        return self.label == BUGGY

    def to_json(self) -> dict:
        return {"path": self.path, "label": self.label, "pattern": self.pattern.value,
                "truth_lines": list(self.truth_lines), "split": self.split}

    @classmethod
    def from_json(cls, obj: dict) -> CorpusEntry:
        return cls(path=obj["path"], pattern=PatternKind.parse(obj["pattern"]),
                   label=obj["label"], truth_lines=tuple(obj.get("truth_lines", ())),
                   split=obj.get("split"))


@dataclass(frozen=True)
class CorpusStats:
    file_count: int
    total_loc: int
    per_split: dict = field(default_factory=dict)
    buggy_fraction: float = 0.0

    def __str__(self) -> str:
        splits = ", ".join(f"{k}={v}" for k, v in self.per_split.items())
        return (f"files={self.file_count} loc={self.total_loc} [{splits}] "
                f"buggy_fraction={self.buggy_fraction:.3f}")


class ManifestError(Exception):
    pass


class Manifest:
    """Ordered list of corpus entries; relative paths resolve against ``root``."""

    def __init__(self, entries: Iterable[CorpusEntry], root: str | os.PathLike | None = None):
        self.entries: list[CorpusEntry] = list(entries)
        self.root = Path(root) if root is not None else None

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[CorpusEntry]:
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, Manifest) and self.entries == other.entries

    def resolve(self, entry: CorpusEntry) -> Path:
        p = Path(entry.path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p

    def split(self, name: str) -> list[CorpusEntry]:
        return [e for e in self.entries if e.split == name]

    def stats(self) -> CorpusStats:
        per_split: dict[str, int] = {}
        loc = 0
        for e in self.entries:
            key = e.split or "unassigned"
            per_split[key] = per_split.get(key, 0) + 1
            p = self.resolve(e)
            if p.exists():
                loc += count_lines(p.read_text(encoding="utf-8", errors="replace"))
        n = len(self.entries)
        buggy = sum(e.buggy for e in self.entries)
        return CorpusStats(n, loc, per_split, buggy / n if n else 0.0)

    def dumps(self) -> str:
        return "".join(json.dumps(e.to_json(), ensure_ascii=False) + "\n" for e in self.entries)

    def write(self, path: str | os.PathLike) -> None:
        """Write JSONL atomically (temp file in the same directory, then rename)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(self.dumps())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def read(cls, path: str | os.PathLike) -> Manifest:
        path = Path(path)
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    entries.append(CorpusEntry.from_json(json.loads(line)))
                except (ValueError, KeyError, TypeError) as exc:
                    raise ManifestError(f"{path}:{lineno}: {exc}") from exc
        return cls(entries, path.parent)


def count_lines(text: str) -> int:
    if not text:
        return 0
    return text.count("\n") + (0 if text.endswith("\n") else 1)


def scan_corpus(root: str | os.PathLike, pattern: PatternKind | str) -> tuple[list[Path], CorpusStats]:
    pattern = PatternKind.parse(pattern)
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} is not a readable directory")
    if not os.access(root, os.R_OK | os.X_OK):
        raise PermissionError(f"corpus root {root} is not readable")
    found: list[Path] = []
    loc = 0

    def onerror(exc: OSError):
        raise exc

    for dirpath, dirnames, filenames in os.walk(root, onerror=onerror):
        dirnames.sort()
        for name in sorted(filenames):
            if not name.endswith(SOURCE_SUFFIXES):
                continue
            p = Path(dirpath) / name
            text = p.read_text(encoding="utf-8", errors="replace")
            if matches_pattern(text, pattern):
                found.append(p)
                loc += count_lines(text)
    stats = CorpusStats(len(found), loc, {"unassigned": len(found)} if found else {}, 0.0)
    return found, stats


def allocate(n: int, fractions: Sequence[float]) -> list[int]:
    """Split ``n`` items by fractions with largest-remainder rounding."""
    raw = [f * n for f in fractions]
    counts = [math.floor(r + 1e-9) for r in raw]
    rest = n - sum(counts)
    order = sorted(range(len(fractions)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:max(rest, 0)]:
        counts[i] += 1
    return counts


def build_manifest(entries: Sequence[CorpusEntry], split_fractions=(0.8, 0.2, 0.0),
                   seed: int = 42, root: str | os.PathLike | None = None) -> Manifest:
    if not entries:
        raise ValueError("cannot build a manifest from zero entries")
    fr = tuple(float(f) for f in split_fractions)
    if len(fr) != 3 or any(f < 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must be 3 nonnegative numbers summing to 1, got {fr}")
    rng = random.Random(seed)
    assigned: list[str | None] = [None] * len(entries)
    for label in LABELS:
        idx = [i for i, e in enumerate(entries) if e.label == label]
        rng.shuffle(idx)
        counts = allocate(len(idx), fr)
        pos = 0
        for split, c in zip(SPLITS, counts):
            for i in idx[pos:pos + c]:
                assigned[i] = split
            pos += c
    return Manifest([replace(e, split=s) for e, s in zip(entries, assigned)], root)


# ---------------------------------------------------------------------------
# synthetic templates

class GeneratorError(RuntimeError):
    pass


NAME_POOL = ("i", "j", "k", "ii", "jj", "kk", "r", "c", "m", "p", "q", "s", "u", "v", "w",
             "x", "y", "z", "idx", "row", "col", "it", "jt", "kt", "t1", "t2", "n1", "n2")
ARRAY_POOL = ("a", "b", "c", "A", "B", "C", "grid", "mat", "out", "src", "dst", "buf", "u",
              "v", "w", "arr", "data", "res", "x", "y", "temp", "field")


@dataclass(frozen=True)
class SynthSpec:
    n_files: int
    pattern: PatternKind = PatternKind.OMP_PRIVATE
    rng_seed: int = 0
    depth: tuple[int, int] = (1, 3)
    fillers: tuple[int, int] = (0, 8)
    ident_pool: int = 12

    def __post_init__(self):
        object.__setattr__(self, "pattern", PatternKind.parse(self.pattern))
        for name in ("depth", "fillers"):
            v = getattr(self, name)
            if isinstance(v, int):
                object.__setattr__(self, name, (v, v))
        if self.n_files < 1:
            raise ValueError("n_files must be >= 1")
        lo, hi = self.depth
        if not 1 <= lo <= hi <= 3:
            raise ValueError(f"depth range must lie in 1..3, got {self.depth}")
        lo, hi = self.fillers
        if not 0 <= lo <= hi <= 8:
            raise ValueError(f"filler range must lie in 0..8, got {self.fillers}")
        if not 4 <= self.ident_pool <= len(ARRAY_POOL):
            raise ValueError(f"ident_pool must lie in 4..{len(ARRAY_POOL)}")

    @classmethod
    def from_mapping(cls, cfg: dict) -> SynthSpec:
        def rng_pair(v):
            if isinstance(v, str):
                parts = [int(p) for p in v.replace("-", ",").split(",") if p.strip()]
                return (parts[0], parts[-1])
            return v

        kwargs = {}
        for key, conv in (("n_files", int), ("pattern", PatternKind.parse),
                          ("rng_seed", int), ("seed", int), ("depth", rng_pair),
                          ("fillers", rng_pair), ("ident_pool", int)):
            if key in cfg:
                kwargs["rng_seed" if key == "seed" else key] = conv(cfg[key])
        return cls(**kwargs)


class _Names:
    """Draws distinct identifiers for one file."""

    def __init__(self, rng: random.Random, pool: int):
        self.rng = rng
        self.pool = pool
        self.used: set[str] = set()

    def take(self, candidates: Sequence[str], limit: int | None = None) -> str:
        limit = limit or self.pool
        options = [c for c in candidates[:max(limit, 3)] if c not in self.used]
        if not options:
            options = [c for c in candidates if c not in self.used]
        name = self.rng.choice(options)
        self.used.add(name)
        return name


_SCALAR_TYPES = ("int", "double", "float", "long")


def _filler_pool(rng: random.Random, names: _Names) -> tuple[list[str], list[str]]:
    """Distractor declarations and filler statements that use them."""
    counter = names.take(("count", "total", "acc", "nsteps", "iters", "flag", "status"), 7)
    scale = names.take(("scale", "alpha", "beta", "factor", "eps", "gamma", "omega"), 7)
    decls = [f"int {counter} = 0;", f"double {scale} = {rng.choice(['0.5', '1.5', '2.0', '0.25'])};"]
    stmts = [
        f"{counter} = {counter} + 1;",
        f"{counter}++;",
        f"{scale} = {scale} * 2.0;",
        f"{scale} = {scale} + {counter};",
        f"{counter} += {rng.randint(2, 9)};",
        f'printf("%d\\n", {counter});',
        f'printf("%f\\n", {scale});',
        f"if ({counter} > {rng.randint(10, 99)}) {counter} = 0;",
        f"{scale} = {scale} / ({counter} + 1);",
    ]
    return decls, stmts


def _headers(rng: random.Random, pattern: PatternKind) -> list[str]:
    heads = []
    if pattern is PatternKind.PTHREAD_MUTEX:
        heads.append("#include <pthread.h>")
    elif rng.random() < 0.6:
        heads.append("#include <omp.h>")
    if rng.random() < 0.7:
        heads.append("#include <stdio.h>")
    if rng.random() < 0.3:
        heads.append("#include <stdlib.h>")
    return heads


class _Writer:
    def __init__(self):
        self.lines: list[str] = []

    def add(self, text: str, indent: int = 0) -> None:
        self.lines.append("    " * indent + text if text else "")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _fillers(rng: random.Random, spec: SynthSpec, stmts: list[str]) -> list[str]:
    return [rng.choice(stmts) for _ in range(rng.randint(*spec.fillers))]


def _split_fillers(rng: random.Random, items: list[str]) -> tuple[list[str], list[str]]:
    cut = rng.randint(0, len(items))
    return items[:cut], items[cut:]


def _gen_omp_private(rng: random.Random, spec: SynthSpec) -> str:
    names = _Names(rng, spec.ident_pool)
    depth = rng.randint(*spec.depth)
    w = _Writer()
    for h in _headers(rng, spec.pattern):
        w.add(h)
    if w.lines:
        w.add("")
    size = rng.choice(["100", "64", "128", "256", "50", "1000"]) if depth > 1 else \
        rng.choice(["1000", "4096", "100", "512"])
    etype = rng.choice(["int", "double", "float"])
    decl_extra, fill = _filler_pool(rng, names)
    before, after = _split_fillers(rng, _fillers(rng, spec, fill))
    use_fillers = bool(before or after)

    if depth >= 2:
        arrays = [names.take(ARRAY_POOL) for _ in range(rng.randint(1, 2))]
        idx = [names.take(NAME_POOL) for _ in range(depth)]
        dims = "".join(f"[{size}]" for _ in range(2 if depth == 2 else 3 if rng.random() < 0.3 else 2))
        for arr in arrays:
            w.add(f"{etype} {arr}{dims};")
        fname, params, ret = _signature(rng, names)
        w.add(f"{ret} {fname}({params})")
        w.add("{")
        _emit_prologue(rng, w, lambda: _emit_index_decls(rng, w, idx, []),
                       decl_extra if use_fillers else [], before)
        w.add(_pragma(rng, "parallel for", idx[1:], arrays), 1)
        bound = "n" if params == "int n" and rng.random() < 0.5 else size
        for level, v in enumerate(idx):
            brace = rng.random() < 0.25 and level == depth - 1
            w.add(f"for ({v} = 0; {v} < {bound}; {v}++){' {' if brace else ''}", 1 + level)
            if brace:
                _emit_body(rng, w, arrays, idx, dims, 2 + level)
                w.add("}", 1 + level)
        if not brace:
            _emit_body(rng, w, arrays, idx, dims, 1 + depth)
    else:
        fname, params, ret = _signature(rng, names)
        if rng.random() < 0.5:
            # private temporary inside a parallel loop
            x, y = names.take(ARRAY_POOL), names.take(ARRAY_POOL)
            i, t = names.take(NAME_POOL), names.take(("t", "tmp", "val", "acc", "h", "d", "e"), 7)
            w.add(f"{etype} {x}[{size}], {y}[{size}];")
            w.add(f"{ret} {fname}({params})")
            w.add("{")
            def kernel_decls():
                if rng.random() < 0.5:
                    w.add(f"int {i};", 1)
                    w.add(f"{etype} {t};", 1)
                else:
                    w.add(f"int {i}; {etype} {t};", 1)
            _emit_prologue(rng, w, kernel_decls, decl_extra if use_fillers else [], before)
            w.add(_pragma(rng, "parallel for", [t], [x, y]), 1)
            w.add(f"for ({i} = 0; {i} < {size}; {i}++) {{", 1)
            op = rng.choice(["*", "+", "-"])
            w.add(f"{t} = {x}[{i}] {op} {rng.choice(['2', '3', '0.5', '1.5'])};", 2)
            if rng.random() < 0.5:
                w.add(f"{t} = {t} * {t};", 2)
            w.add(f"{y}[{i}] = {t} + {x}[{i}];", 2)
            w.add("}", 1)
        else:
            # per-thread id inside a parallel region
            part = names.take(ARRAY_POOL)
            tid = names.take(("tid", "id", "me", "rank", "th", "thread_id", "myid"), 7)
            w.add(f"{etype} {part}[{rng.choice(['16', '32', '64', '8'])}];")
            w.add(f"{ret} {fname}({params})")
            w.add("{")
            _emit_prologue(rng, w, lambda: w.add(f"int {tid};", 1),
                           decl_extra if use_fillers else [], before)
            w.add(_pragma(rng, "parallel", [tid], [part]), 1)
            w.add("{", 1)
            w.add(f"{tid} = omp_get_thread_num();", 2)
            w.add(f"{part}[{tid}] = {tid} * {rng.randint(2, 9)};", 2)
            if rng.random() < 0.5:
                w.add(f'printf("thread %d\\n", {tid});', 2)
            w.add("}", 1)
    for s in after:
        w.add(s, 1)
    if ret == "int":
        w.add("return 0;", 1)
    w.add("}")
    return w.text()


def _emit_prologue(rng: random.Random, w: _Writer, kernel_decls, distractors: list[str],
                   fillers: list[str]) -> None:
    """Function prologue.  Usually the kernel's own declarations sit directly
    above the pragma; otherwise they lead and the distractors follow."""
    if rng.random() < 0.75:
        for d in distractors:
            w.add(d, 1)
        for s in fillers:
            w.add(s, 1)
        kernel_decls()
    else:
        kernel_decls()
        for d in distractors:
            w.add(d, 1)
        for s in fillers:
            w.add(s, 1)


def _signature(rng: random.Random, names: _Names) -> tuple[str, str, str]:
    if rng.random() < 0.5:
        return "main", "", "int"
    fname = names.take(("kernel", "compute", "update", "init", "smooth", "sweep", "step", "fill"), 8)
    params = rng.choice(["", "int n", "void"])
    return fname, params, rng.choice(["void", "int"])


def _emit_index_decls(rng: random.Random, w: _Writer, idx: list[str], extra: list[str]) -> None:
    style = rng.random()
    if style < 0.6:
        w.add(f"int {', '.join(idx)};", 1)
    elif style < 0.8:
        for v in idx:
            w.add(f"int {v};", 1)
    else:
        w.add(f"int {idx[0]};", 1)
        w.add(f"int {', '.join(idx[1:])};", 1)
    for d in extra:
        w.add(d, 1)


def _pragma(rng: random.Random, directive: str, privates: list[str], shared: list[str]) -> str:
    clauses = [f"private({', '.join(privates) if rng.random() < 0.5 else ','.join(privates)})"]
    if rng.random() < 0.3:
        clauses.append(f"shared({', '.join(shared)})")
    if directive == "parallel for" and rng.random() < 0.25:
        clauses.append(rng.choice(["schedule(static)", "schedule(dynamic)"]))
    if rng.random() < 0.3:
        clauses.reverse()
    return f"#pragma omp {directive} " + " ".join(clauses)


def _emit_body(rng: random.Random, w: _Writer, arrays: list[str], idx: list[str], dims: str,
               indent: int) -> None:
    a = arrays[0]
    b = arrays[-1]
    ndim = dims.count("[")
    sub = "".join(f"[{v}]" for v in idx[:ndim])
    if len(idx) > ndim:
        # depth 3 over 2-d arrays: the innermost index folds into a reduction
        k = idx[-1]
        w.add(f"{a}[{idx[0]}][{idx[1]}] = {a}[{idx[0]}][{idx[1]}] + {b}[{idx[0]}][{k}];", indent)
        return
    rhs = rng.choice([f"{a}{sub} + 1", f"{b}{sub} * 2", f"{a}{sub} + {b}{sub}",
                      f"{idx[0]} + {idx[-1]}"])
    w.add(f"{a}{sub} = {rhs};", indent)
    if rng.random() < 0.3:
        w.add(f"{b}{sub} = {a}{sub} - 1;", indent)


def _gen_omp_critical(rng: random.Random, spec: SynthSpec) -> str:
    names = _Names(rng, spec.ident_pool)
    depth = rng.randint(*spec.depth)
    w = _Writer()
    for h in _headers(rng, spec.pattern):
        w.add(h)
    if w.lines:
        w.add("")
    x = names.take(ARRAY_POOL)
    acc = names.take(("sum", "total", "result", "acc", "best", "hist_total"), 6)
    cnt = names.take(("count", "hits", "nvals", "seen", "updates"), 5)
    size = rng.choice(["100", "1000", "256", "64"])
    etype = rng.choice(["double", "int", "float"])
    w.add(f"{etype} {x}[{size}];")
    w.add(f"{etype} {acc} = 0;")
    w.add(f"int {cnt} = 0;")
    decl_extra, fill = _filler_pool(rng, names)
    before, after = _split_fillers(rng, _fillers(rng, spec, fill))
    fname, params, ret = _signature(rng, names)
    w.add(f"{ret} {fname}({params})")
    w.add("{")
    idx = [names.take(NAME_POOL) for _ in range(depth)]
    w.add(f"int {', '.join(idx)};", 1)
    v = names.take(("v", "val", "tmp", "local", "delta"), 5)
    for d in (decl_extra if before or after else []):
        w.add(d, 1)
    for s in before:
        w.add(s, 1)
    # inner indices are shared by default and would race
    w.add("#pragma omp parallel for" + (f" private({', '.join(idx[1:])})" if depth > 1 else ""), 1)
    for level, ix in enumerate(idx):
        w.add(f"for ({ix} = 0; {ix} < {size}; {ix}++) {{", 1 + level)
    ind = 1 + depth
    w.add(f"{etype} {v} = {x}[{idx[-1]}] * {rng.choice(['2', '3', '0.5'])};", ind)
    crit = "#pragma omp critical" + (f" ({names.take(('update', 'lock', 'acc_lock'), 3)})"
                                     if rng.random() < 0.2 else "")
    w.add(crit, ind)
    if rng.random() < 0.3:
        w.add(f"{acc} += {v};", ind)
    else:
        w.add("{", ind)
        w.add(f"{acc} = {acc} + {v};", ind + 1)
        if rng.random() < 0.6:
            w.add(f"{cnt}++;", ind + 1)
        w.add("}", ind)
    for level in reversed(range(depth)):
        w.add("}", 1 + level)
    for s in after:
        w.add(s, 1)
    if ret == "int":
        w.add("return 0;", 1)
    w.add("}")
    return w.text()


def _gen_pthread(rng: random.Random, spec: SynthSpec) -> str:
    names = _Names(rng, spec.ident_pool)
    depth = rng.randint(*spec.depth)
    w = _Writer()
    for h in _headers(rng, spec.pattern):
        w.add(h)
    w.add("")
    nthreads = rng.choice(["4", "8", "2", "16"])
    counter = names.take(("counter", "shared_sum", "total", "balance", "hits"), 5)
    lock = names.take(("lock", "mtx", "mutex", "m", "guard"), 5)
    w.add(f"int {counter} = 0;")
    w.add(f"pthread_mutex_t {lock};")
    decl_extra, fill = _filler_pool(rng, names)
    before, after = _split_fillers(rng, _fillers(rng, spec, fill))
    for d in decl_extra:
        w.add(d)
    worker = names.take(("worker", "run", "thread_func", "task", "body"), 5)
    w.add("")
    w.add(f"void *{worker}(void *arg)")
    w.add("{")
    idx = [names.take(NAME_POOL) for _ in range(depth)]
    w.add(f"int {', '.join(idx)};", 1)
    for s in before:
        w.add(s, 1)
    for level, ix in enumerate(idx):
        w.add(f"for ({ix} = 0; {ix} < {rng.choice(['1000', '100', '10'])}; {ix}++) {{", 1 + level)
    ind = 1 + depth
    w.add(f"pthread_mutex_lock(&{lock});", ind)
    w.add(f"{counter} = {counter} + 1;", ind)
    if rng.random() < 0.5:
        w.add(f"{counter} = {counter} * 2 - {counter};", ind)
    w.add(f"pthread_mutex_unlock(&{lock});", ind)
    for level in reversed(range(depth)):
        w.add("}", 1 + level)
    w.add("return NULL;", 1)
    w.add("}")
    w.add("")
    w.add("int main()")
    w.add("{")
    th = names.take(("th", "threads", "tids", "workers", "pool"), 5)
    it = names.take(NAME_POOL)
    w.add(f"pthread_t {th}[{nthreads}];", 1)
    w.add(f"int {it};", 1)
    w.add(f"pthread_mutex_init(&{lock}, NULL);", 1)
    w.add(f"for ({it} = 0; {it} < {nthreads}; {it}++)", 1)
    w.add(f"pthread_create(&{th}[{it}], NULL, {worker}, NULL);", 2)
    w.add(f"for ({it} = 0; {it} < {nthreads}; {it}++)", 1)
    w.add(f"pthread_join({th}[{it}], NULL);", 2)
    for s in after:
        w.add(s, 1)
    w.add(f"pthread_mutex_destroy(&{lock});", 1)
    w.add(f'printf("%d\\n", {counter});', 1)
    w.add("return 0;", 1)
    w.add("}")
    return w.text()


_GENERATORS = {
    PatternKind.OMP_PRIVATE: _gen_omp_private,
    PatternKind.OMP_CRITICAL: _gen_omp_critical,
    PatternKind.PTHREAD_MUTEX: _gen_pthread,
}


def generate_source(rng: random.Random, spec: SynthSpec) -> str:
    return _GENERATORS[spec.pattern](rng, spec)


def synth_corpus(spec: SynthSpec, out_dir: str | os.PathLike) -> list[CorpusEntry]:
    """Write ``spec.n_files`` clean files into ``out_dir`` (paths relative to it)."""
    from .frontend import NodeClass, LexError, ParseError, lex, parse

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(spec.rng_seed)
    prefix = spec.pattern.value.replace("-", "_")
    entries = []
    for n in range(spec.n_files):
        source = generate_source(rng, spec)
        try:
            root = parse(lex(source))
        except (LexError, ParseError) as exc:
            raise GeneratorError(f"generated file {n} does not parse: {exc}\n{source}") from exc
        if root.find(NodeClass.Unknown):
            raise GeneratorError(f"generated file {n} contains unsupported constructs\n{source}")
        name = f"{prefix}_{n:05d}.c"
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(source)
        entries.append(CorpusEntry(name, spec.pattern, CLEAN))
    return entries
