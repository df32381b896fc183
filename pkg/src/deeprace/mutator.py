"""Seed data races by deleting one synchronization primitive per file.

Every mutator returns ``None`` when the file has no usable site.  Deleted
lines are removed outright, so ``truth_lines`` are numbered against the
mutated text.
"""
from __future__ import annotations

import bisect
import math
import random
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from .corpus import BUGGY, SPLITS, CorpusEntry, Manifest, allocate
from .frontend import AstNode, LexToken, NodeClass, lex, parse
from .frontend.ast import OMP_DIRECTIVES
from .patterns import PatternKind

__all__ = [
    "MutationResult", "QuotaError", "mutate", "mutate_omp_private", "mutate_omp_critical",
    "mutate_pthread_mutex", "apply_balanced_mutation", "mutant_path",
]


@dataclass(frozen=True)
class MutationResult:
    mutated_source: str
    removed_spans: tuple[tuple[int, int], ...]  # (start_line, end_line) in the original
    truth_lines: frozenset[int]
    pattern: PatternKind


class QuotaError(RuntimeError):
    pass


class _Edit:
    """Character-range deletions plus original->mutated position mapping."""

    def __init__(self, source: str, ranges: list[tuple[int, int]]):
        self.source = source
        self.ranges = sorted(ranges)
        parts, pos = [], 0
        for a, b in self.ranges:
            parts.append(source[pos:a])
            pos = b
        parts.append(source[pos:])
        self.text = "".join(parts)
        self._starts = [a for a, _ in self.ranges]
        self._cum = [0]
        for a, b in self.ranges:
            self._cum.append(self._cum[-1] + (b - a))
        self._newlines = [i for i, ch in enumerate(self.text) if ch == "\n"]

    def offset(self, orig: int) -> int:
        k = bisect.bisect_right(self._starts, orig)
        return orig - self._cum[k]

    def line_of(self, orig_offset: int) -> int:
        return bisect.bisect_right(self._newlines, self.offset(orig_offset) - 1) + 1

    def spans(self) -> tuple[tuple[int, int], ...]:
        out = []
        for a, b in self.ranges:
            first = self.source.count("\n", 0, a) + 1
            last = self.source.count("\n", 0, max(a, b - 1)) + 1
            out.append((first, last))
        return tuple(out)


def _line_starts(source: str) -> list[int]:
    starts = [0]
    starts.extend(i + 1 for i, ch in enumerate(source) if ch == "\n")
    return starts


def _whole_lines(source: str, first: int, last: int) -> tuple[int, int]:
    """Character range covering physical lines first..last including the newline."""
    starts = _line_starts(source)
    a = starts[first - 1]
    b = starts[last] if last < len(starts) else len(source)
    return a, b


def _parse(source: str) -> tuple[list[LexToken], AstNode]:
    tokens = lex(source)
    return tokens, parse(tokens)


def _directives(root: AstNode, kind: NodeClass | None = None) -> list[AstNode]:
    nodes = [n for n in root.walk() if n.kind in OMP_DIRECTIVES and (kind is None or n.kind is kind)]
    return sorted(nodes, key=lambda n: n.tok_start)


def _block(directive: AstNode) -> AstNode | None:
    kids = [c for c in directive.children if not c.kind.name.endswith("Clause")]
    return kids[-1] if kids else None


def _enclosing_function(root: AstNode, node: AstNode) -> AstNode | None:
    for fn in root.children:
        if fn.kind is NodeClass.FuncDef and fn.tok_start <= node.tok_start < fn.tok_end:
            return fn
    return None


_PRIVATE_RE = re.compile(r"\bprivate\s*\(")


def _clause_range(source: str, tok: LexToken) -> tuple[int, int] | None:
    """Character range of the first ``private(...)`` clause inside a pragma."""
    m = _PRIVATE_RE.search(source, tok.offset, tok.end)
    if m is None:
        return None
    depth, i = 1, m.end()
    while i < tok.end and depth:
        if source[i] == "(":
            depth += 1
        elif source[i] == ")":
            depth -= 1
        i += 1
    if depth:
        return None
    a, b = m.start(), i
    left = a
    while left > tok.offset and source[left - 1] in " \t":
        left -= 1
    if left > tok.offset and source[left - 1] == ",":
        # "..., private(x)" -> drop the separator with the clause
        left -= 1
        while left > tok.offset and source[left - 1] in " \t":
            left -= 1
        return left, b
    right = b
    while right < tok.end and source[right] in " \t":
        right += 1
    if right < tok.end and source[right] == ",":
        right += 1
        while right < tok.end and source[right] in " \t":
            right += 1
        return a, right
    return left, b


def mutate_omp_private(source: str) -> MutationResult | None:
    tokens, root = _parse(source)
    for directive in _directives(root):
        clauses = [c for c in directive.children if c.kind is NodeClass.OmpPrivateClause]
        if not clauses:
            continue
        tok = tokens[directive.tok_start]
        span = _clause_range(source, tok)
        if span is None:
            continue
        variables = {v.name for v in clauses[0].children if v.name}
        variables = {re.match(r"[A-Za-z_]\w*", v).group() for v in variables
                     if re.match(r"[A-Za-z_]\w*", v)}
        edit = _Edit(source, [span])
        truth: set[int] = {directive.line}
        fn = _enclosing_function(root, directive)
        scopes = [fn] if fn is not None else []
        for var in variables:
            decl = None
            for scope in scopes:
                for n in scope.walk():
                    if n.kind is NodeClass.Decl and n.name == var and n.tok_start < directive.tok_start:
                        decl = n
            if decl is None:
                for n in root.children:
                    if n.kind is NodeClass.Decl and n.name == var and n.tok_start < directive.tok_start:
                        decl = n
            if decl is not None:
                truth.add(decl.line)
        block = _block(directive)
        if block is not None:
            for n in block.walk():
                if n.kind is NodeClass.ID and n.name in variables:
                    truth.add(n.line)
                elif n.kind is NodeClass.Decl and n.name in variables:
                    truth.add(n.line)
        # a one-line clause removal never renumbers lines
        mapped = frozenset(edit.line_of(_line_starts(source)[ln - 1]) for ln in truth)
        return MutationResult(edit.text, edit.spans(), mapped, PatternKind.OMP_PRIVATE)
    return None


def mutate_omp_critical(source: str) -> MutationResult | None:
    tokens, root = _parse(source)
    starts = _line_starts(source)
    for directive in _directives(root, NodeClass.OmpCritical):
        block = _block(directive)
        if block is None or block.tok_start < 0:
            continue
        tok = tokens[directive.tok_start]
        edit = _Edit(source, [_whole_lines(source, tok.line, tok.end_line)])
        first = edit.line_of(starts[block.line - 1])
        last = edit.line_of(starts[block.end_line - 1])
        truth = frozenset(range(first, last + 1))
        return MutationResult(edit.text, edit.spans(), truth, PatternKind.OMP_CRITICAL)
    return None


def _statement_calls(fn: AstNode, tokens: list[LexToken], kind: NodeClass) -> list[AstNode]:
    """Lock/unlock calls that form a whole expression statement inside a block."""
    out = []
    stack: list[AstNode] = [fn]
    while stack:
        node = stack.pop()
        if node.kind is NodeClass.Compound:
            for child in node.children:
                if child.kind is kind and child.tok_end < len(tokens) and \
                        tokens[child.tok_end].text == ";":
                    out.append(child)
        stack.extend(node.children)
    return sorted(out, key=lambda n: n.tok_start)


def _statement_range(source: str, tokens: list[LexToken], call: AstNode) -> tuple[int, int]:
    """Delete whole lines when the statement owns them, else just its characters."""
    first, semi = tokens[call.tok_start], tokens[call.tok_end]
    owned = all(call.tok_start <= i <= call.tok_end
                for i, t in enumerate(tokens) if first.line <= t.line <= semi.line)
    if owned:
        return _whole_lines(source, first.line, semi.line)
    b = semi.end
    while b < len(source) and source[b] in " \t":
        b += 1
    return first.offset, b


def mutate_pthread_mutex(source: str) -> MutationResult | None:
    tokens, root = _parse(source)
    candidates = []
    for fn in root.children:
        if fn.kind is not NodeClass.FuncDef:
            continue
        locks = _statement_calls(fn, tokens, NodeClass.PthreadLockCall)
        unlocks = _statement_calls(fn, tokens, NodeClass.PthreadUnlockCall)
        for lock in locks:
            match = next((u for u in unlocks if u.tok_start > lock.tok_end and u.name == lock.name),
                         None)
            if match is not None:
                candidates.append((lock, match))
    candidates.sort(key=lambda pair: pair[0].tok_start)
    for lock, unlock in candidates:
        inner = tokens[lock.tok_end + 1:unlock.tok_start]
        if not inner:
            continue
        edit = _Edit(source, [_statement_range(source, tokens, lock),
                              _statement_range(source, tokens, unlock)])
        truth = frozenset(edit.line_of(t.offset) for t in inner)
        return MutationResult(edit.text, edit.spans(), truth, PatternKind.PTHREAD_MUTEX)
    return None


MUTATORS: dict[PatternKind, Callable[[str], MutationResult | None]] = {
    PatternKind.OMP_PRIVATE: mutate_omp_private,
    PatternKind.OMP_CRITICAL: mutate_omp_critical,
    PatternKind.PTHREAD_MUTEX: mutate_pthread_mutex,
}


def mutate(source: str, pattern: PatternKind | str) -> MutationResult | None:
    return MUTATORS[PatternKind.parse(pattern)](source)


def mutant_path(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".mut.c")


def apply_balanced_mutation(manifest: Manifest, ratio: float = 0.5, seed: int = 42) -> Manifest:
    """Turn ``floor(ratio * n)`` clean entries into buggy mutants, stratified by split.

    Mutants are written as ``<stem>.mut.c`` next to their originals and the
    selected entries are relabelled in place of the originals.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    if any(e.label != "clean" for e in manifest):
        raise ValueError("apply_balanced_mutation expects an all-clean manifest")
    n = len(manifest)
    quota = math.floor(ratio * n + 1e-9)
    groups = [[i for i, e in enumerate(manifest) if e.split == s] for s in SPLITS]
    groups.append([i for i, e in enumerate(manifest) if e.split is None])
    sizes = [len(g) for g in groups]
    per_group = allocate(quota, [s / n for s in sizes]) if n else [0] * len(groups)
    rng = random.Random(seed)
    entries = list(manifest.entries)
    shortfall = []
    for group, want in zip(groups, per_group):
        order = list(group)
        rng.shuffle(order)
        done = 0
        for i in order:
            if done == want:
                break
            entry = entries[i]
            src_path = manifest.resolve(entry)
            source = src_path.read_text(encoding="utf-8")
            result = mutate(source, entry.pattern)
            if result is None:
                continue
            out = mutant_path(src_path)
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(result.mutated_source)
            rel = str(mutant_path(entry.path))
            entries[i] = replace(entry, path=rel, label=BUGGY,
                                 truth_lines=tuple(sorted(result.truth_lines)))
            done += 1
        if done < want:
            shortfall.append(want - done)
    if shortfall:
        raise QuotaError(f"mutation quota unreachable: {sum(shortfall)} of {quota} entries "
                         f"have no mutation site")
    return Manifest(entries, manifest.root)
