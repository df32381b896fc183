"""Token vectors, vocabulary and fixed-length integer encoding."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..patterns import PatternKind
from .ast import AstNode, NodeClass

log = logging.getLogger(__name__)

PAD = 0


@dataclass(frozen=True)
class TokenVector:
    """DFS-preorder node classes of one analysis unit, each with its source line."""

    items: tuple[tuple[str, int], ...]
    unit_name: str
    first_line: int = 1
    last_line: int = 1

    def __len__(self) -> int:
        return len(self.items)

    @property
    def classes(self) -> list[str]:
        return [c for c, _ in self.items]

    @property
    def lines(self) -> list[int]:
        return [ln for _, ln in self.items]

    @property
    def n_lines(self) -> int:
        return self.last_line - self.first_line + 1


def preorder(root: AstNode) -> list[tuple[str, int]]:
    return [(n.kind.value, n.line) for n in root.walk()]


def extract_units(root: AstNode, pattern: PatternKind | str) -> list[TokenVector]:
    pattern = PatternKind.parse(pattern)
    if pattern.file_level:
        return [TokenVector(tuple(preorder(root)), "<file>", 1, max(root.end_line, 1))]
    units = []
    for node in root.children:
        if node.kind is NodeClass.FuncDef:
            units.append(TokenVector(tuple(preorder(node)), node.name or "<anon>",
                                     node.line, node.end_line))
    return units


@dataclass(frozen=True)
class Vocabulary:
    """Node-class name -> id.  0 is padding, ``unk`` (= V + 1) is the unknown id."""

    classes: tuple[str, ...]
    ids: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("vocabulary classes must be unique")
        object.__setattr__(self, "ids", {c: i + 1 for i, c in enumerate(self.classes)})

    @property
    def size(self) -> int:
        return len(self.classes)

    @property
    def unk(self) -> int:
        return len(self.classes) + 1

    @property
    def n_rows(self) -> int:
        """Rows of the embedding table: classes plus PAD and UNK."""
        return len(self.classes) + 2

    def id_of(self, cls: str) -> int:
        return self.ids.get(cls, self.unk)

    def decode(self, ids: Iterable[int]) -> list[str | None]:
        """Inverse mapping; PAD and UNK come back as ``None``."""
        out: list[str | None] = []
        for i in ids:
            i = int(i)
            out.append(self.classes[i - 1] if 1 <= i <= len(self.classes) else None)
        return out


def build_vocab(vectors: Sequence[TokenVector]) -> Vocabulary:
    if not vectors:
        raise ValueError("cannot build a vocabulary from zero vectors")
    seen: dict[str, None] = {}
    for v in vectors:
        for cls, _ in v.items:
            seen.setdefault(cls, None)
    return Vocabulary(tuple(seen))


@dataclass
class EncodedSample:
    ids: np.ndarray
    mask: np.ndarray
    line_map: np.ndarray
    label: int | None = None  # 1 buggy, 0 clean
    truth_lines: frozenset = frozenset()
    unit: TokenVector | None = None
    truncated: bool = False

    @property
    def length(self) -> int:
        return int(self.mask.sum())


def encode(vector: TokenVector, vocab: Vocabulary, max_len: int, label: int | None = None,
           truth_lines: Iterable[int] = ()) -> EncodedSample:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    items = vector.items
    truncated = len(items) > max_len
    if truncated:
        log.warning("unit %s: %d tokens truncated to %d", vector.unit_name, len(items), max_len)
        items = items[:max_len]
    ids = np.zeros(max_len, dtype=np.int64)
    mask = np.zeros(max_len, dtype=np.int8)
    line_map = np.zeros(max_len, dtype=np.int64)
    for i, (cls, line) in enumerate(items):
        ids[i] = vocab.id_of(cls)
        mask[i] = 1
        line_map[i] = line
    return EncodedSample(ids, mask, line_map, label, frozenset(truth_lines), vector, truncated)
