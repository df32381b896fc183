from __future__ import annotations

import re
from enum import Enum


class PatternKind(str, Enum):
    OMP_PRIVATE = "omp-private"
    OMP_CRITICAL = "omp-critical"
    PTHREAD_MUTEX = "pthread-mutex"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str | PatternKind) -> PatternKind:
        if isinstance(text, PatternKind):
            return text
        key = text.strip().lower().replace("_", "-")
        aliases = {"ompprivate": "omp-private", "ompcritical": "omp-critical",
                   "pthreadmutex": "pthread-mutex", "private": "omp-private",
                   "critical": "omp-critical", "mutex": "pthread-mutex",
                   "posix": "pthread-mutex"}
        key = aliases.get(key.replace("-", ""), key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown pattern {text!r}; expected one of "
                             f"{', '.join(p.value for p in cls)}") from None

    @property
    def file_level(self) -> bool:
        """POSIX programs are analysed as one unit per file, OpenMP per function."""
        return self is PatternKind.PTHREAD_MUTEX


_OMP_PARALLEL = re.compile(r"^[ \t]*#[ \t]*pragma[ \t]+omp[ \t]+parallel\b", re.M)
_PRIVATE = re.compile(r"\bprivate[ \t]*\(")
_CRITICAL = re.compile(r"^[ \t]*#[ \t]*pragma[ \t]+omp[ \t]+critical\b", re.M)
_LOCK = re.compile(r"\bpthread_mutex_lock[ \t]*\(")


def matches_pattern(text: str, pattern: PatternKind | str) -> bool:
    """Plain-text detection rule used when scanning for candidate files."""
    pattern = PatternKind.parse(pattern)
    if pattern is PatternKind.OMP_PRIVATE:
        return bool(_OMP_PARALLEL.search(text)) and bool(_PRIVATE.search(text))
    if pattern is PatternKind.OMP_CRITICAL:
        return bool(_CRITICAL.search(text))
    return bool(_LOCK.search(text))
