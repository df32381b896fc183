"""Tokenizer for the C subset understood by the parser.

Comments, whitespace and non-pragma preprocessor lines are dropped.  Each
``#pragma`` line (with backslash continuations joined) becomes a single
``pragma`` token whose text is the directive body with whitespace collapsed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset("""
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Atomic _Noreturn _Thread_local _Static_assert
    __inline __inline__ __restrict __restrict__ __const __volatile__
""".split())

# longest first so that greedy matching works
PUNCTUATORS = sorted("""
    ... <<= >>= -> ++ -- << >> <= >= == != && || *= /= %= += -= &= ^= |= ##
    [ ] ( ) { } . & * + - ~ ! / % < > ^ | ? : ; = , #
""".split(), key=len, reverse=True)

_PUNCT_RE = "|".join(re.escape(p) for p in PUNCTUATORS)
_NUMBER_RE = r"(?:0[xX][0-9a-fA-F]+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)[uUlLfF]*"
_TOKEN_RE = re.compile(
    rf"(?P<ws>[ \t\r\f\v]+)"
    rf"|(?P<nl>\n)"
    rf"|(?P<lc>//[^\n]*)"
    rf"|(?P<bc>/\*)"
    rf"|(?P<number>{_NUMBER_RE})"
    rf"|(?P<ident>[A-Za-z_]\w*)"
    rf"|(?P<str>[LuU]?\"|[LuU]?')"
    rf"|(?P<punct>{_PUNCT_RE})"
    rf"|(?P<cont>\\\n)"
)


class LexError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class LexToken:
    kind: str  # identifier | keyword | punctuator | number | string | pragma
    text: str
    line: int
    col: int
    offset: int = 0  # character offset of the first char in the source
    end: int = 0  # offset one past the last char
    end_line: int = 0  # last physical line (pragmas may continue)

    def __post_init__(self):
        if not self.end_line:
            object.__setattr__(self, "end_line", self.line)


def _directive_extent(source: str, start: int) -> int:
    """Offset of the newline that terminates a preprocessor line (or EOF)."""
    i = start
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\\" and i + 1 < n and source[i + 1] == "\n":
            i += 2
            continue
        if c == "/" and source.startswith("/*", i):
            close = source.find("*/", i + 2)
            if close < 0:
                return n
            i = close + 2
            continue
        if c == "\n":
            return i
        i += 1
    return n


def lex(source: str) -> list[LexToken]:
    tokens: list[LexToken] = []
    pos = 0
    line = 1
    line_start = 0
    at_line_start = True
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch == "#" and at_line_start:
            stop = _directive_extent(source, pos)
            raw = source[pos:stop]
            body = re.sub(r"/\*.*?\*/", " ", raw.replace("\\\n", " "), flags=re.S)
            body = re.sub(r"//.*", "", body)
            words = body[1:].split()
            newlines = raw.count("\n")
            if words and words[0] == "pragma":
                text = " ".join(words[1:])
                tokens.append(LexToken("pragma", text, line, pos - line_start + 1,
                                       pos, stop, line + newlines))
            if newlines:
                line += newlines
                line_start = source.rfind("\n", 0, stop) + 1
            pos = stop
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            # stray characters such as '@' or '$' degrade to punctuators
            tokens.append(LexToken("punctuator", ch, line, pos - line_start + 1, pos, pos + 1))
            at_line_start = False
            pos += 1
            continue
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "ws":
            pass
        elif kind == "nl":
            line += 1
            line_start = m.end()
            at_line_start = True
        elif kind == "cont":
            line += 1
            line_start = m.end()
        elif kind == "lc":
            pass
        elif kind == "bc":
            close = source.find("*/", pos + 2)
            if close < 0:
                raise LexError("unterminated comment", line)
            chunk = source[pos:close + 2]
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rfind("\n") + 1
            pos = close + 2
            continue
        elif kind == "str":
            quote = text[-1]
            i = m.end()
            while True:
                if i >= n or source[i] == "\n":
                    what = "string" if quote == '"' else "character constant"
                    raise LexError(f"unterminated {what}", line)
                if source[i] == "\\":
                    if i + 1 < n and source[i + 1] == "\n":
                        line += 1
                        line_start = i + 2
                    i += 2
                    continue
                if source[i] == quote:
                    break
                i += 1
            tokens.append(LexToken("string", source[pos:i + 1], line, col, pos, i + 1))
            at_line_start = False
            pos = i + 1
            continue
        else:
            if kind == "ident":
                kind = "keyword" if text in KEYWORDS else "identifier"
            elif kind == "punct":
                kind = "punctuator"
            tokens.append(LexToken(kind, text, line, col, pos, m.end()))
            at_line_start = False
        pos = m.end()
    return tokens
