"""Recursive-descent parser for a pragmatic C subset with OpenMP pragmas.

Node shapes loosely follow pycparser (Decl -> TypeDecl -> IdentifierType,
FuncCall -> ID + ExprList, ...).  OpenMP directives become first-class nodes:
clause nodes come first, then the structured block the directive applies to.
Anything outside the subset degrades to an ``Unknown`` node spanning the
offending statement; only unbalanced brackets are fatal.
"""
from __future__ import annotations

import re

from .ast import AstNode, NodeClass as N
from .lexer import LexToken, lex

__all__ = ["ParseError", "parse", "parse_source"]


class ParseError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class _Unsupported(Exception):
    """Internal: construct outside the subset, caller falls back to Unknown."""


TYPE_KEYWORDS = frozenset("""
    void char short int long float double signed unsigned _Bool _Complex
""".split())
STORAGE = frozenset("""
    typedef extern static auto register inline _Noreturn _Thread_local
    __inline __inline__
""".split())
QUALIFIERS = frozenset("""
    const volatile restrict _Atomic __restrict __restrict__ __const __volatile__
""".split())

# typedef names that commonly arrive through headers we do not expand
BUILTIN_TYPEDEFS = frozenset("""
    size_t ssize_t ptrdiff_t intptr_t uintptr_t off_t time_t clock_t FILE
    int8_t int16_t int32_t int64_t uint8_t uint16_t uint32_t uint64_t
    bool wchar_t va_list pid_t
    pthread_t pthread_attr_t pthread_mutex_t pthread_mutexattr_t
    pthread_cond_t pthread_condattr_t pthread_barrier_t pthread_rwlock_t
    pthread_spinlock_t pthread_key_t pthread_once_t sem_t
    omp_lock_t omp_nest_lock_t
""".split())

ASSIGN_OPS = frozenset("= *= /= %= += -= <<= >>= &= ^= |=".split())
BINARY_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6, "<": 7, ">": 7, "<=": 7, ">=": 7,
    "<<": 8, ">>": 8, "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
UNARY_OPS = frozenset("& * + - ~ !".split())

LOCK_CALLS = frozenset({"pthread_mutex_lock"})
UNLOCK_CALLS = frozenset({"pthread_mutex_unlock"})

# directive words -> node class; longest prefix wins
_DIRECTIVES = [
    (("parallel", "for"), N.OmpParallelFor),
    (("parallel", "sections"), N.OmpSections),
    (("parallel",), N.OmpParallel),
    (("for",), N.OmpFor),
    (("sections",), N.OmpSections),
    (("section",), N.OmpSection),
    (("critical",), N.OmpCritical),
    (("single",), N.OmpSingle),
    (("master",), N.OmpMaster),
    (("atomic",), N.OmpAtomic),
    (("barrier",), N.OmpBarrier),
    (("task",), N.OmpTask),
]
STANDALONE = frozenset("""
    barrier flush taskwait taskyield threadprivate declare cancel cancellation
    requires
""".split())
_CLAUSE_CLASSES = {
    "private": N.OmpPrivateClause,
    "firstprivate": N.OmpFirstprivateClause,
    "lastprivate": N.OmpLastprivateClause,
    "shared": N.OmpSharedClause,
    "reduction": N.OmpReductionClause,
}
_CLAUSE_RE = re.compile(r"([A-Za-z_]\w*)\s*(\()?")


def split_top_level(text: str, sep: str = ",") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        parts.append(tail)
    return parts


def parse_pragma(text: str) -> tuple[N, bool, list[tuple[str, list[str]]]] | None:
    """Split ``omp ...`` pragma text into (directive class, takes_block, clauses).

    Returns None for non-OpenMP pragmas.  Each clause is ``(name, args)``.
    """
    words = text.split(None, 1)
    if not words or words[0] != "omp":
        return None
    rest = words[1] if len(words) > 1 else ""
    # directive words are the leading bare identifiers (no parenthesis follows)
    names: list[str] = []
    pos = 0
    while True:
        m = _CLAUSE_RE.match(rest, pos)
        if m and m.group(2) and m.group(1) == "critical" and not names:
            # named critical: the (name) is kept as a clause-like argument
            names.append("critical")
            pos = m.start(1)
            break
        if not m or m.group(2):
            break
        word = m.group(1)
        # 'critical' may carry a (name); treat the first word after it as clause
        if names and names[-1] == "critical":
            break
        if word not in {"parallel", "for", "sections", "section", "critical", "single",
                        "master", "atomic", "barrier", "task", "simd", "taskwait",
                        "taskyield", "flush", "threadprivate", "declare", "cancel",
                        "cancellation", "ordered", "target", "teams", "distribute",
                        "taskloop", "requires", "point", "update", "read", "write",
                        "capture", "loop", "masked", "scope", "taskgroup", "data",
                        "enter", "exit"}:
            break
        names.append(word)
        pos = m.end()
        while pos < len(rest) and rest[pos] in " ,":
            pos += 1
    kind = N.OmpOther
    for prefix, cls in _DIRECTIVES:
        if tuple(names[:len(prefix)]) == prefix:
            kind = cls
            break
    if kind is N.OmpOther and names[:1] == ["critical"]:
        kind = N.OmpCritical
    takes_block = not (names and names[0] in STANDALONE) and not (
        names[:2] == ["target", "update"] or names[1:2] in (["enter"], ["exit"]))
    if names[:1] == ["ordered"] and "depend" in rest:
        takes_block = False
    clauses: list[tuple[str, list[str]]] = []
    while pos < len(rest):
        m = _CLAUSE_RE.match(rest, pos)
        if not m:
            pos += 1
            continue
        name = m.group(1)
        pos = m.end()
        args: list[str] = []
        if m.group(2):
            depth = 1
            start = pos
            while pos < len(rest) and depth:
                if rest[pos] == "(":
                    depth += 1
                elif rest[pos] == ")":
                    depth -= 1
                pos += 1
            inner = rest[start:pos - 1] if depth == 0 else rest[start:]
            if name == "reduction" and ":" in inner:
                inner = inner.split(":", 1)[1]
            args = split_top_level(inner)
        clauses.append((name, args))
        while pos < len(rest) and rest[pos] in " ,":
            pos += 1
    return kind, takes_block, clauses


def check_balance(tokens: list[LexToken]) -> None:
    pairs = {")": "(", "]": "[", "}": "{"}
    stack: list[LexToken] = []
    for tok in tokens:
        if tok.kind != "punctuator":
            continue
        if tok.text in "([{":
            stack.append(tok)
        elif tok.text in pairs:
            if not stack:
                raise ParseError(f"unmatched '{tok.text}'", tok.line)
            if stack[-1].text != pairs[tok.text]:
                raise ParseError(f"'{tok.text}' closes '{stack[-1].text}' opened on line "
                                 f"{stack[-1].line}", tok.line)
            stack.pop()
    if stack:
        raise ParseError(f"unclosed '{stack[-1].text}'", stack[-1].line)


class Parser:
    def __init__(self, tokens: list[LexToken]):
        self.toks = tokens
        self.pos = 0
        self.typedefs: set[str] = set(BUILTIN_TYPEDEFS)

    # -- token helpers -------------------------------------------------------
    def peek(self, k: int = 0) -> LexToken | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.text == text and t.kind in ("punctuator", "keyword")

    def advance(self) -> LexToken:
        t = self.peek()
        if t is None:
            raise _Unsupported("unexpected end of input")
        self.pos += 1
        return t

    def expect(self, text: str) -> LexToken:
        if not self.at(text):
            raise _Unsupported(f"expected {text!r}")
        return self.advance()

    def line(self) -> int:
        t = self.peek()
        if t is not None:
            return t.line
        return self.toks[-1].line if self.toks else 1

    def node(self, kind: N, start: int, children=None, name=None, line=None) -> AstNode:
        first = self.toks[start] if start < len(self.toks) else None
        last_i = max(start, self.pos - 1)
        last = self.toks[last_i] if last_i < len(self.toks) else first
        ln = line if line is not None else (first.line if first else 1)
        end = max(ln, last.end_line if last else ln)
        return AstNode(kind, ln, list(children or []), name, end, start, self.pos)

    # -- top level -----------------------------------------------------------
    def parse_translation_unit(self) -> AstNode:
        items: list[AstNode] = []
        while self.peek() is not None:
            t = self.peek()
            if t.kind == "pragma":
                items.extend(self.parse_pragma_statement(top_level=True))
                continue
            if self.at(";"):
                self.advance()
                continue
            start = self.pos
            try:
                items.extend(self.parse_external())
            except (_Unsupported, RecursionError):
                self.pos = start
                items.append(self.skip_unknown(start, top_level=True))
        return AstNode(N.FileAST, 1, items, None,
                       self.toks[-1].end_line if self.toks else 1, 0, len(self.toks))

    def parse_external(self) -> list[AstNode]:
        start = self.pos
        spec = self.parse_specifiers()
        if self.at(";"):
            self.advance()
            return [self.node(N.Decl, start, [spec["type"]], None)]
        decl_start = self.pos
        name, tnode = self.parse_declarator(spec["type"])
        if tnode.kind is N.FuncDecl and self.at("{"):
            body = self.parse_compound()
            fd = self.node(N.FuncDef, start, [tnode, body], name, line=self.toks[decl_start].line)
            return [fd]
        return self.finish_declaration(start, spec, name, tnode)

    def skip_unknown(self, start: int, top_level: bool = False) -> AstNode:
        """Consume one statement-shaped region and return an Unknown node."""
        self.pos = start
        depth = 0
        while self.peek() is not None:
            t = self.peek()
            if t.kind == "punctuator":
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    if depth == 0:
                        break  # enclosing block ends here
                    depth -= 1
                    if t.text == "}" and depth == 0:
                        self.advance()
                        nxt = self.peek()
                        if nxt is not None and nxt.text == ";":
                            self.advance()
                            break
                        if nxt is not None and (nxt.kind == "identifier" or nxt.text == "*"):
                            continue
                        break
                elif t.text == ";" and depth == 0:
                    self.advance()
                    break
            self.advance()
        if self.pos == start and self.peek() is not None and not top_level:
            self.advance()
        if self.pos == start and top_level and self.peek() is not None:
            self.advance()
        return self.node(N.Unknown, start)

    # -- declarations --------------------------------------------------------
    def is_type_start(self, k: int = 0) -> bool:
        t = self.peek(k)
        if t is None:
            return False
        if t.kind == "keyword":
            return (t.text in TYPE_KEYWORDS or t.text in STORAGE or t.text in QUALIFIERS
                    or t.text in ("struct", "union", "enum"))
        if t.kind == "identifier":
            if t.text == "__attribute__" or t.text == "__extension__":
                return True
            return t.text in self.typedefs
        return False

    def looks_like_declaration(self) -> bool:
        if self.is_type_start():
            t = self.peek()
            # a typedef name used as a value, e.g. "size_t = 3" is not a decl
            if t.kind == "identifier" and self.peek(1) is not None and \
                    self.peek(1).text in ASSIGN_OPS | {"(", ")", "[", ".", "->", ",", ";"}:
                return False
            return True
        t, u = self.peek(), self.peek(1)
        if t is None or u is None or t.kind != "identifier":
            return False
        if u.kind == "identifier":
            return True  # unknown typedef name followed by declarator
        if u.text == "*":
            v, w = self.peek(2), self.peek(3)
            while v is not None and v.text == "*":
                v, w = w, self.peek(4)
            if v is not None and v.kind == "identifier" and w is not None and \
                    w.text in ("=", ";", ",", "["):
                return True
        return False

    def skip_attribute(self) -> None:
        self.advance()
        if self.at("("):
            depth = 0
            while True:
                t = self.advance()
                if t.text == "(":
                    depth += 1
                elif t.text == ")":
                    depth -= 1
                    if depth == 0:
                        break

    def parse_specifiers(self) -> dict:
        start = self.pos
        names: list[str] = []
        storage: list[str] = []
        tnode: AstNode | None = None
        while True:
            t = self.peek()
            if t is None:
                break
            if t.kind == "keyword" and t.text in STORAGE:
                storage.append(self.advance().text)
            elif t.kind == "keyword" and t.text in QUALIFIERS:
                self.advance()
            elif t.kind == "identifier" and t.text in ("__attribute__", "__extension__"):
                self.skip_attribute()
            elif t.kind == "keyword" and t.text in TYPE_KEYWORDS:
                names.append(self.advance().text)
            elif t.kind == "keyword" and t.text in ("struct", "union", "enum"):
                if tnode is not None or names:
                    break
                tnode = self.parse_struct_or_enum()
            elif t.kind == "identifier" and not names and tnode is None and (
                    t.text in self.typedefs or self._unknown_typename()):
                names.append(self.advance().text)
            else:
                break
        if not names and tnode is None:
            if storage:
                names.append("int")
            else:
                raise _Unsupported("expected declaration specifiers")
        if tnode is None:
            tnode = AstNode(N.IdentifierType, self.toks[start].line, [], " ".join(names),
                            0, start, self.pos)
        return {"type": tnode, "storage": storage, "start": start}

    def _unknown_typename(self) -> bool:
        u = self.peek(1)
        if u is None:
            return False
        if u.kind == "identifier":
            return True
        if u.text == "*":
            return self.looks_like_declaration()
        return False

    def parse_struct_or_enum(self) -> AstNode:
        start = self.pos
        kw = self.advance().text
        kind = {"struct": N.Struct, "union": N.Union, "enum": N.Enum}[kw]
        name = None
        while self.peek() is not None and self.peek().text == "__attribute__":
            self.skip_attribute()
        if self.peek() is not None and self.peek().kind == "identifier":
            name = self.advance().text
        children: list[AstNode] = []
        if self.at("{"):
            self.advance()
            if kind is N.Enum:
                lst_start = self.pos
                items = []
                while not self.at("}"):
                    es = self.pos
                    t = self.advance()
                    if t.kind != "identifier":
                        raise _Unsupported("bad enumerator")
                    val = []
                    if self.at("="):
                        self.advance()
                        val = [self.parse_conditional()]
                    items.append(self.node(N.Enumerator, es, val, t.text))
                    if self.at(","):
                        self.advance()
                children.append(self.node(N.EnumeratorList, lst_start, items))
            else:
                while not self.at("}"):
                    if self.at(";"):
                        self.advance()
                        continue
                    ms = self.pos
                    spec = self.parse_specifiers()
                    while True:
                        if self.at(":"):  # anonymous bitfield
                            self.advance()
                            self.parse_conditional()
                        else:
                            mname, mt = self.parse_declarator(spec["type"])
                            if self.at(":"):
                                self.advance()
                                self.parse_conditional()
                            children.append(self.node(N.Decl, ms, [mt], mname))
                        if self.at(","):
                            self.advance()
                            continue
                        break
                    self.expect(";")
            self.expect("}")
        elif name is None:
            raise _Unsupported("anonymous tag without body")
        return self.node(kind, start, children, name)

    def parse_declarator(self, base: AstNode, abstract: bool = False) -> tuple[str | None, AstNode]:
        """Return (declared name, type subtree) for pointers/arrays/functions."""
        start = self.pos
        ptr_depth = 0
        while self.at("*"):
            self.advance()
            ptr_depth += 1
            while self.peek() is not None and self.peek().text in QUALIFIERS:
                self.advance()
        name = None
        name_line = self.line()
        t = self.peek()
        if t is not None and t.kind == "identifier" and t.text not in ("__attribute__",):
            name = self.advance().text
        elif self.at("("):
            raise _Unsupported("parenthesized declarator (function pointer)")
        elif not abstract:
            raise _Unsupported("expected declarator")
        tnode = AstNode(N.TypeDecl, name_line, [base], name, 0, start, self.pos)
        for _ in range(ptr_depth):
            tnode = AstNode(N.PtrDecl, name_line, [tnode], None, 0, start, self.pos)
        while True:
            if self.at("["):
                self.advance()
                dims = []
                while self.peek() is not None and self.peek().text in QUALIFIERS | {"static"}:
                    self.advance()
                if not self.at("]"):
                    if self.at("*"):
                        self.advance()
                    else:
                        dims.append(self.parse_assignment())
                self.expect("]")
                tnode = self.wrap_array(tnode, dims, name_line, start)
            elif self.at("("):
                params = self.parse_params()
                tnode = AstNode(N.FuncDecl, name_line, [params, tnode], name, 0, start, self.pos)
            else:
                break
        while self.peek() is not None and self.peek().text in ("__attribute__", "__asm__", "asm"):
            self.skip_attribute()
        return name, tnode

    def wrap_array(self, tnode: AstNode, dims: list[AstNode], line: int, start: int) -> AstNode:
        # int a[2][3]: outer ArrayDecl is the first dimension
        if tnode.kind is N.ArrayDecl:
            inner = tnode
            while inner.children and inner.children[0].kind is N.ArrayDecl:
                inner = inner.children[0]
            inner.children[0] = AstNode(N.ArrayDecl, line, [inner.children[0]] + dims, None,
                                        0, start, self.pos)
            return tnode
        return AstNode(N.ArrayDecl, line, [tnode] + dims, None, 0, start, self.pos)

    def parse_params(self) -> AstNode:
        start = self.pos
        self.expect("(")
        params: list[AstNode] = []
        if self.at("void") and self.at(")", 1):
            self.advance()
        while not self.at(")"):
            if self.at("..."):
                ps = self.pos
                self.advance()
                params.append(self.node(N.EllipsisParam, ps))
            else:
                ps = self.pos
                spec = self.parse_specifiers()
                pname, pt = self.parse_declarator(spec["type"], abstract=True)
                params.append(self.node(N.Decl, ps, [pt], pname))
            if self.at(","):
                self.advance()
            elif not self.at(")"):
                raise _Unsupported("bad parameter list")
        self.expect(")")
        return self.node(N.ParamList, start, params)

    def finish_declaration(self, start: int, spec: dict, name: str | None,
                           tnode: AstNode) -> list[AstNode]:
        decls: list[AstNode] = []
        is_typedef = "typedef" in spec["storage"]
        while True:
            children = [tnode]
            if self.at("="):
                self.advance()
                children.append(self.parse_initializer())
            kind = N.Typedef if is_typedef else N.Decl
            if is_typedef and name:
                self.typedefs.add(name)
            d = AstNode(kind, tnode.line, children, name, 0, start, self.pos)
            d.end_line = max(d.line, self.toks[self.pos - 1].end_line)
            decls.append(d)
            if self.at(","):
                self.advance()
                name, tnode = self.parse_declarator(spec["type"])
                continue
            break
        self.expect(";")
        for d in decls:
            d.end_line = max(d.line, self.toks[self.pos - 1].end_line)
            d.tok_end = self.pos
        return decls

    def parse_initializer(self) -> AstNode:
        if self.at("{"):
            start = self.pos
            self.advance()
            items = []
            while not self.at("}"):
                if self.at("."):  # designated initializer .x = ...
                    self.advance()
                    self.advance()
                    self.expect("=")
                elif self.at("["):
                    self.advance()
                    self.parse_conditional()
                    self.expect("]")
                    self.expect("=")
                items.append(self.parse_initializer())
                if self.at(","):
                    self.advance()
                elif not self.at("}"):
                    raise _Unsupported("bad initializer list")
            self.expect("}")
            return self.node(N.InitList, start, items)
        return self.parse_assignment()

    def parse_declaration_statement(self) -> list[AstNode]:
        start = self.pos
        spec = self.parse_specifiers()
        if self.at(";"):
            self.advance()
            return [self.node(N.Decl, start, [spec["type"]])]
        name, tnode = self.parse_declarator(spec["type"])
        return self.finish_declaration(start, spec, name, tnode)

    # -- statements ----------------------------------------------------------
    def parse_compound(self) -> AstNode:
        start = self.pos
        self.expect("{")
        items: list[AstNode] = []
        while not self.at("}"):
            if self.peek() is None:
                raise _Unsupported("unterminated block")
            items.extend(self.parse_block_item())
        self.expect("}")
        return self.node(N.Compound, start, items)

    def parse_block_item(self) -> list[AstNode]:
        start = self.pos
        try:
            if self.peek().kind != "pragma" and self.looks_like_declaration():
                return self.parse_declaration_statement()
            return self.parse_statement_list()
        except (_Unsupported, RecursionError):
            return [self.skip_unknown(start)]

    def parse_statement_list(self) -> list[AstNode]:
        if self.peek() is not None and self.peek().kind == "pragma":
            return self.parse_pragma_statement()
        return [self.parse_statement()]

    def parse_sub_statement(self) -> AstNode:
        """A statement in a position that requires exactly one node."""
        start = self.pos
        try:
            if self.peek() is not None and self.peek().kind == "pragma":
                nodes = self.parse_pragma_statement()
                if len(nodes) == 1:
                    return nodes[0]
                return self.node(N.Compound, start, nodes)
            if self.looks_like_declaration():
                nodes = self.parse_declaration_statement()
                return nodes[0] if len(nodes) == 1 else self.node(N.Compound, start, nodes)
            return self.parse_statement()
        except (_Unsupported, RecursionError):
            return self.skip_unknown(start)

    def parse_pragma_statement(self, top_level: bool = False) -> list[AstNode]:
        start = self.pos
        tok = self.advance()
        parsed = parse_pragma(tok.text)
        if parsed is None:
            return []  # non-OpenMP pragma: dropped
        kind, takes_block, clauses = parsed
        children: list[AstNode] = []
        for cname, args in clauses:
            ccls = _CLAUSE_CLASSES.get(cname, N.OmpOtherClause)
            vars_ = []
            if ccls is not N.OmpOtherClause:
                vars_ = [AstNode(N.OmpClauseVar, tok.line, [], a, tok.end_line, start, start + 1)
                         for a in args if a]
            children.append(AstNode(ccls, tok.line, vars_, cname, tok.end_line, start, start + 1))
        if takes_block and not top_level and self.peek() is not None and not self.at("}"):
            children.append(self.parse_sub_statement())
        node = self.node(kind, start, children, tok.text, line=tok.line)
        return [node]

    def parse_statement(self) -> AstNode:
        start = self.pos
        t = self.peek()
        if t is None:
            raise _Unsupported("unexpected end of input")
        if t.kind == "pragma":
            return self.parse_sub_statement()
        if self.at("{"):
            return self.parse_compound()
        if self.at(";"):
            self.advance()
            return self.node(N.EmptyStatement, start)
        if t.kind == "keyword":
            kw = t.text
            if kw == "if":
                self.advance()
                self.expect("(")
                cond = self.parse_expression()
                self.expect(")")
                kids = [cond, self.parse_sub_statement()]
                if self.at("else"):
                    self.advance()
                    kids.append(self.parse_sub_statement())
                return self.node(N.If, start, kids)
            if kw == "for":
                self.advance()
                self.expect("(")
                kids = []
                if self.at(";"):
                    self.advance()
                elif self.looks_like_declaration():
                    kids.extend(self.parse_declaration_statement())
                else:
                    kids.append(self.parse_expression())
                    self.expect(";")
                if not self.at(";"):
                    kids.append(self.parse_expression())
                self.expect(";")
                if not self.at(")"):
                    kids.append(self.parse_expression())
                self.expect(")")
                kids.append(self.parse_sub_statement())
                return self.node(N.For, start, kids)
            if kw == "while":
                self.advance()
                self.expect("(")
                cond = self.parse_expression()
                self.expect(")")
                return self.node(N.While, start, [cond, self.parse_sub_statement()])
            if kw == "do":
                self.advance()
                body = self.parse_sub_statement()
                self.expect("while")
                self.expect("(")
                cond = self.parse_expression()
                self.expect(")")
                self.expect(";")
                return self.node(N.DoWhile, start, [body, cond])
            if kw == "switch":
                self.advance()
                self.expect("(")
                cond = self.parse_expression()
                self.expect(")")
                return self.node(N.Switch, start, [cond, self.parse_sub_statement()])
            if kw == "case":
                self.advance()
                val = self.parse_conditional()
                if self.at("..."):
                    self.advance()
                    self.parse_conditional()
                self.expect(":")
                kids = [val]
                if not self.at("}") and not self.at("case") and not self.at("default"):
                    kids.append(self.parse_sub_statement())
                return self.node(N.Case, start, kids)
            if kw == "default":
                self.advance()
                self.expect(":")
                kids = []
                if not self.at("}") and not self.at("case"):
                    kids.append(self.parse_sub_statement())
                return self.node(N.Default, start, kids)
            if kw == "break":
                self.advance()
                self.expect(";")
                return self.node(N.Break, start)
            if kw == "continue":
                self.advance()
                self.expect(";")
                return self.node(N.Continue, start)
            if kw == "return":
                self.advance()
                kids = [] if self.at(";") else [self.parse_expression()]
                self.expect(";")
                return self.node(N.Return, start, kids)
            if kw == "goto":
                self.advance()
                label = self.advance().text
                self.expect(";")
                return self.node(N.Goto, start, [], label)
        if t.kind == "identifier" and self.at(":", 1):
            label = self.advance().text
            self.advance()
            kids = [] if self.at("}") else [self.parse_sub_statement()]
            return self.node(N.Label, start, kids, label)
        expr = self.parse_expression()
        self.expect(";")
        return expr

    # -- expressions ---------------------------------------------------------
    def parse_expression(self) -> AstNode:
        start = self.pos
        first = self.parse_assignment()
        if not self.at(","):
            return first
        items = [first]
        while self.at(","):
            self.advance()
            items.append(self.parse_assignment())
        return self.node(N.ExprList, start, items)

    def parse_assignment(self) -> AstNode:
        start = self.pos
        lhs = self.parse_conditional()
        t = self.peek()
        if t is not None and t.kind == "punctuator" and t.text in ASSIGN_OPS:
            op = self.advance().text
            rhs = self.parse_assignment()
            return self.node(N.Assignment, start, [lhs, rhs], op)
        return lhs

    def parse_conditional(self) -> AstNode:
        start = self.pos
        cond = self.parse_binary(1)
        if self.at("?"):
            self.advance()
            a = self.parse_expression()
            self.expect(":")
            b = self.parse_conditional()
            return self.node(N.TernaryOp, start, [cond, a, b])
        return cond

    def parse_binary(self, min_prec: int) -> AstNode:
        start = self.pos
        lhs = self.parse_cast()
        while True:
            t = self.peek()
            if t is None or t.kind != "punctuator":
                break
            prec = BINARY_PREC.get(t.text)
            if prec is None or prec < min_prec:
                break
            op = self.advance().text
            rhs = self.parse_binary(prec + 1)
            lhs = self.node(N.BinaryOp, start, [lhs, rhs], op)
        return lhs

    def is_typename_in_parens(self) -> bool:
        return self.at("(") and self.is_type_start(1)

    def parse_typename(self) -> AstNode:
        start = self.pos
        spec = self.parse_specifiers()
        _, tnode = self.parse_declarator(spec["type"], abstract=True)
        return self.node(N.Typename, start, [tnode])

    def parse_cast(self) -> AstNode:
        if self.is_typename_in_parens():
            start = self.pos
            self.advance()
            tn = self.parse_typename()
            self.expect(")")
            if self.at("{"):  # compound literal
                init = self.parse_initializer()
                return self.node(N.Cast, start, [tn, init])
            return self.node(N.Cast, start, [tn, self.parse_cast()])
        return self.parse_unary()

    def parse_unary(self) -> AstNode:
        start = self.pos
        t = self.peek()
        if t is None:
            raise _Unsupported("unexpected end of input")
        if t.kind == "punctuator" and t.text in ("++", "--"):
            op = self.advance().text
            return self.node(N.UnaryOp, start, [self.parse_unary()], op)
        if t.kind == "punctuator" and t.text in UNARY_OPS:
            op = self.advance().text
            return self.node(N.UnaryOp, start, [self.parse_cast()], op)
        if t.kind == "keyword" and t.text == "sizeof":
            self.advance()
            if self.is_typename_in_parens():
                self.advance()
                tn = self.parse_typename()
                self.expect(")")
                return self.node(N.UnaryOp, start, [tn], "sizeof")
            return self.node(N.UnaryOp, start, [self.parse_unary()], "sizeof")
        return self.parse_postfix()

    def parse_postfix(self) -> AstNode:
        start = self.pos
        expr = self.parse_primary()
        while True:
            if self.at("["):
                self.advance()
                idx = self.parse_expression()
                self.expect("]")
                expr = self.node(N.ArrayRef, start, [expr, idx])
            elif self.at("("):
                arg_start = self.pos
                self.advance()
                args = []
                while not self.at(")"):
                    args.append(self.parse_assignment())
                    if self.at(","):
                        self.advance()
                    elif not self.at(")"):
                        raise _Unsupported("bad argument list")
                self.expect(")")
                arg_list = self.node(N.ExprList, arg_start, args)
                callee = expr.name if expr.kind is N.ID else None
                if callee in LOCK_CALLS or callee in UNLOCK_CALLS:
                    kind = N.PthreadLockCall if callee in LOCK_CALLS else N.PthreadUnlockCall
                    text = "".join(tok.text for tok in self.toks[arg_start + 1:self.pos - 1])
                    expr = self.node(kind, start, [arg_list], text)
                else:
                    expr = self.node(N.FuncCall, start, [expr, arg_list], callee)
            elif self.at(".") or self.at("->"):
                op = self.advance().text
                ftok = self.advance()
                if ftok.kind != "identifier":
                    raise _Unsupported("bad member access")
                field = AstNode(N.ID, ftok.line, [], ftok.text, 0, self.pos - 1, self.pos)
                expr = self.node(N.StructRef, start, [expr, field], op)
            elif self.at("++") or self.at("--"):
                op = "p" + self.advance().text
                expr = self.node(N.UnaryOp, start, [expr], op)
            else:
                return expr

    def parse_primary(self) -> AstNode:
        start = self.pos
        t = self.peek()
        if t is None:
            raise _Unsupported("unexpected end of input")
        if t.kind == "identifier":
            self.advance()
            return self.node(N.ID, start, [], t.text)
        if t.kind == "number":
            self.advance()
            return self.node(N.Constant, start, [], t.text)
        if t.kind == "string":
            self.advance()
            while self.peek() is not None and self.peek().kind == "string":
                self.advance()
            return self.node(N.Constant, start, [], t.text)
        if self.at("("):
            if self.at("{", 1):
                raise _Unsupported("statement expression")
            self.advance()
            e = self.parse_expression()
            self.expect(")")
            return e
        raise _Unsupported(f"unexpected token {t.text!r}")


def parse(tokens: list[LexToken]) -> AstNode:
    check_balance(tokens)
    return Parser(tokens).parse_translation_unit()


def parse_source(source: str) -> AstNode:
    return parse(lex(source))
