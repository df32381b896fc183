from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator


class NodeClass(str, Enum):
    """Closed inventory of AST node classes; the value is the token name."""

    FileAST = "FileAST"
    FuncDef = "FuncDef"
    FuncDecl = "FuncDecl"
    ParamList = "ParamList"
    EllipsisParam = "EllipsisParam"
    TypeDecl = "TypeDecl"
    IdentifierType = "IdentifierType"
    PtrDecl = "PtrDecl"
    ArrayDecl = "ArrayDecl"
    Typedef = "Typedef"
    Typename = "Typename"
    Struct = "Struct"
    Union = "Union"
    Enum = "Enum"
    EnumeratorList = "EnumeratorList"
    Enumerator = "Enumerator"
    Decl = "Decl"
    InitList = "InitList"
    Compound = "Compound"
    EmptyStatement = "EmptyStatement"
    For = "For"
    While = "While"
    DoWhile = "DoWhile"
    If = "If"
    Switch = "Switch"
    Case = "Case"
    Default = "Default"
    Break = "Break"
    Continue = "Continue"
    Goto = "Goto"
    Label = "Label"
    Return = "Return"
    Assignment = "Assignment"
    BinaryOp = "BinaryOp"
    UnaryOp = "UnaryOp"
    TernaryOp = "TernaryOp"
    Cast = "Cast"
    FuncCall = "FuncCall"
    ExprList = "ExprList"
    ArrayRef = "ArrayRef"
    StructRef = "StructRef"
    ID = "ID"
    Constant = "Constant"
    OmpParallel = "OmpParallel"
    OmpParallelFor = "OmpParallelFor"
    OmpFor = "OmpFor"
    OmpSections = "OmpSections"
    OmpSection = "OmpSection"
    OmpCritical = "OmpCritical"
    OmpSingle = "OmpSingle"
    OmpMaster = "OmpMaster"
    OmpAtomic = "OmpAtomic"
    OmpBarrier = "OmpBarrier"
    OmpTask = "OmpTask"
    OmpOther = "OmpOther"
    OmpPrivateClause = "OmpPrivateClause"
    OmpFirstprivateClause = "OmpFirstprivateClause"
    OmpLastprivateClause = "OmpLastprivateClause"
    OmpSharedClause = "OmpSharedClause"
    OmpReductionClause = "OmpReductionClause"
    OmpOtherClause = "OmpOtherClause"
    OmpClauseVar = "OmpClauseVar"
    PthreadLockCall = "PthreadLockCall"
    PthreadUnlockCall = "PthreadUnlockCall"
    Unknown = "Unknown"

    def __str__(self) -> str:
        return self.value


OMP_DIRECTIVES = frozenset(c for c in NodeClass if c.name.startswith("Omp") and not
                           (c.name.endswith("Clause") or c is NodeClass.OmpClauseVar))


@dataclass(eq=False)
class AstNode:
    kind: NodeClass
    line: int
    children: list[AstNode] = field(default_factory=list)
    name: str | None = None  # identifier, declared name, or pragma/mutex text
    end_line: int = 0
    tok_start: int = -1  # index range into the lexer token list
    tok_end: int = -1

    def __post_init__(self):
        if self.end_line < self.line:
            self.end_line = self.line

    def walk(self) -> Iterator[AstNode]:
        """Depth-first preorder, iterative so deep expressions do not recurse."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def find(self, *kinds: NodeClass) -> list[AstNode]:
        return [n for n in self.walk() if n.kind in kinds]

    def __repr__(self) -> str:
        extra = f" {self.name!r}" if self.name else ""
        return f"<{self.kind.value}{extra} @{self.line}-{self.end_line} [{len(self.children)}]>"

    def pretty(self, indent: int = 0) -> str:
        lines = [" " * indent + repr(self)]
        for c in self.children:
            lines.append(c.pretty(indent + 2))
        return "\n".join(lines)
