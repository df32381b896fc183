"""C-subset lexer/parser and the AST token-vector representation."""
from .ast import AstNode, NodeClass
from .lexer import LexError, LexToken, lex
from .parser import ParseError, parse, parse_pragma, parse_source
from .vectors import (PAD, EncodedSample, TokenVector, Vocabulary, build_vocab, encode,
                      extract_units, preorder)

__all__ = [
    "AstNode", "NodeClass", "LexError", "LexToken", "lex", "ParseError", "parse",
    "parse_pragma", "parse_source", "PAD", "EncodedSample", "TokenVector", "Vocabulary",
    "build_vocab", "encode", "extract_units", "preorder",
]
