"""Tiny expression grammar for user-defined constraint functions.

Expressions are written over one observation row: identifiers x1..xd name
the coordinates; literals, + - * / ^ (right-associative power), unary
minus, parentheses, and the functions pow(a, b), exp(a), log(a) and the
indicator le(a, b) = 1 if a <= b else 0.  Compiled expressions evaluate
vectorized over the whole sample.

Grammar (recursive descent):

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := unary ('^' factor)?
    unary   := '-' unary | primary
    primary := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np


class ExprError(ValueError):
    """Syntax or semantic error in a constraint expression."""


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[()+\-*/^,]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            remainder = text[pos:].lstrip()
            if not remainder:
                break
            raise ExprError(f"unexpected character {remainder[0]!r} at position {pos}")
        for kind in ("number", "ident", "op"):
            if match.group(kind) is not None:
                tokens.append(_Token(kind, match.group(kind), match.start(kind)))
                break
        pos = match.end()
    return tokens


_FUNCTIONS: dict[str, tuple[int, Callable[..., np.ndarray]]] = {
    "pow": (2, lambda a, b: np.power(a, b)),
    "exp": (1, np.exp),
    "log": (1, np.log),
    "le": (2, lambda a, b: (a <= b).astype(float)),
}


class _Parser:
    def __init__(self, text: str, d: int) -> None:
        self.text = text
        self.d = d
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def next(self) -> _Token:
        token = self.peek()
        if token is None:
            raise ExprError(f"unexpected end of expression in {self.text!r}")
        self.index += 1
        return token

    def expect(self, text: str) -> None:
        token = self.next()
        if token.text != text:
            raise ExprError(
                f"expected {text!r} at position {token.pos}, found {token.text!r}"
            )

    def parse(self) -> Callable[[np.ndarray], np.ndarray]:
        node = self.expr()
        token = self.peek()
        if token is not None:
            raise ExprError(f"trailing input {token.text!r} at position {token.pos}")
        return node

    def expr(self) -> Callable[[np.ndarray], np.ndarray]:
        node = self.term()
        while (token := self.peek()) is not None and token.text in ("+", "-"):
            self.next()
            rhs = self.term()
            node = (
                (lambda a, b: lambda x: a(x) + b(x))
                if token.text == "+"
                else (lambda a, b: lambda x: a(x) - b(x))
            )(node, rhs)
        return node

    def term(self) -> Callable[[np.ndarray], np.ndarray]:
        node = self.factor()
        while (token := self.peek()) is not None and token.text in ("*", "/"):
            self.next()
            rhs = self.factor()
            node = (
                (lambda a, b: lambda x: a(x) * b(x))
                if token.text == "*"
                else (lambda a, b: lambda x: a(x) / b(x))
            )(node, rhs)
        return node

    def factor(self) -> Callable[[np.ndarray], np.ndarray]:
        # power binds tighter than unary minus: -x^2 reads -(x^2)
        token = self.peek()
        if token is not None and token.text == "-":
            self.next()
            inner = self.factor()
            return (lambda a: lambda x: -a(x))(inner)
        base = self.primary()
        token = self.peek()
        if token is not None and token.text == "^":
            self.next()
            exponent = self.factor()  # right-associative
            return (lambda a, b: lambda x: np.power(a(x), b(x)))(base, exponent)
        return base

    def primary(self) -> Callable[[np.ndarray], np.ndarray]:
        token = self.next()
        if token.kind == "number":
            value = float(token.text)
            return lambda x: np.full(x.shape[0], value)
        if token.kind == "ident":
            name = token.text
            following = self.peek()
            if following is not None and following.text == "(":
                return self.call(name, token.pos)
            return self.variable(name, token.pos)
        if token.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprError(f"unexpected token {token.text!r} at position {token.pos}")

    def call(self, name: str, pos: int) -> Callable[[np.ndarray], np.ndarray]:
        if name not in _FUNCTIONS:
            raise ExprError(f"unknown function {name!r} at position {pos}")
        arity, impl = _FUNCTIONS[name]
        self.expect("(")
        args = [self.expr()]
        while (token := self.peek()) is not None and token.text == ",":
            self.next()
            args.append(self.expr())
        self.expect(")")
        if len(args) != arity:
            raise ExprError(f"{name} takes {arity} argument(s), got {len(args)}")
        return (lambda fs: lambda x: impl(*(f(x) for f in fs)))(args)

    def variable(self, name: str, pos: int) -> Callable[[np.ndarray], np.ndarray]:
        match = re.fullmatch(r"x(\d+)", name)
        if match is None:
            raise ExprError(
                f"unknown identifier {name!r} at position {pos}; coordinates are x1..x{self.d}"
            )
        coord = int(match.group(1))
        if not 1 <= coord <= self.d:
            raise ExprError(
                f"coordinate {name} out of range for d={self.d} at position {pos}"
            )
        return lambda x: x[:, coord - 1]


def compile_expression(text: str, d: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile an expression into a vectorized (n, d) -> (n,) evaluator."""
    if d < 1:
        raise ExprError(f"dimension must be >= 1, got {d}")
    if not text.strip():
        raise ExprError("empty expression")
    return _Parser(text, d).parse()
