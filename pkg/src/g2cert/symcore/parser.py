"""Recursive-descent parser for the expression grammar.

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := ('+' | '-') unary | power
    power    := primary ('^' exponent)?
    exponent := ('+' | '-')? INT | '(' ('+' | '-')? INT ')'
    primary  := INT | IDENT | '(' expr ')'

Whitespace is insignificant.  Rational literals are written ``a/b``.
"""
from __future__ import annotations

import re

from .core import Context, RationalExpr
from .errors import ExprSyntaxError, UndeclaredSymbol

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


def tokenize(text: str):
    pos = 0
    tokens = []
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            tokens.append(("INT", m.group(1), start))
        elif m.group(2):
            tokens.append(("IDENT", m.group(2), start))
        else:
            op = m.group(3)
            if op == "**":
                raise ExprSyntaxError("use '^' for powers", start, ["^"])
            tokens.append((op, op, start))
        pos = m.end()
    tokens.append(("EOF", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, ctx: Context):
        self.ctx = ctx
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, value, pos = self.peek()
        found = "end of input" if kind == "EOF" else repr(value)
        raise ExprSyntaxError(f"unexpected {found}", pos, expected)

    def parse(self) -> RationalExpr:
        e = self.expr()
        if self.peek()[0] != "EOF":
            self.fail(["+", "-", "*", "/", "^", "end of input"])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self):
        kind = self.peek()[0]
        if kind == "-":
            self.take()
            return -self.unary()
        if kind == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "^":
            self.take()
            return base ** self.exponent()
        return base

    def exponent(self) -> int:
        paren = False
        if self.peek()[0] == "(":
            self.take()
            paren = True
        sign = 1
        if self.peek()[0] in ("-", "+"):
            sign = -1 if self.take()[0] == "-" else 1
        if self.peek()[0] != "INT":
            self.fail(["integer exponent"])
        n = sign * int(self.take()[1])
        if paren:
            if self.peek()[0] != ")":
                self.fail([")"])
            self.take()
        return n

    def primary(self):
        kind, value, pos = self.peek()
        if kind == "INT":
            self.take()
            return self.ctx.const(int(value))
        if kind == "IDENT":
            self.take()
            if value not in self.ctx.index:
                raise UndeclaredSymbol(value, self.ctx.name)
            return self.ctx.sym(value)
        if kind == "(":
            self.take()
            e = self.expr()
            if self.peek()[0] != ")":
                self.fail([")"])
            self.take()
            return e
        self.fail(["integer", "identifier", "("])


def parse_expr(text: str, ctx: Context) -> RationalExpr:
    """Parse ``text`` into a normalized expression of ``ctx``."""
    return _Parser(text, ctx).parse()
