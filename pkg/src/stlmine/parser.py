"""Recursive-descent parser for the ASCII formula grammar.

::

    formula  := or_expr
    or_expr  := and_expr ('|' and_expr)*
    and_expr := until ('&' until)*
    until    := unary ('U' interval unary)*        (right associative)
    unary    := '!' unary | 'F' interval unary | 'G' interval unary | primary
    primary  := 'true' | '(' IDENT relop NUM ')' | '(' formula ')'
    interval := '[' NUM ',' NUM ']'
    relop    := '>' | '<=' | '>=' | '<'

``NUM`` is a decimal literal or a ``?name`` placeholder. ``>=`` and ``<`` are
read as ``>`` and ``<=``; the robustness of both spellings is the same.
``F``, ``G`` and ``U`` are operators only when followed by ``[``, so they
remain usable as variable names.
"""

from __future__ import annotations

import re

from .stl import GT, LE, And, Atom, Eventually, Formula, Globally, Not, Or, Param, TrueF, Until

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<param>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|[<>!&|(),\[\]])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.']*)
    """,
    re.VERBOSE,
)

_REL = {">": GT, ">=": GT, "<=": LE, "<": LE}


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text[:pos]}<HERE>{text[pos:]}")


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise FormulaSyntaxError(message, self.text, tok[2])

    def expect(self, value):
        tok = self.next()
        if tok[1] != value:
            self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def is_temporal(self, name):
        k, v, _ = self.peek()
        return k == "ident" and v == name and self.peek(1)[1] == "["

    def parse(self) -> Formula:
        f = self.or_expr()
        if self.peek()[0] != "eof":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return f

    def or_expr(self):
        f = self.and_expr()
        while self.peek()[1] == "|":
            self.next()
            f = Or(f, self.and_expr())
        return f

    def and_expr(self):
        f = self.until()
        while self.peek()[1] == "&":
            self.next()
            f = And(f, self.until())
        return f

    def until(self):
        left = self.unary()
        if self.is_temporal("U"):
            self.next()
            a, b = self.interval("temporal")
            right = self.until()
            return self._build(Until, a, b, left, right)
        return left

    def unary(self):
        k, v, _ = self.peek()
        if v == "!":
            self.next()
            return Not(self.unary())
        if self.is_temporal("F") or self.is_temporal("G"):
            self.next()
            a, b = self.interval("temporal")
            child = self.unary()
            return self._build(Eventually if v == "F" else Globally, a, b, child)
        return self.primary()

    def _build(self, cls, *args):
        start = self.peek()
        try:
            return cls(*args)
        except ValueError as exc:
            self.error(str(exc), start)

    def primary(self):
        k, v, pos = self.peek()
        if k == "ident" and v == "true":
            self.next()
            return TrueF()
        if v == "(":
            if self.peek(1)[0] == "ident" and self.peek(2)[1] in _REL:
                self.next()
                _, var, _ = self.next()
                rel = _REL[self.next()[1]]
                thr = self.number("threshold")
                self.expect(")")
                return Atom(var, rel, thr)
            self.next()
            f = self.or_expr()
            self.expect(")")
            return f
        if k == "ident" and v in ("F", "G", "U"):
            self.error(f"operator {v!r} must be followed by an interval")
        if k == "eof":
            self.error("unexpected end of input")
        self.error(f"unknown token {v!r}")

    def number(self, kind):
        k, v, _ = tok = self.next()
        if k == "num":
            return float(v)
        if k == "param":
            return Param(v[1:], kind)
        self.error(f"expected a number, found {v or 'end of input'!r}", tok)

    def interval(self, kind):
        self.expect("[")
        start = self.peek()
        a = self.number(kind)
        self.expect(",")
        b = self.number(kind)
        self.expect("]")
        if isinstance(a, float) and a < 0:
            self.error(f"interval lower bound must be >= 0, got {a:g}", start)
        if isinstance(a, float) and isinstance(b, float) and not a < b:
            self.error(f"interval [{a:g}, {b:g}] must satisfy a < b", start)
        return a, b


def parse(text: str) -> Formula:
    """Parse formula or template text into an AST."""
    return _Parser(text).parse()
