"""STL abstract syntax.

Formulas are immutable trees of frozen dataclasses. The same node classes
describe concrete formulas (all thresholds and interval endpoints are floats)
and parametric templates, where any of those numbers may be a :class:`Param`
placeholder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Union

GT = ">"
LE = "<="
RELATIONS = (GT, LE)


@dataclass(frozen=True, order=True)
class Param:
    """Named placeholder for a threshold or a temporal bound."""

    name: str
    kind: str = field(default="threshold", compare=False)

    def __post_init__(self):
        if self.kind not in ("threshold", "temporal"):
            raise ValueError(f"unknown placeholder kind {self.kind!r}")


Number = Union[float, Param]


def _is_num(v) -> bool:
    return not isinstance(v, Param)


class Formula:
    """Base class of all STL nodes."""

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self) -> str:
        return format_formula(self)

    # operator sugar for building formulas in code
    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    var: str
    rel: str
    threshold: Number

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}, got {self.rel!r}")
        if isinstance(self.threshold, Param):
            if self.threshold.kind != "threshold":
                raise ValueError(f"temporal placeholder {self.threshold.name!r} used as a threshold")
        else:
            object.__setattr__(self, "threshold", float(self.threshold))


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


def _check_interval(a, b):
    for v in (a, b):
        if isinstance(v, Param) and v.kind != "temporal":
            raise ValueError(f"threshold placeholder {v.name!r} used as a time bound")
    if _is_num(a) and a < 0:
        raise ValueError(f"interval lower bound must be >= 0, got {a}")
    if _is_num(a) and _is_num(b) and not a < b:
        raise ValueError(f"interval [{a}, {b}] must satisfy a < b")


@dataclass(frozen=True)
class Eventually(Formula):
    a: Number
    b: Number
    child: Formula

    def __post_init__(self):
        _normalize_bounds(self)

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Globally(Formula):
    a: Number
    b: Number
    child: Formula

    def __post_init__(self):
        _normalize_bounds(self)

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Until(Formula):
    a: Number
    b: Number
    left: Formula
    right: Formula

    def __post_init__(self):
        _normalize_bounds(self)

    def children(self):
        return (self.left, self.right)


def _normalize_bounds(node):
    for name in ("a", "b"):
        v = getattr(node, name)
        if _is_num(v):
            object.__setattr__(node, name, float(v))
    _check_interval(node.a, node.b)


TEMPORAL = (Eventually, Globally, Until)
UNARY = (Not, Eventually, Globally)
BINARY = (And, Or, Until)


# ---------------------------------------------------------------------------
# structural helpers

def size(f: Formula) -> int:
    """Number of nodes in the tree."""
    return 1 + sum(size(c) for c in f.children())


def depth(f: Formula) -> int:
    return 1 + max((depth(c) for c in f.children()), default=0)


Path = tuple[int, ...]


def iter_nodes(f: Formula, path: Path = ()) -> Iterator[tuple[Path, Formula]]:
    """Pre-order traversal yielding ``(path, node)``; a path is a tuple of child indices."""
    yield path, f
    for i, c in enumerate(f.children()):
        yield from iter_nodes(c, path + (i,))


def get_node(f: Formula, path: Path) -> Formula:
    for i in path:
        f = f.children()[i]
    return f


def with_children(node: Formula, children) -> Formula:
    """Copy of ``node`` with its children replaced."""
    children = tuple(children)
    if isinstance(node, (TrueF, Atom)):
        return node
    if isinstance(node, Not):
        return Not(children[0])
    if isinstance(node, And):
        return And(*children)
    if isinstance(node, Or):
        return Or(*children)
    if isinstance(node, Eventually):
        return Eventually(node.a, node.b, children[0])
    if isinstance(node, Globally):
        return Globally(node.a, node.b, children[0])
    if isinstance(node, Until):
        return Until(node.a, node.b, *children)
    raise TypeError(f"not a formula node: {node!r}")


def replace_at(f: Formula, path: Path, new: Formula) -> Formula:
    if not path:
        return new
    kids = list(f.children())
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return with_children(f, kids)


def variables(f: Formula) -> set[str]:
    return {n.var for _, n in iter_nodes(f) if isinstance(n, Atom)}


def params(f: Formula) -> list[Param]:
    """Placeholders in order of first appearance (pre-order, ``a`` before ``b``)."""
    seen: dict[str, Param] = {}
    for _, n in iter_nodes(f):
        if isinstance(n, TEMPORAL):
            vals = (n.a, n.b)
        elif isinstance(n, Atom):
            vals = (n.threshold,)
        else:
            continue
        for v in vals:
            if isinstance(v, Param):
                prev = seen.setdefault(v.name, v)
                if prev.kind != v.kind:
                    raise ValueError(f"placeholder {v.name!r} used both as threshold and time bound")
    return list(seen.values())


def is_concrete(f: Formula) -> bool:
    return not params(f)


# ---------------------------------------------------------------------------
# negation normal form and threshold translation

def negate_atom(atom: Atom) -> Atom:
    return Atom(atom.var, LE if atom.rel == GT else GT, atom.threshold)


def nnf(f: Formula) -> Formula:
    """Push negations down to the atoms.

    Negated atoms flip their relation, F and G are dual, And and Or are dual.
    The grammar has no release operator, so a negated Until keeps its ``Not``
    (with the Until's operands in NNF); ``Not(True)`` is also kept.
    """
    return _nnf(f, False)


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, Not):
        return _nnf(f.child, not neg)
    if isinstance(f, TrueF):
        return Not(f) if neg else f
    if isinstance(f, Atom):
        return negate_atom(f) if neg else f
    if isinstance(f, And):
        l, r = _nnf(f.left, neg), _nnf(f.right, neg)
        return Or(l, r) if neg else And(l, r)
    if isinstance(f, Or):
        l, r = _nnf(f.left, neg), _nnf(f.right, neg)
        return And(l, r) if neg else Or(l, r)
    if isinstance(f, Eventually):
        c = _nnf(f.child, neg)
        return Globally(f.a, f.b, c) if neg else Eventually(f.a, f.b, c)
    if isinstance(f, Globally):
        c = _nnf(f.child, neg)
        return Eventually(f.a, f.b, c) if neg else Globally(f.a, f.b, c)
    if isinstance(f, Until):
        u = Until(f.a, f.b, _nnf(f.left, False), _nnf(f.right, False))
        return Not(u) if neg else u
    raise TypeError(f"not a formula node: {f!r}")


def is_nnf(f: Formula) -> bool:
    for _, n in iter_nodes(f):
        if isinstance(n, Not) and not isinstance(n.child, (Until, TrueF)):
            return False
        if isinstance(n, Not) and isinstance(n.child, Until) and not (
            is_nnf(n.child.left) and is_nnf(n.child.right)
        ):
            return False
    return True


class NotNNFError(ValueError):
    pass


def shift(f: Formula, c: float) -> Formula:
    """Translate every atom so that the robustness drops by exactly ``c``.

    ``x > k`` becomes ``x > k + c`` and ``x <= k`` becomes ``x <= k - c``.
    Below a ``Not`` (allowed only over Until or True) the translation flips sign.
    """
    if not is_nnf(f):
        raise NotNNFError("shift requires a formula in negation normal form; apply nnf() first")
    return _shift(f, float(c))


def _shift(f: Formula, c: float) -> Formula:
    if c == 0:
        return f
    if isinstance(f, TrueF):
        return f
    if isinstance(f, Atom):
        if isinstance(f.threshold, Param):
            raise ValueError("cannot shift a template atom; instantiate it first")
        k = f.threshold + c if f.rel == GT else f.threshold - c
        return Atom(f.var, f.rel, k)
    if isinstance(f, Not):
        return Not(_shift(f.child, -c))
    return with_children(f, [_shift(ch, c) for ch in f.children()])


# ---------------------------------------------------------------------------
# canonical text

def format_number(v: float) -> str:
    if math.isfinite(v) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _num(v: Number) -> str:
    return "?" + v.name if isinstance(v, Param) else format_number(v)


def format_formula(f: Formula) -> str:
    """Canonical fully parenthesized text that :func:`parse` reads back."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, Atom):
        return f"({f.var} {f.rel} {_num(f.threshold)})"
    if isinstance(f, Not):
        return "!" + format_formula(f.child)
    if isinstance(f, And):
        return f"({format_formula(f.left)} & {format_formula(f.right)})"
    if isinstance(f, Or):
        return f"({format_formula(f.left)} | {format_formula(f.right)})"
    if isinstance(f, Eventually):
        return f"F[{_num(f.a)},{_num(f.b)}]{format_formula(f.child)}"
    if isinstance(f, Globally):
        return f"G[{_num(f.a)},{_num(f.b)}]{format_formula(f.child)}"
    if isinstance(f, Until):
        return f"({format_formula(f.left)} U[{_num(f.a)},{_num(f.b)}] {format_formula(f.right)})"
    raise TypeError(f"not a formula node: {f!r}")
