"""Parametric STL: templates, parameter spaces and instantiation.

A template is an ordinary :class:`~stlmine.stl.Formula` whose thresholds or
interval endpoints may be :class:`~stlmine.stl.Param` placeholders, e.g.
``(x2 > ?k1) U[?a,?b] (x1 <= ?k2)``. A configuration maps placeholder names
to floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from .stl import (
    TEMPORAL,
    Atom,
    Formula,
    Param,
    iter_nodes,
    params,
    with_children,
)

Configuration = dict[str, float]
Bound = Union[str, float]  # a placeholder name or a fixed endpoint


class InvalidConfigurationError(ValueError):
    pass


def check_template(p: Formula) -> list[Param]:
    """Validate placeholder usage; return the placeholders in order."""
    counts: dict[str, int] = {}
    for _, n in iter_nodes(p):
        vals = (n.a, n.b) if isinstance(n, TEMPORAL) else (n.threshold,) if isinstance(n, Atom) else ()
        for v in vals:
            if isinstance(v, Param):
                counts[v.name] = counts.get(v.name, 0) + 1
    dup = sorted(k for k, c in counts.items() if c > 1)
    if dup:
        raise ValueError(f"placeholders used more than once: {dup}")
    return params(p)


def _sub(v, theta):
    if isinstance(v, Param):
        return theta[v.name]
    return v


def _substitute(f: Formula, theta: Mapping[str, float]) -> Formula:
    if isinstance(f, Atom):
        return Atom(f.var, f.rel, _sub(f.threshold, theta)) if isinstance(f.threshold, Param) else f
    kids = [_substitute(c, theta) for c in f.children()]
    if isinstance(f, TEMPORAL):
        a, b = _sub(f.a, theta), _sub(f.b, theta)
        if not a < b:
            raise InvalidConfigurationError(f"interval [{a}, {b}] violates a < b")
        node = type(f)(a, b, *kids)
        return node
    return with_children(f, kids)


def instantiate(p: Formula, theta: Mapping[str, float]) -> Formula:
    """Replace every placeholder of ``p`` by its value in ``theta``."""
    names = {q.name for q in params(p)}
    missing = names - set(theta)
    extra = set(theta) - names
    if missing or extra:
        raise InvalidConfigurationError(
            f"configuration mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}"
        )
    try:
        return _substitute(p, {k: float(v) for k, v in theta.items()})
    except ValueError as exc:
        raise InvalidConfigurationError(str(exc)) from None


# ---------------------------------------------------------------------------
# parameter spaces

@dataclass(frozen=True)
class ParameterSpace:
    """Box domain of a template's placeholders.

    ``names`` fixes the coordinate order used by the unit-cube mapping.
    ``pairs`` lists each temporal operator's ``(a, b)`` endpoints (a name or a
    fixed float) which must satisfy ``a < b``; ``eps_t`` is the minimum
    interval width enforced by :meth:`repair`.
    """

    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    kinds: tuple[str, ...]
    pairs: tuple[tuple[Bound, Bound], ...] = ()
    eps_t: float = 1.0

    def __post_init__(self):
        n = len(self.names)
        if not (len(self.lower) == len(self.upper) == len(self.kinds) == n):
            raise ValueError("names, bounds and kinds must have equal length")
        for name, lo, hi, kind in zip(self.names, self.lower, self.upper, self.kinds):
            if not lo <= hi:
                raise ValueError(f"empty range [{lo}, {hi}] for {name!r}")
            if kind == "temporal" and lo < 0:
                raise ValueError(f"temporal bound {name!r} must be non-negative")

    @property
    def dim(self) -> int:
        return len(self.names)

    def bounds(self, name: str) -> tuple[float, float]:
        i = self.names.index(name)
        return self.lower[i], self.upper[i]

    def midpoint(self) -> Configuration:
        return self.repair({n: 0.5 * (lo + hi) for n, lo, hi in zip(self.names, self.lower, self.upper)})

    def contains(self, theta: Mapping[str, float], tol: float = 1e-12) -> bool:
        if set(theta) != set(self.names):
            return False
        for n, lo, hi in zip(self.names, self.lower, self.upper):
            if not lo - tol <= theta[n] <= hi + tol:
                return False
        for a, b in self.pairs:
            if not _val(a, theta) < _val(b, theta):
                return False
        return True

    def clip(self, theta: Mapping[str, float]) -> Configuration:
        return {n: float(np.clip(theta[n], lo, hi)) for n, lo, hi in zip(self.names, self.lower, self.upper)}

    def repair(self, theta: Mapping[str, float]) -> Configuration:
        """Clip to the box, then fix any ``a >= b`` pair by swapping and nudging."""
        out = self.clip(theta)
        for a, b in self.pairs:
            _repair_pair(out, a, b, self)
        return out

    def to_unit_cube(self, theta: Mapping[str, float]) -> np.ndarray:
        if len(theta) != self.dim or set(theta) != set(self.names):
            raise ValueError(f"expected parameters {list(self.names)}, got {sorted(theta)}")
        u = np.empty(self.dim)
        for i, (n, lo, hi) in enumerate(zip(self.names, self.lower, self.upper)):
            u[i] = 0.0 if hi == lo else (theta[n] - lo) / (hi - lo)
        return u

    def from_unit_cube(self, u) -> Configuration:
        u = np.asarray(u, dtype=float).ravel()
        if u.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}, got {u.shape}")
        u = np.clip(u, 0.0, 1.0)
        theta = {n: lo + ui * (hi - lo) for n, lo, hi, ui in zip(self.names, self.lower, self.upper, u)}
        return self.repair(theta)


def _val(v: Bound, theta) -> float:
    return theta[v] if isinstance(v, str) else float(v)


def _repair_pair(theta: dict, a: Bound, b: Bound, space: ParameterSpace) -> None:
    eps = space.eps_t
    if isinstance(a, str) and isinstance(b, str):
        va, vb = theta[a], theta[b]
        if va > vb:
            va, vb = vb, va
        if vb - va < eps:
            vb = va + eps
        a_lo, _ = space.bounds(a)
        _, b_hi = space.bounds(b)
        if vb > b_hi:
            vb = b_hi
            va = max(vb - eps, a_lo)
        theta[a], theta[b] = va, vb
    elif isinstance(b, str):
        b_lo, b_hi = space.bounds(b)
        theta[b] = min(max(theta[b], float(a) + eps), b_hi)
    elif isinstance(a, str):
        a_lo, _ = space.bounds(a)
        theta[a] = max(min(theta[a], float(b) - eps), a_lo)


def _pairs(p: Formula) -> tuple[tuple[Bound, Bound], ...]:
    out = []
    for _, n in iter_nodes(p):
        if isinstance(n, TEMPORAL) and (isinstance(n.a, Param) or isinstance(n.b, Param)):
            out.append(tuple(v.name if isinstance(v, Param) else v for v in (n.a, n.b)))
    return tuple(out)


def make_space(
    p: Formula,
    threshold_bounds: Mapping[str, tuple[float, float]],
    horizon: float,
    eps_t: float,
) -> ParameterSpace:
    """Space for ``p`` given per-variable threshold ranges and a time horizon."""
    ps = check_template(p)
    var_of = {
        n.threshold.name: n.var for _, n in iter_nodes(p) if isinstance(n, Atom) and isinstance(n.threshold, Param)
    }
    lower, upper = [], []
    for q in ps:
        if q.kind == "temporal":
            lo, hi = 0.0, float(horizon)
        else:
            lo, hi = threshold_bounds[var_of[q.name]]
        lower.append(float(lo))
        upper.append(float(hi))
    return ParameterSpace(
        tuple(q.name for q in ps),
        tuple(lower),
        tuple(upper),
        tuple(q.kind for q in ps),
        _pairs(p),
        float(min(eps_t, horizon)) if horizon > 0 else float(eps_t),
    )


def default_space(p: Formula, dataset) -> ParameterSpace:
    """Data-envelope space: thresholds span each variable's observed range,
    time bounds span ``[0, horizon]`` with one grid step as minimum width."""
    if dataset.size == 0:
        raise ValueError("cannot derive a parameter space from an empty dataset")
    return make_space(p, dataset.envelope(), dataset.horizon, dataset.dt)


# ---------------------------------------------------------------------------
# canonical placeholder names

def abstract(f: Formula, keep_values: bool = True) -> tuple[Formula, Configuration]:
    """Turn every threshold and time bound into a placeholder.

    Placeholders get canonical names in pre-order: ``k0, k1, ...`` for
    thresholds and ``a0, b0, a1, b1, ...`` for the temporal operators. Numeric
    values found in ``f`` are returned as a (partial) configuration, so a
    concrete formula maps to its template plus the values that reproduce it.
    """
    counter = {"k": 0, "t": 0}
    values: Configuration = {}

    def conv(v, name):
        if not isinstance(v, Param) and keep_values:
            values[name] = float(v)
        return name

    def walk(n: Formula) -> Formula:
        if isinstance(n, Atom):
            name = f"k{counter['k']}"
            counter["k"] += 1
            conv(n.threshold, name)
            return Atom(n.var, n.rel, Param(name, "threshold"))
        if isinstance(n, TEMPORAL):
            t = counter["t"]
            counter["t"] += 1
            a, b = f"a{t}", f"b{t}"
            conv(n.a, a)
            conv(n.b, b)
            kids = [walk(c) for c in n.children()]
            return type(n)(Param(a, "temporal"), Param(b, "temporal"), *kids)
        return with_children(n, [walk(c) for c in n.children()])

    return walk(f), values


def uniquify(f: Formula) -> Formula:
    """Rename placeholders canonically, leaving fixed numbers untouched."""
    counter = {"k": 0, "t": 0}

    def walk(n: Formula) -> Formula:
        if isinstance(n, Atom):
            name = f"k{counter['k']}"
            counter["k"] += 1
            return Atom(n.var, n.rel, Param(name, "threshold")) if isinstance(n.threshold, Param) else n
        if isinstance(n, TEMPORAL):
            t = counter["t"]
            counter["t"] += 1
            a = Param(f"a{t}", "temporal") if isinstance(n.a, Param) else n.a
            b = Param(f"b{t}", "temporal") if isinstance(n.b, Param) else n.b
            return type(n)(a, b, *[walk(c) for c in n.children()])
        return with_children(n, [walk(c) for c in n.children()])

    return walk(f)


def canonical(p: Formula) -> Formula:
    """Template with canonical placeholder names and no fixed numbers."""
    return abstract(p, keep_values=False)[0]


def warm_configuration(partial: Mapping[str, float], space: ParameterSpace) -> Optional[Configuration]:
    """Complete a partial configuration with space midpoints and repair it.

    Returns ``None`` when ``partial`` holds none of the space's names.
    """
    if not any(n in partial for n in space.names):
        return None
    mid = space.midpoint()
    theta = {n: float(partial.get(n, mid[n])) for n in space.names}
    return space.repair(theta)
