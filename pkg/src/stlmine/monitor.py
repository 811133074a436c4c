"""Quantitative (robustness) semantics on the sampling grid.

Temporal operators quantify over the samples ``j`` with ``t_j`` in
``[t_i + a, t_i + b]``; nothing is interpolated. An empty window gives
``-inf`` for a supremum and ``+inf`` for an infimum.

The evaluator works on a stack of traces at once (``values`` of shape
``(traces, variables, samples)``) and only computes the prefix of each
sub-signal that its parent needs, so evaluating at ``i = 0`` touches at most
the samples inside the formula's time horizon.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .stl import GT, And, Atom, Eventually, Formula, Globally, Not, Or, Param, TrueF, Until
from .trace import Trace

# relative slack when mapping interval endpoints onto grid indices
GRID_TOL = 1e-9


class UnknownVariableError(KeyError):
    pass


def window(a: float, b: float, dt: float) -> tuple[int, int]:
    """Sample offsets ``(lo, hi)`` covered by the time interval ``[a, b]``."""
    lo = math.ceil(a / dt - GRID_TOL)
    hi = math.floor(b / dt + GRID_TOL) if math.isfinite(b) else 2**62
    return max(lo, 0), hi


def _signal(f: Formula, X: np.ndarray, index: dict[str, int], dt: float, n: int) -> np.ndarray:
    """Robustness at sample indices ``0..n-1`` for every trace, shape ``(M, n)``."""
    M, _, N = X.shape
    if isinstance(f, Atom):
        k = f.threshold
        if isinstance(k, Param):
            raise ValueError(f"template placeholder ?{k.name} must be instantiated before monitoring")
        try:
            row = X[:, index[f.var], :n]
        except KeyError:
            raise UnknownVariableError(f"trace has no variable {f.var!r}") from None
        return row - k if f.rel == GT else k - row
    if isinstance(f, TrueF):
        return np.full((M, n), np.inf)
    if isinstance(f, Not):
        return -_signal(f.child, X, index, dt, n)
    if isinstance(f, And):
        return np.minimum(_signal(f.left, X, index, dt, n), _signal(f.right, X, index, dt, n))
    if isinstance(f, Or):
        return np.maximum(_signal(f.left, X, index, dt, n), _signal(f.right, X, index, dt, n))
    if isinstance(f, (Eventually, Globally, Until)):
        if isinstance(f.a, Param) or isinstance(f.b, Param):
            raise ValueError("template time bounds must be instantiated before monitoring")
        lo, hi = window(f.a, f.b, dt)
        hi = min(hi, N - 1)
        if lo > hi:
            # nothing of the child is ever inside a window
            fill = -np.inf if not isinstance(f, Globally) else np.inf
            _touch(f, X, index, dt)
            return np.full((M, n), fill)
        m = min(n + hi, N)
        if isinstance(f, Until):
            return _until(
                _signal(f.left, X, index, dt, m), _signal(f.right, X, index, dt, m), lo, hi, n
            )
        return _sliding(_signal(f.child, X, index, dt, m), lo, hi, n, isinstance(f, Eventually))
    raise TypeError(f"not a formula node: {f!r}")


def _touch(f, X, index, dt):
    # still validate variables of subformulas that fall outside every window
    for c in f.children():
        _signal(c, X[:, :, :1], index, dt, 1)


def _running(seg: np.ndarray, w: int, is_sup: bool) -> np.ndarray:
    """Sliding max (or min) of width ``w`` along the last axis.

    Doubling builds the extremum over the largest power-of-two width ``p <= w``
    in ``log2 w`` passes; two overlapping windows of width ``p`` then cover
    each width-``w`` window. Only max/min are applied, so the result is exact.
    """
    n_out = seg.shape[1] - w + 1
    op = np.maximum if is_sup else np.minimum
    cur, p = seg, 1
    while 2 * p <= w:
        k = cur.shape[1] - p
        cur = op(cur[:, :k], cur[:, p : p + k])
        p *= 2
    if p == w:
        return cur[:, :n_out].copy()
    return op(cur[:, :n_out], cur[:, w - p : w - p + n_out])


def _sliding(c: np.ndarray, lo: int, hi: int, n: int, is_sup: bool) -> np.ndarray:
    M, m = c.shape
    fill = -np.inf if is_sup else np.inf
    need = n + hi
    if m < need:
        c = np.concatenate([c, np.full((M, need - m), fill)], axis=1)
    seg = c[:, lo:need]
    w = hi - lo + 1
    if n == 1:
        seg = seg[:, :w]
        return (seg.max(axis=1) if is_sup else seg.min(axis=1))[:, None]
    return _running(seg, w, is_sup)


def _until(left: np.ndarray, right: np.ndarray, lo: int, hi: int, n: int) -> np.ndarray:
    """Bounded until at indices ``0..n-1``.

    The prefix ``[i, i + lo)`` of the left operand is a plain sliding infimum.
    The remaining window of width ``w = hi - lo + 1`` is built by doubling:
    with ``U_p(s)`` the until over offsets ``[0, p)`` and ``G_p(s)`` the
    infimum of the left operand over ``[s, s + p)``,

        U_(p+q)(s) = max(U_p(s), min(G_p(s), U_q(s + p)))

    so the cost is ``O(n log w)`` per trace and only min/max are applied.
    """
    M, m = right.shape
    if n == 1:
        # a single start index: one running infimum over the left operand
        jmax = min(hi, m - 1)
        if lo > jmax:
            return np.full((M, 1), -np.inf)
        excl = np.empty((M, jmax + 1))
        excl[:, 0] = np.inf
        np.minimum.accumulate(left[:, :jmax], axis=1, out=excl[:, 1:])
        return np.minimum(right[:, lo : jmax + 1], excl[:, lo:]).max(axis=1, keepdims=True)
    w = hi - lo + 1
    length = n + w - 1
    # samples past the end of the trace never satisfy the right operand
    R = np.full((M, length), -np.inf)
    L = np.full((M, length), np.inf)
    avail = max(0, min(m - lo, length))
    R[:, :avail] = right[:, lo : lo + avail]
    L[:, :avail] = left[:, lo : lo + avail]

    acc_u = acc_g = None
    off = 0
    up, gp, p = R, L, 1
    remaining = w
    while True:
        if remaining & 1:
            seg_u = up[:, off : off + n]
            seg_g = gp[:, off : off + n]
            if acc_u is None:
                acc_u, acc_g = seg_u.copy(), seg_g.copy()
            else:
                acc_u = np.maximum(acc_u, np.minimum(acc_g, seg_u))
                acc_g = np.minimum(acc_g, seg_g)
            off += p
        remaining >>= 1
        if not remaining:
            break
        k = up.shape[1] - p
        up = np.maximum(up[:, :k], np.minimum(gp[:, :k], up[:, p : p + k]))
        gp = np.minimum(gp[:, :k], gp[:, p : p + k])
        p *= 2

    if lo == 0:
        return acc_u
    pre = np.full((M, n + lo - 1), np.inf)
    have = min(m, n + lo - 1)
    pre[:, :have] = left[:, :have]
    return np.minimum(_running(pre, lo, False), acc_u)


def _stack(traces: Sequence[Trace]):
    first = traces[0]
    for x in traces[1:]:
        if x.variable_names != first.variable_names or x.dt != first.dt or x.n_samples != first.n_samples:
            raise ValueError("traces must share variables, dt and length to be evaluated together")
    return np.stack([x.values for x in traces]), first.variable_names, first.dt


def robustness_array(
    f: Formula, values: np.ndarray, variable_names: Sequence[str], dt: float, i: int = 0
) -> np.ndarray:
    """Robustness at sample ``i`` of every trace in a ``(M, V, N)`` stack."""
    values = np.asarray(values, dtype=np.float64)
    N = values.shape[2]
    if not 0 <= i < N:
        raise IndexError(f"sample index {i} out of range for {N} samples")
    index = {v: k for k, v in enumerate(variable_names)}
    return _signal(f, values, index, dt, i + 1)[:, i]


def robustness_batch(f: Formula, traces: Sequence[Trace], i: int = 0) -> np.ndarray:
    if not traces:
        return np.empty(0)
    values, names, dt = _stack(traces)
    return robustness_array(f, values, names, dt, i)


def robustness(f: Formula, x: Trace, i: int = 0) -> float:
    """Robustness of ``f`` on trace ``x`` at sample index ``i``."""
    return float(robustness_array(f, x.values[None], x.variable_names, x.dt, i)[0])


def robustness_signal(f: Formula, x: Trace) -> np.ndarray:
    """Robustness at every sample index of ``x``."""
    index = {v: k for k, v in enumerate(x.variable_names)}
    return _signal(f, x.values[None], index, x.dt, x.n_samples)[0]


def satisfies(f: Formula, x: Trace) -> bool:
    """Boolean verdict; zero robustness counts as a violation."""
    return robustness(f, x, 0) > 0
