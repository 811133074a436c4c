"""Brute-force robustness: a direct transcription of the recursive definition.

Works sample by sample on plain Python floats, enumerating every index pair
of the Until clause. Deliberately shares nothing with the vectorized monitor.
"""

import math

from stlmine.stl import And, Atom, Eventually, Globally, Not, Or, TrueF, Until

TOL = 1e-9


def _in_window(x, i, j, a, b):
    # t_j in [t_i + a, t_i + b], with the same relative slack as the grid mapping
    gap = (j - i) * x.dt
    return a - TOL * x.dt <= gap <= b + TOL * x.dt


def rho(f, x, i):
    n = x.n_samples
    if isinstance(f, TrueF):
        return math.inf
    if isinstance(f, Atom):
        v = float(x.values[x.variable_names.index(f.var), i])
        return v - f.threshold if f.rel == ">" else f.threshold - v
    if isinstance(f, Not):
        return -rho(f.child, x, i)
    if isinstance(f, And):
        return min(rho(f.left, x, i), rho(f.right, x, i))
    if isinstance(f, Or):
        return max(rho(f.left, x, i), rho(f.right, x, i))
    if isinstance(f, Eventually):
        return max([rho(f.child, x, j) for j in range(n) if _in_window(x, i, j, f.a, f.b)], default=-math.inf)
    if isinstance(f, Globally):
        return min([rho(f.child, x, j) for j in range(n) if _in_window(x, i, j, f.a, f.b)], default=math.inf)
    if isinstance(f, Until):
        best = -math.inf
        for j in range(n):
            if not _in_window(x, i, j, f.a, f.b):
                continue
            inner = math.inf
            for k in range(n):
                if i <= k < j:
                    inner = min(inner, rho(f.left, x, k))
            best = max(best, min(rho(f.right, x, j), inner))
        return best
    raise TypeError(f)
