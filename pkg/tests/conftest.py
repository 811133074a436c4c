import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from stlmine.stl import And, Atom, Eventually, Globally, Not, Or, TrueF, Until  # noqa: E402
from stlmine.trace import Trace  # noqa: E402

VARS = ("x", "y")


def random_formula(rng, depth, allow_not=True, allow_true=True, n_vars=2):
    """Random concrete formula of depth <= ``depth`` (numpy Generator driven)."""
    if depth <= 1 or rng.random() < 0.25:
        if allow_true and rng.random() < 0.05:
            return TrueF()
        return Atom(VARS[rng.integers(n_vars)], (">", "<=")[rng.integers(2)], float(np.round(rng.normal(0, 2), 2)))
    kinds = ["and", "or", "F", "G", "U"] + (["not"] if allow_not else [])
    kind = kinds[rng.integers(len(kinds))]
    sub = lambda: random_formula(rng, depth - 1, allow_not, allow_true, n_vars)  # noqa: E731
    if kind == "not":
        return Not(sub())
    if kind == "and":
        return And(sub(), sub())
    if kind == "or":
        return Or(sub(), sub())
    a = float(rng.integers(0, 5))
    b = a + float(rng.integers(1, 6))
    if rng.random() < 0.3:
        a, b = a + 0.5, b + 0.25
    if kind == "F":
        return Eventually(a, b, sub())
    if kind == "G":
        return Globally(a, b, sub())
    return Until(a, b, sub(), sub())


def random_trace(rng, n=None, dt=None):
    n = n or int(rng.integers(2, 11))
    dt = dt or float(rng.choice([1.0, 0.5, 2.0]))
    return Trace(VARS, np.round(rng.normal(0, 2, (2, n)), 2), dt=dt)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# hypothesis strategies --------------------------------------------------------

names = st.sampled_from(["x", "y", "x1", "speed"])
numbers = st.floats(-100, 100, allow_nan=False).map(lambda v: round(v, 3))


def intervals():
    return st.tuples(st.integers(0, 20), st.integers(1, 20)).map(lambda t: (float(t[0]), float(t[0] + t[1])))


atoms = st.builds(Atom, names, st.sampled_from([">", "<="]), numbers)


def formulas(max_leaves=8):
    def extend(children):
        return st.one_of(
            st.builds(Not, children),
            st.builds(And, children, children),
            st.builds(Or, children, children),
            st.builds(lambda iv, c: Eventually(iv[0], iv[1], c), intervals(), children),
            st.builds(lambda iv, c: Globally(iv[0], iv[1], c), intervals(), children),
            st.builds(lambda iv, l, r: Until(iv[0], iv[1], l, r), intervals(), children, children),
        )

    return st.recursive(st.one_of(atoms, st.just(TrueF())), extend, max_leaves=max_leaves)


def wide_trace(seed):
    """Trace carrying every variable name the hypothesis strategies draw from."""
    rng = np.random.default_rng(seed)
    x = random_trace(rng)
    return Trace(("x", "y", "x1", "speed"), np.vstack([x.values, x.values[::-1] * 0.5]), dt=x.dt)


# acceptance report --------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, printed at the end of the run."""

    def record(criterion: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
