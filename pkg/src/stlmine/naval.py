"""Synthetic maritime-surveillance trajectories.

Every vessel starts in the top-right corner of the ``(x1, x2)`` plane.

* normal: heads west to the port, keeping ``x2`` well above ``X2_LINE``, and
  crosses below ``x1 = X1_LINE`` inside the ``[49, 287]`` time window;
* red anomaly: first heads south, dropping below ``X2_LINE`` while still
  east of ``X1_LINE``, and only then turns west;
* blue anomaly: stays north of ``X2_LINE`` but turns back before reaching
  ``X1_LINE``.

Time runs over ``[0, horizon]`` (300 units, 61 samples, ``dt = 5``). Noise is
iid Gaussian on each coordinate; every waypoint keeps a geometric margin of
at least ``margin`` from the two lines, so the formula
``(x2 > 22.46) U[49,287] (x1 <= 31.65)`` separates the classes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .monitor import robustness_array
from .parser import parse
from .trace import NEGATIVE, POSITIVE, Trace

X1_LINE = 31.65
X2_LINE = 22.46
REFERENCE_FORMULA = "(x2 > 22.46) U[49,287] (x1 <= 31.65)"
VARIABLES = ("x1", "x2")


class GeneratorError(RuntimeError):
    pass


@dataclass(frozen=True)
class NavalGenConfig:
    n_normal: int = 1000
    n_anomalous_red: int = 500
    n_anomalous_blue: int = 500
    samples_per_trace: int = 61
    horizon: float = 300.0
    noise_std: float = 0.3
    margin: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if min(self.n_normal, self.n_anomalous_red, self.n_anomalous_blue) < 0:
            raise ValueError("trace counts must be non-negative")
        if self.samples_per_trace < 2:
            raise ValueError("need at least 2 samples per trace")
        if self.margin < 3 * self.noise_std:
            raise ValueError("margin must be at least 3 noise standard deviations")

    @property
    def dt(self) -> float:
        return self.horizon / (self.samples_per_trace - 1)


def _path(times, waypoints):
    """Piecewise-linear interpolation through ``(t, x1, x2)`` waypoints."""
    w = np.asarray(waypoints, float)
    return np.vstack([np.interp(times, w[:, 0], w[:, 1]), np.interp(times, w[:, 0], w[:, 2])])


def _start(rng):
    return rng.uniform(55.0, 65.0), rng.uniform(40.0, 48.0)


def _normal(rng, cfg, times):
    x1s, x2s = _start(rng)
    x1e = rng.uniform(10.0, 24.0)
    x2e = rng.uniform(X2_LINE + cfg.margin + 3.0, 36.0)
    # choose arrival time so that x1 passes X1_LINE - margin well inside [49, 287]
    frac = (x1s - (X1_LINE - cfg.margin)) / (x1s - x1e)
    t_cross = rng.uniform(90.0, 230.0)
    t_end = t_cross / frac
    return _path(times, [(0.0, x1s, x2s), (t_end, x1e, x2e), (max(t_end, times[-1]) + 1, x1e, x2e)])


def _red(rng, cfg, times):
    x1s, x2s = _start(rng)
    t1 = rng.uniform(50.0, 140.0)
    x1m = rng.uniform(X1_LINE + cfg.margin + 6.0, 50.0)
    x2m = rng.uniform(8.0, X2_LINE - cfg.margin - 1.0)
    t2 = rng.uniform(max(t1 + 60.0, 200.0), 300.0)
    x1e = rng.uniform(10.0, 28.0)
    x2e = rng.uniform(12.0, 34.0)
    waypoints = [(0.0, x1s, x2s), (t1, x1m, x2m), (t1 + 10.0, x1m, x2m), (t2, x1e, x2e)]
    return _path(times, waypoints + [(max(t2, times[-1]) + 1, x1e, x2e)])


def _blue(rng, cfg, times):
    x1s, x2s = _start(rng)
    t1 = rng.uniform(100.0, 200.0)
    x1m = rng.uniform(X1_LINE + cfg.margin + 4.0, 46.0)
    x2m = rng.uniform(X2_LINE + cfg.margin + 5.0, 40.0)
    x1e = rng.uniform(45.0, 62.0)
    x2e = rng.uniform(34.0, 46.0)
    return _path(times, [(0.0, x1s, x2s), (t1, x1m, x2m), (times[-1] + 1, x1e, x2e)])


def generate_naval(cfg: NavalGenConfig = NavalGenConfig()) -> Dataset:
    """Generate the labeled dataset; fails if the reference formula does not separate it."""
    rng = np.random.default_rng(cfg.seed)
    times = np.linspace(0.0, cfg.horizon, cfg.samples_per_trace)
    traces = {POSITIVE: [], NEGATIVE: []}
    for kind, n, make, label in (
        ("normal", cfg.n_normal, _normal, POSITIVE),
        ("red", cfg.n_anomalous_red, _red, NEGATIVE),
        ("blue", cfg.n_anomalous_blue, _blue, NEGATIVE),
    ):
        for i in range(n):
            clean = make(rng, cfg, times)
            noisy = clean + rng.normal(0.0, cfg.noise_std, clean.shape)
            traces[label].append(Trace(VARIABLES, noisy, dt=cfg.dt, label=label, name=f"{kind}_{i:04d}"))
    d = Dataset(
        tuple(traces[POSITIVE]),
        tuple(traces[NEGATIVE]),
        name="naval",
        manifest={
            "name": "naval",
            "generator": "naval",
            "seed": cfg.seed,
            "units": {"time": "generator time units (horizon 300, dt 5)", "x1": "position", "x2": "position"},
            "config": {k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
        },
    )
    _check_labels(d)
    return d


def _check_labels(d: Dataset) -> None:
    f = parse(REFERENCE_FORMULA)
    for values, want_pos, label in ((d.pos_values, True, POSITIVE), (d.neg_values, False, NEGATIVE)):
        if len(values) == 0:
            continue
        r = robustness_array(f, values, VARIABLES, d.dt)
        bad = np.flatnonzero(r <= 0) if want_pos else np.flatnonzero(r >= 0)
        if bad.size:
            raise GeneratorError(f"{bad.size} {label} traces are misclassified by {REFERENCE_FORMULA}")
