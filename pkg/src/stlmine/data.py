"""Labeled trace sets, CSV directory I/O and robustness statistics.

On disk a dataset is a directory::

    <root>/positive/*.csv
    <root>/negative/*.csv
    <root>/manifest.json        (optional)

and every CSV has the header ``time,<var1>,...,<varn>`` with uniformly
spaced, increasing times.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .monitor import robustness_array
from .stl import Formula
from .trace import NEGATIVE, POSITIVE, Trace

DT_RTOL = 1e-6


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    positives: tuple[Trace, ...]
    negatives: tuple[Trace, ...]
    name: str = ""
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        pos, neg = tuple(self.positives), tuple(self.negatives)
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)
        all_traces = pos + neg
        if not all_traces:
            return
        ref = all_traces[0]
        for x in all_traces[1:]:
            if x.variable_names != ref.variable_names:
                raise DatasetError(f"variable mismatch: {x.variable_names} vs {ref.variable_names}")
            if x.n_samples != ref.n_samples:
                raise DatasetError(f"length mismatch: {x.n_samples} vs {ref.n_samples} samples ({x.name})")
            if not math.isclose(x.dt, ref.dt, rel_tol=DT_RTOL):
                raise DatasetError(f"time step mismatch: {x.dt} vs {ref.dt} ({x.name})")

    @property
    def size(self) -> int:
        return len(self.positives) + len(self.negatives)

    def _ref(self) -> Trace:
        if self.size == 0:
            raise DatasetError("empty dataset")
        return (self.positives + self.negatives)[0]

    @property
    def variable_names(self) -> tuple[str, ...]:
        return self._ref().variable_names

    @property
    def dt(self) -> float:
        return self._ref().dt

    @property
    def n_samples(self) -> int:
        return self._ref().n_samples

    @property
    def horizon(self) -> float:
        return self._ref().horizon

    @cached_property
    def pos_values(self) -> np.ndarray:
        return _stack(self.positives, self)

    @cached_property
    def neg_values(self) -> np.ndarray:
        return _stack(self.negatives, self)

    def envelope(self) -> dict[str, tuple[float, float]]:
        """Per-variable ``(min, max)`` over every sample of every trace."""
        allv = np.concatenate([self.pos_values, self.neg_values])
        return {v: (float(allv[:, i].min()), float(allv[:, i].max())) for i, v in enumerate(self.variable_names)}

    def robustness(self, f: Formula) -> tuple[np.ndarray, np.ndarray]:
        """Robustness at time 0 of every positive and every negative trace."""
        names, dt = self.variable_names, self.dt
        return (
            robustness_array(f, self.pos_values, names, dt),
            robustness_array(f, self.neg_values, names, dt),
        )

    def subset(self, pos_idx: Sequence[int], neg_idx: Sequence[int]) -> "Dataset":
        return Dataset(
            tuple(self.positives[i] for i in pos_idx),
            tuple(self.negatives[i] for i in neg_idx),
            self.name,
            self.manifest,
        )

    def swapped(self) -> "Dataset":
        return Dataset(self.negatives, self.positives, self.name, self.manifest)


def _stack(traces, d: Dataset) -> np.ndarray:
    if not traces:
        return np.empty((0, len(d.variable_names), d.n_samples))
    return np.stack([x.values for x in traces])


# ---------------------------------------------------------------------------
# CSV I/O

def read_trace(path, label: Optional[str] = None) -> Trace:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows or [h.strip() for h in rows[0]][:1] != ["time"]:
        raise DatasetError(f"{path}: header must start with 'time'")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header) or data.shape[0] < 2:
        raise DatasetError(f"{path}: expected at least 2 rows of {len(header)} columns")
    t = data[:, 0]
    steps = np.diff(t)
    dt = float((t[-1] - t[0]) / (len(t) - 1))
    if dt <= 0 or not np.allclose(steps, dt, rtol=DT_RTOL, atol=0):
        raise DatasetError(f"{path}: times must be increasing and uniformly spaced")
    try:
        return Trace(tuple(header[1:]), data[:, 1:].T, dt=dt, t0=float(t[0]), label=label, name=path.stem)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc


def write_trace(x: Trace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("time",) + x.variable_names)
        for t, col in zip(x.times, x.values.T):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in col])


def load_dataset(path) -> Dataset:
    """Read a ``positive/`` + ``negative/`` CSV directory."""
    root = Path(path)
    classes = {}
    for label in (POSITIVE, NEGATIVE):
        sub = root / label
        files = sorted(sub.glob("*.csv")) if sub.is_dir() else []
        if not files:
            raise DatasetError(f"no traces in {sub}")
        classes[label] = tuple(read_trace(f, label) for f in files)
    manifest = {}
    mpath = root / "manifest.json"
    if mpath.exists():
        manifest = json.loads(mpath.read_text())
    return Dataset(classes[POSITIVE], classes[NEGATIVE], manifest.get("name", root.name), manifest)


def save_dataset(d: Dataset, path, manifest: Optional[dict] = None) -> Path:
    root = Path(path)
    for label, traces in ((POSITIVE, d.positives), (NEGATIVE, d.negatives)):
        sub = root / label
        sub.mkdir(parents=True, exist_ok=True)
        width = max(4, len(str(len(traces))))
        for i, x in enumerate(traces):
            write_trace(x, sub / (f"{i:0{width}d}_{x.name}.csv" if x.name else f"{i:0{width}d}.csv"))
    m = dict(d.manifest)
    m.update(manifest or {})
    if m:
        (root / "manifest.json").write_text(json.dumps(m, indent=2, sort_keys=True) + "\n")
    return root


# ---------------------------------------------------------------------------
# statistics

@dataclass(frozen=True)
class RobustnessStats:
    mean: float
    std: float  # population standard deviation
    n: int
    finite: bool = True

    @classmethod
    def from_values(cls, values) -> "RobustnessStats":
        r = np.asarray(values, dtype=float)
        if r.size == 0:
            raise ValueError("robustness statistics need at least one value")
        if not np.all(np.isfinite(r)):
            with np.errstate(invalid="ignore"):
                mean = float(np.mean(r))
            return cls(mean, math.nan, r.size, False)
        mean = float(np.mean(r))
        std = float(np.sqrt(np.mean((r - mean) ** 2)))
        return cls(mean, std, r.size, True)


def robustness_stats(f: Formula, traces: Sequence[Trace]) -> RobustnessStats:
    """Mean and population std of the time-0 robustness over ``traces``."""
    if not traces:
        raise ValueError("robustness statistics need at least one trace")
    values = np.stack([x.values for x in traces])
    r = robustness_array(f, values, traces[0].variable_names, traces[0].dt)
    return RobustnessStats.from_values(r)


@dataclass(frozen=True)
class Confusion:
    """Counts with positives as the 'good' class: a positive that falsifies
    the formula is a false negative, a negative that satisfies it a false positive."""

    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def misclassification(self) -> float:
        return (self.fn + self.fp) / self.total

    @property
    def false_positive_rate(self) -> float:
        n = self.fp + self.tn
        return self.fp / n if n else 0.0

    @property
    def false_negative_rate(self) -> float:
        n = self.tp + self.fn
        return self.fn / n if n else 0.0

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


def confusion(f: Formula, d: Dataset) -> Confusion:
    if d.size == 0:
        raise DatasetError("empty dataset")
    rp, rn = d.robustness(f)
    sat_p = int(np.count_nonzero(rp > 0))
    sat_n = int(np.count_nonzero(rn > 0))
    return Confusion(tp=sat_p, fn=len(rp) - sat_p, fp=sat_n, tn=len(rn) - sat_n)


def misclassification_rate(f: Formula, d: Dataset) -> float:
    return confusion(f, d).misclassification
