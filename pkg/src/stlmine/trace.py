from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True, eq=False)
class Trace:
    """A uniformly sampled multivariate trajectory.

    ``values`` has one row per variable and one column per sample; sample ``j``
    sits at time ``t0 + j * dt``.
    """

    variable_names: tuple[str, ...]
    values: np.ndarray
    dt: float = 1.0
    t0: float = 0.0
    label: Optional[str] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        names = tuple(self.variable_names)
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[None, :]
        if vals.ndim != 2:
            raise ValueError("values must be a (variables, samples) matrix")
        if len(names) != vals.shape[0]:
            raise ValueError(f"{len(names)} variable names for {vals.shape[0]} rows")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        if vals.shape[1] < 2:
            raise ValueError("a trace needs at least 2 samples")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.label not in (None, POSITIVE, NEGATIVE):
            raise ValueError(f"label must be {POSITIVE!r} or {NEGATIVE!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    @classmethod
    def from_columns(cls, columns: dict[str, Sequence[float]], dt: float = 1.0, **kw) -> "Trace":
        return cls(tuple(columns), np.array([list(v) for v in columns.values()]), dt=dt, **kw)

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        """Time span covered by the samples, ``(n - 1) * dt``."""
        return (self.n_samples - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    def index_of(self, var: str) -> int:
        try:
            return self.variable_names.index(var)
        except ValueError:
            raise KeyError(f"trace has no variable {var!r} (has {list(self.variable_names)})") from None

    def __getitem__(self, var: str) -> np.ndarray:
        return self.values[self.index_of(var)]

    def with_label(self, label: Optional[str]) -> "Trace":
        return Trace(self.variable_names, self.values, self.dt, self.t0, label, self.name)
