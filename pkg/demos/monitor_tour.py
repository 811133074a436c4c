"""A short tour of formulas, robustness and threshold calibration.

Run with ``python demos/monitor_tour.py``.
"""

import numpy as np

from stlmine import Dataset, Trace, calibrate, format_formula, nnf, parse, robustness, shift
from stlmine.monitor import robustness_signal

# A formula is parsed from text. Thresholds are numbers and intervals are in
# the time units of the trace (here dt = 1).
f = parse("(speed <= 21) U[2,6] (dist <= 1)")
print("formula:", format_formula(f))

# Two variables sampled every time unit. The vessel slows down and docks at t = 5.
x = Trace.from_columns(
    {
        "speed": [20, 16, 11, 9, 6, 2, 0, 0],
        "dist": [9.0, 7.0, 5.0, 3.5, 2.0, 0.5, 0.2, 0.0],
    },
    dt=1.0,
)

# Robustness is a signed margin. Positive means satisfied with room to spare.
print("robustness at t=0:", robustness(f, x))
print("robustness signal:", robustness_signal(f, x))

# Negations are pushed onto the atoms. Shifting every threshold by c lowers
# the robustness by exactly c.
g = nnf(parse("!(F[0,3](speed > 15))"))
print("negation normal form:", format_formula(g))
print("rho(g) =", robustness(g, x), " rho(shift(g, 1.5)) =", robustness(shift(g, 1.5), x))

# Calibration moves the decision boundary of a formula into the gap between
# the classes, so that the sign of robustness becomes the class label.
rng = np.random.default_rng(0)
fast = [Trace(("v",), [rng.normal(8, 0.5, 10)], dt=1.0) for _ in range(20)]
slow = [Trace(("v",), [rng.normal(3, 0.5, 10)], dt=1.0) for _ in range(20)]
d = Dataset(fast, slow)
raw = parse("G[0,9](v > 0)")
cal = calibrate(raw, d)
print("raw:", format_formula(raw), "-> calibrated:", format_formula(cal))
rp, rn = d.robustness(cal)
print(f"positives satisfied: {(rp > 0).mean():.0%}, negatives satisfied: {(rn > 0).mean():.0%}")
