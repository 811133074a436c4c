"""Mine a classifier for anomalous vessel trajectories.

Generates a small synthetic harbour dataset, fits the parameters of a
hand-written template, then lets the genetic search find a structure on its
own. Takes a minute or two; run with ``python demos/naval_mining.py``.
"""

from stlmine import (
    calibrate,
    REFERENCE_FORMULA,
    NavalGenConfig,
    RogeConfig,
    UcbConfig,
    format_formula,
    generate_naval,
    learning_parameters,
    misclassification_rate,
    mine,
    parse,
)
from stlmine.pstl import instantiate

train = generate_naval(NavalGenConfig(n_normal=150, n_anomalous_red=75, n_anomalous_blue=75, seed=1))
test = generate_naval(NavalGenConfig(n_normal=150, n_anomalous_red=75, n_anomalous_blue=75, seed=2))
print(f"{len(train.positives)} normal and {len(train.negatives)} anomalous training traces")

# The generator is built so that this formula separates the classes.
ref = parse(REFERENCE_FORMULA)
print("reference:", format_formula(ref), "test error:", misclassification_rate(ref, test))

# Parameter synthesis: keep the structure, learn thresholds and the window.
template = parse("(x2 > ?k1) U[?a,?b] (x1 <= ?k2)")
fit = learning_parameters(template, train, cfg=UcbConfig(n_init=10, max_iter=60, seed=3))
learned = instantiate(template, fit.best_theta)
print("learned:", format_formula(learned), f"G = {fit.g_score:.2f}")
# a high G says the classes are far apart; calibration turns that into a sign rule
print("calibrated test error:", misclassification_rate(calibrate(learned, train), test))

# Structure search: a small population for a quick run.
cfg = RogeConfig(ne=20, ng=6, seed=4)
result = mine(train, cfg, progress=lambda g: print(f"  generation {g.index}: best fitness {g.curve[-1]:.3f}"))
print("mined:", format_formula(result.best_formula))
print("training error:", result.training_misclassification)
print("test error:", misclassification_rate(result.best_formula, test))
