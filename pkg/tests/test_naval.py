import numpy as np
import pytest

from stlmine.data import robustness_stats
from stlmine.monitor import robustness_batch
from stlmine.naval import (
    REFERENCE_FORMULA,
    X1_LINE,
    X2_LINE,
    GeneratorError,
    NavalGenConfig,
    _check_labels,
    generate_naval,
)
from stlmine.parser import parse
from stlmine.trace import NEGATIVE, POSITIVE

EQ2 = parse(REFERENCE_FORMULA)


@pytest.fixture(scope="module")
def naval():
    return generate_naval(NavalGenConfig(n_normal=200, n_anomalous_red=100, n_anomalous_blue=100, seed=7))


def by_kind(d, kind):
    return [x for x in d.negatives + d.positives if x.name.startswith(kind)]


def test_shape_and_time_base(naval):
    assert (len(naval.positives), len(naval.negatives)) == (200, 200)
    assert naval.n_samples == 61 and naval.dt == 5.0 and naval.horizon == 300.0
    assert naval.variable_names == ("x1", "x2")
    assert all(x.label == POSITIVE for x in naval.positives)
    assert all(x.label == NEGATIVE for x in naval.negatives)


def test_reference_formula_separates_exactly(naval):
    assert np.all(robustness_batch(EQ2, naval.positives) > 0)
    assert np.all(robustness_batch(EQ2, naval.negatives) < 0)


def test_class_means_have_opposite_signs(naval):
    assert robustness_stats(EQ2, naval.positives).mean > 0
    assert robustness_stats(EQ2, naval.negatives).mean < 0


def test_red_drops_south_before_reaching_port(naval):
    for x in by_kind(naval, "red"):
        x1, x2 = x["x1"], x["x2"]
        first_west = np.flatnonzero(x1 <= X1_LINE)
        limit = first_west[0] if first_west.size else x.n_samples
        assert np.any(x2[:limit] <= X2_LINE)


def test_blue_stays_north_and_never_reaches_port(naval):
    for x in by_kind(naval, "blue"):
        assert np.all(x["x2"] > X2_LINE)
        assert np.all(x["x1"] > X1_LINE)


def test_all_start_top_right(naval):
    for x in naval.positives + naval.negatives:
        assert x["x1"][0] > 50 and x["x2"][0] > 35


def test_seeded(naval):
    again = generate_naval(NavalGenConfig(n_normal=200, n_anomalous_red=100, n_anomalous_blue=100, seed=7))
    assert all(np.array_equal(a.values, b.values) for a, b in zip(naval.positives, again.positives))
    other = generate_naval(NavalGenConfig(n_normal=5, n_anomalous_red=2, n_anomalous_blue=2, seed=8))
    assert not np.array_equal(other.positives[0].values, naval.positives[0].values)


def test_full_size_default():
    d = generate_naval(NavalGenConfig(seed=7))
    assert (len(d.positives), len(d.negatives)) == (1000, 1000)


def test_config_invariants():
    with pytest.raises(ValueError):
        NavalGenConfig(n_normal=-1)
    with pytest.raises(ValueError):
        NavalGenConfig(samples_per_trace=1)
    with pytest.raises(ValueError):
        NavalGenConfig(noise_std=2.0)


def test_label_check_fails_loudly(naval):
    with pytest.raises(GeneratorError):
        _check_labels(naval.swapped())
