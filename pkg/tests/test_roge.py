import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stlmine.data import Dataset, misclassification_rate
from stlmine.gpucb import UcbConfig
from stlmine.monitor import robustness
from stlmine.naval import NavalGenConfig, generate_naval
from stlmine.parser import parse
from stlmine.pstl import check_template, default_space, instantiate
from stlmine.roge import (
    LARGE,
    Generation,
    RogeConfig,
    ScoredCandidate,
    _merge,
    applicable_moves,
    apply_move,
    assign_fitness,
    calibrate,
    calibrate_with_offset,
    calibration_offset,
    discrimination,
    discrimination_from_values,
    evolve,
    generate_initial_formulae,
    learning_parameters,
    mine,
    mutate,
    recombine,
    roge,
    sample,
    seed_family,
    size_penalty,
)
from stlmine.stl import (
    TEMPORAL,
    Atom,
    Globally,
    Not,
    Param,
    TrueF,
    Until,
    format_formula,
    iter_nodes,
    size,
)
from stlmine.trace import Trace

FAST = dict(
    gpucb_light=UcbConfig(n_init=5, max_iter=12),
    gpucb_final=UcbConfig(n_init=5, max_iter=25),
)


def levels(pos, neg, n=4):
    mk = lambda v: Trace(("x1",), [np.full(n, float(v))])  # noqa: E731
    return Dataset([mk(v) for v in pos], [mk(v) for v in neg])


@pytest.fixture(scope="module")
def naval_small():
    return generate_naval(NavalGenConfig(n_normal=40, n_anomalous_red=20, n_anomalous_blue=20, seed=11))


def cand(text, g, theta=None):
    return ScoredCandidate(parse(text), theta or {}, g)


# ---------------------------------------------------------------------------
# scoring


class TestDiscrimination:
    def test_identical_classes(self):
        d = levels([1, 2, 3], [1, 2, 3])
        assert discrimination(Atom("x1", ">", 0), d)[0] == 0

    def test_arithmetic_example(self):
        g, _ = discrimination_from_values([1, 3], [-1, -3])
        assert g == pytest.approx(2.0, rel=1e-9)

    def test_true_gets_large_negative(self):
        assert discrimination(TrueF(), levels([1], [0]))[0] == -LARGE

    def test_zero_spread_is_totalized(self):
        g, noise = discrimination(Atom("x1", ">", 0), levels([1, 1], [0, 0]))
        assert g == pytest.approx(1e9) and math.isfinite(noise)

    def test_noise_is_standard_error_over_denominator(self):
        g, noise = discrimination_from_values([1, 3], [-1, -3])
        assert noise == pytest.approx(math.sqrt(1 / 2 + 1 / 2) / 2, rel=1e-9)

    def test_swapping_classes_negates(self, rng):
        d = levels(rng.normal(1, 1, 9), rng.normal(0, 2, 7))
        f = Atom("x1", "<=", 0.3)
        assert discrimination(f, d.swapped())[0] == -discrimination(f, d)[0]

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-50, 50), min_size=2, max_size=12),
        st.lists(st.floats(-50, 50), min_size=2, max_size=12),
        st.floats(0.01, 100),
    )
    def test_scale_invariance(self, rp, rn, c):
        g1, _ = discrimination_from_values(rp, rn)
        g2, _ = discrimination_from_values(np.array(rp) * c, np.array(rn) * c)
        # the 1e-9 guard in the denominator must stay negligible at both scales
        if min(1.0, c) * (np.std(rp) + np.std(rn)) > 1e-2:
            assert g2 == pytest.approx(g1, rel=1e-6, abs=1e-9)

    def test_needs_both_classes(self):
        with pytest.raises(ValueError):
            discrimination(Atom("x1", ">", 0), levels([1], []))


class TestPenalty:
    def test_examples(self):
        assert size_penalty(5, 1.0) == pytest.approx(0.5)
        assert size_penalty(10, 1.0) == pytest.approx(0.25)
        assert size_penalty(parse("(a > 1) U[0,1] (b > 2)"), 0.0) == 0.0

    def test_growing_variant(self):
        assert size_penalty(5, 1.0, mode="growing") == pytest.approx(0.5)
        assert size_penalty(10, 1.0, mode="growing") == pytest.approx(0.75)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            size_penalty(5, 1.0, mode="flat")
        with pytest.raises(ValueError):
            RogeConfig(penalty="flat")

    def test_fitness_below_score(self):
        cands = [cand("(x > 1)", 2.0), cand("F[0,1](x > 1)", 1.0), cand("true", -LARGE)]
        scored = assign_fitness(cands)
        g_avg = 1.5
        assert scored[0].fitness == pytest.approx(2.0 - g_avg * size_penalty(1, 1.0))
        assert all(c.fitness <= c.g_score for c in scored[:2])


# ---------------------------------------------------------------------------
# parameter learning


class TestLearningParameters:
    def test_no_placeholders(self):
        c = learning_parameters(parse("(x1 > 1.5)"), levels([2, 3], [0, 1]))
        assert c.best_theta == {} and c.g_score > 0

    def test_separable_one_dimensional(self):
        d = levels([2, 2.5, 3], [0, 0.5, 1])
        c = learning_parameters(parse("(x1 > ?k)"), d)
        sweep = max(discrimination(Atom("x1", ">", k), d)[0] for k in np.linspace(0, 3, 1000))
        assert c.g_score > 0 and c.g_score >= 0.95 * sweep
        # the returned score is a measured one
        assert c.g_score == discrimination(instantiate(c.template, c.best_theta), d)[0]
        # G of a lone atom does not depend on k; calibration places the threshold in the gap
        k = calibrate(c.formula, d).threshold
        assert 1 < k < 2

    def test_all_invalid_scores(self):
        d = levels([1, 2], [0, 1])
        c = learning_parameters(parse("F[?a,?b]true"), d)
        assert c.g_score == -LARGE
        assert default_space(c.template, d).contains(c.best_theta)

    def test_warm_start_is_used(self, naval_small):
        p = parse("(x2 > ?k0) U[?a0,?b0] (x1 <= ?k1)")
        warm = {"k0": 22.46, "k1": 31.65, "a0": 49.0, "b0": 287.0}
        c = learning_parameters(p, naval_small, cfg=UcbConfig(n_init=2, max_iter=2), warm=warm)
        ref = discrimination(parse("(x2 > 22.46) U[49,287] (x1 <= 31.65)"), naval_small)[0]
        assert c.g_score >= ref


# ---------------------------------------------------------------------------
# initial population


class TestInitialPopulation:
    def test_seed_family_one_variable(self):
        texts = {format_formula(f) for f in seed_family(["x"])}
        assert "F[?a0,?b0](x > ?k0)" in texts
        assert "G[?a0,?b0](x <= ?k0)" in texts
        assert "((x > ?k0) U[?a0,?b0] (x <= ?k1))" in texts
        assert "F[?a0,?b0]((x > ?k0) & (x <= ?k1))" in texts
        # 2 atoms, 1 pair -> 4 formulas mu, 2 temporal ops each, plus 4 untils
        assert len(texts) == 4 * 2 + 4

    def test_random_part_with_s1_is_atoms(self, rng):
        pop = generate_initial_formulae(10, 1, ["x", "y"], rng, n_l=2)
        assert all(isinstance(f, Atom) for f in pop[2:])

    @pytest.mark.parametrize("s", [1, 3, 6])
    def test_sizes_and_validity(self, s):
        for seed in range(30):
            rng = np.random.default_rng(seed)
            pop = generate_initial_formulae(12, s, ["x1", "x2", "x3"], rng)
            assert len(pop) == 12
            for f in pop:
                assert size(f) <= max(4, s)
                check_template(f)

    def test_large_family_is_subsampled(self, rng):
        pop = generate_initial_formulae(8, 3, ["a", "b", "c", "d"], rng)
        family = {format_formula(f) for f in seed_family(["a", "b", "c", "d"])}
        assert sum(format_formula(f) in family for f in pop[:4]) == 4


# ---------------------------------------------------------------------------
# selection


class TestSample:
    def gen(self):
        return [cand("(x > 1)", 1.0), cand("(x <= 1)", 1.1), cand("F[0,2](x > 1)", 0.5), cand("G[0,2](x > 1)", 0.7)]

    def test_whole_generation(self, rng):
        out = sample(self.gen(), 4, rng)
        assert sorted(c.text for c in out) == sorted(c.text for c in self.gen())

    def test_count_too_large(self, rng):
        with pytest.raises(ValueError):
            sample(self.gen(), 5, rng)

    def test_dominant_candidate(self):
        gen = self.gen() + [cand("(x > 3)", 100.0)]
        hits = 0
        for seed in range(100):
            out = sample(gen, 1, np.random.default_rng(seed))
            hits += out[0].text == "(x > 3)"
        assert hits > 90

    def test_equal_fitness_uses_tie_order(self, rng):
        gen = [cand(t, 1.0) for t in ("(b > 1)", "(a > 1)", "(c > 1)", "(a <= 1)")]
        out = sample(gen, 2, rng)
        assert [c.text for c in out] == ["(a <= 1)", "(a > 1)"]

    def test_truncation_keeps_fittest(self, rng):
        out = sample(self.gen(), 2, rng, selection="trunc")
        assert [c.text for c in out] == ["(x <= 1)", "(x > 1)"]

    def test_output_is_ranked(self, rng):
        out = sample(self.gen(), 3, rng)
        fits = [c.fitness for c in out]
        assert fits == sorted(fits, reverse=True)

    def test_merge_keeps_every_old_candidate(self):
        old = self.gen()
        new = [cand("(x > 1)", 9.0), cand("(z > 0)", 0.1)]
        pool = _merge(old, new)
        assert [c.text for c in pool[:4]] == [c.text for c in old]
        assert len(pool) == 5


# ---------------------------------------------------------------------------
# genetic operators


def shape(f):
    """Node-by-node description that ignores placeholder names and values."""
    out = []
    for path, n in iter_nodes(f):
        extra = (n.var, n.rel) if isinstance(n, Atom) else ()
        out.append((path, type(n).__name__) + extra)
    return out


def diff_roots(a, b, path=()):
    """Top-most paths where the two trees differ structurally."""
    same_head = type(a) is type(b) and (
        not isinstance(a, Atom) or (a.var, a.rel) == (b.var, b.rel)
    ) and len(a.children()) == len(b.children())
    if not same_head:
        return [path]
    out = []
    for i, (x, y) in enumerate(zip(a.children(), b.children())):
        out += diff_roots(x, y, path + (i,))
    return out


class FirstRng:
    """Stand-in generator that always picks index 0 (the root)."""

    def integers(self, n):
        return 0


class TestRecombine:
    def test_root_swap(self):
        a, b = parse("F[?a0,?b0](x > ?k0)"), parse("(y <= ?k0)")
        c, d = recombine(a, b, FirstRng())
        assert (c, d) == (b, a)

    def test_node_conservation_and_validity(self, rng):
        from conftest import random_formula as concrete

        for _ in range(1000):
            a, b = concrete(rng, 4), concrete(rng, 4)
            c, d = recombine(a, b, rng)
            assert size(c) + size(d) == size(a) + size(b)
            for k in (c, d):
                assert parse(format_formula(k)) == k
                check_template(k)


class TestMutate:
    def test_menu(self):
        assert applicable_moves(Atom("x", ">", 1), 1) == ["flip"]
        assert applicable_moves(Atom("x", ">", 1), 2) == ["flip", "variable"]
        assert "until_to_eventually" in applicable_moves(parse("(x > 1) U[0,1] (x > 2)"), 1)
        assert "swap_temporal" in applicable_moves(parse("F[0,1](x > 1)"), 1)

    def test_atom_only_formula(self, rng):
        for _ in range(50):
            m = mutate(Atom("x", ">", Param("k0")), rng, ["x"])
            assert m == Atom("x", "<=", Param("k0"))

    def test_flip_is_an_involution(self, rng):
        a = Atom("x", "<=", 3.0)
        assert apply_move(apply_move(a, "flip", ["x"], rng), "flip", ["x"], rng) == a

    def test_moves(self, rng):
        f = parse("F[0,5](x > 1)")
        assert apply_move(f, "swap_temporal", ["x"], rng) == Globally(0, 5, Atom("x", ">", 1))
        u = apply_move(f, "to_until", ["x"], rng)
        assert isinstance(u, Until) and u.right == f.child
        assert apply_move(u, "until_to_eventually", ["x"], rng) == f
        assert apply_move(f, "negate", ["x"], rng) == Not(f)
        assert apply_move(Not(f), "negate", ["x"], rng) == f
        assert format_formula(apply_move(parse("(x > 1) & (y > 2)"), "swap_connective", ["x"], rng)) == (
            "((x > 1) | (y > 2))"
        )
        assert apply_move(Atom("x", ">", 1), "variable", ["x", "y"], rng) == Atom("y", ">", 1)

    def test_changes_exactly_one_node(self, rng):
        from conftest import random_formula as concrete

        for _ in range(500):
            f = concrete(rng, 4, allow_true=False)
            m = mutate(f, rng, ["x", "y"])
            assert len(diff_roots(f, m)) == 1, (f, m)
            check_template(m)


class TestEvolve:
    def parents(self):
        return [
            cand("F[0,100](x1 > 20)", 1.0),
            cand("G[10,50]((x1 <= 3) | (x2 > 1))", 0.5),
            cand("(x2 > 4) U[5,60] (x1 <= 2)", 2.0),
        ]

    def test_size_and_validity(self):
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            out = evolve(self.parents(), 0.3, 6, rng, ["x1", "x2"])
            assert len(out) == 6
            for template, warm in out:
                check_template(template)
                assert set(warm) <= {p.name for _, n in iter_nodes(template) for p in _params(n)}

    def test_alpha_zero_is_recombination(self):
        rng = np.random.default_rng(0)
        total = sum(size(c.formula) for c in self.parents())
        out = evolve(self.parents()[:2], 0.0, 2, rng, ["x1", "x2"], max_size=100)
        assert sum(size(t) for t, _ in out) == total - size(self.parents()[2].formula)

    def test_alpha_one_is_mutation(self):
        rng = np.random.default_rng(1)
        out = evolve(self.parents(), 1.0, 20, rng, ["x1", "x2"])
        sizes = {size(c.formula) for c in self.parents()}
        for t, _ in out:
            assert any(abs(size(t) - s) <= 2 for s in sizes)

    def test_offspring_inherit_parameters(self):
        rng = np.random.default_rng(3)
        for template, warm in evolve(self.parents(), 0.0, 10, rng, ["x1", "x2"]):
            names = {p.name for _, n in iter_nodes(template) for p in _params(n)}
            assert set(warm) == names  # recombination keeps every number
            instantiate(template, warm)

    def test_needs_two_parents(self, rng):
        with pytest.raises(ValueError):
            evolve(self.parents()[:1], 0.1, 4, rng, ["x1"])


def _params(n):
    if isinstance(n, TEMPORAL):
        vals = (n.a, n.b)
    elif isinstance(n, Atom):
        vals = (n.threshold,)
    else:
        vals = ()
    return [v for v in vals if isinstance(v, Param)]


# ---------------------------------------------------------------------------
# calibration


class TestCalibration:
    def test_symmetric_gap(self):
        assert calibration_offset([2, 3], [-3, -2]) == 0.0

    def test_single_gap(self):
        assert calibration_offset([1, 2], [-1, 0.5]) == pytest.approx(0.75)

    def test_matches_exhaustive_sweep(self, rng):
        for _ in range(200):
            rp = np.round(rng.normal(1, 1, 7), 1)
            rn = np.round(rng.normal(-1, 1, 6), 1)
            a = calibration_offset(rp, rn)
            err = lambda t: np.sum(rp <= t) + np.sum(rn > t)  # noqa: E731
            grid = np.concatenate([np.unique(np.r_[rp, rn]), [rp.min() - 1, rn.max() + 1]])
            assert err(a) == min(err(t) for t in grid)

    def test_shift_law_and_no_loss(self, naval_small):
        f = parse("F[0,200]((x1 <= 35) & G[0,100](x2 > 20))")
        g, alpha = calibrate_with_offset(f, naval_small)
        for x in naval_small.positives + naval_small.negatives:
            assert robustness(g, x) == pytest.approx(robustness(f, x) - alpha, rel=1e-9, abs=1e-9)
        assert misclassification_rate(g, naval_small) <= misclassification_rate(f, naval_small)

    def test_negation_is_normalized(self):
        d = levels([2, 3], [0, 1])
        g = calibrate(Not(Atom("x1", "<=", 1.5)), d)
        assert isinstance(g, Atom) and g.rel == ">"


# ---------------------------------------------------------------------------
# the loop


class TestRoge:
    def test_config_invariants(self):
        for bad in (dict(ne=5), dict(ne=2), dict(ng=-1), dict(alpha=2.0), dict(s=0), dict(selection="x")):
            with pytest.raises(ValueError):
                RogeConfig(**bad)

    def test_zero_generations(self, naval_small):
        g = roge(naval_small, RogeConfig(ne=8, ng=0, seed=2, **FAST))
        assert isinstance(g, Generation) and g.index == 0 and len(g) == 8
        assert all(math.isfinite(c.fitness) for c in g)

    def test_generation_invariants(self, naval_small):
        seen = []
        roge(naval_small, RogeConfig(ne=8, ng=3, seed=4, **FAST), seen.append)
        for gen in seen:
            assert len(gen) == 8
            keys = [(-c.fitness, c.size, c.text) for c in gen]
            assert keys == sorted(keys)
            for c in gen:
                check_template(c.template)
                naval_small.robustness(c.formula)

    def test_deterministic(self, naval_small):
        cfg = RogeConfig(ne=8, ng=2, seed=5, **FAST)
        a, b = roge(naval_small, cfg), roge(naval_small, cfg)
        assert [(c.text, c.best_theta, c.g_score) for c in a] == [(c.text, c.best_theta, c.g_score) for c in b]

    def test_best_is_argmax_discrimination(self, naval_small):
        g = roge(naval_small, RogeConfig(ne=8, ng=1, seed=6, **FAST))
        assert g.best.g_score == max(c.g_score for c in g)


class TestMine:
    def test_result(self, naval_small):
        cfg = RogeConfig(ne=8, ng=2, seed=3, **FAST)
        r = mine(naval_small, cfg)
        doc = r.to_json()
        for key in (
            "schema_version",
            "best_formula",
            "raw_formula",
            "theta",
            "g_score",
            "fitness",
            "training_misclassification",
            "generations_run",
            "seed",
            "config",
            "best_fitness_curve",
        ):
            assert key in doc
        json.dumps(doc, allow_nan=False)
        assert parse(doc["best_formula"]) == r.best_formula
        assert instantiate(r.template, r.theta) == r.raw_formula
        # fitness is consistent with the final generation's average score
        valid = [c.g_score for c in r.generation if c.g_score > -LARGE / 2]
        assert r.fitness == pytest.approx(r.g_score - size_penalty(size(r.template), float(np.mean(valid))))
        assert r.training_misclassification <= misclassification_rate(r.raw_formula, naval_small)
        assert len(r.optimizer_history) > 0

    def test_refinement_never_hurts(self, naval_small):
        cfg = RogeConfig(ne=8, ng=1, seed=8, **FAST)
        r = mine(naval_small, cfg)
        assert r.g_score >= r.generation.best.g_score
