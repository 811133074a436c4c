"""Robustness-guided genetic mining of STL classifiers.

An outer genetic algorithm evolves formula templates; an inner GP-UCB run
fits each template's parameters by maximizing the discrimination score

    G = (mean_pos - mean_neg) / (std_pos + std_neg)

of the time-0 robustness over the positive and negative traces. Selection
uses the fitness ``G - g_avg * p**size``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import gpucb
from .data import Dataset, RobustnessStats, misclassification_rate
from .gpucb import NoFiniteScoreError, UcbConfig
from .pstl import (
    Configuration,
    ParameterSpace,
    abstract,
    canonical,
    check_template,
    default_space,
    instantiate,
    uniquify,
    warm_configuration,
)
from .stl import (
    GT,
    LE,
    And,
    Atom,
    Eventually,
    Formula,
    Globally,
    Not,
    Or,
    Param,
    Until,
    format_formula,
    get_node,
    iter_nodes,
    negate_atom,
    nnf,
    replace_at,
    shift,
    size,
)

log = logging.getLogger(__name__)

LARGE = 1e9
EPS_SIGMA = 1e-9
PENALTY_P = 0.5 ** (1 / 5)


# ---------------------------------------------------------------------------
# scoring

def discrimination_from_values(rp, rn) -> tuple[float, float]:
    """``(G, noise)`` from per-trace robustness samples of the two classes."""
    sp, sn = RobustnessStats.from_values(rp), RobustnessStats.from_values(rn)
    if not (sp.finite and sn.finite):
        return -LARGE, 0.0
    denom = sp.std + sn.std + EPS_SIGMA
    g = (sp.mean - sn.mean) / denom
    se = math.sqrt(sp.std**2 / sp.n + sn.std**2 / sn.n)
    return g, se / denom


def discrimination(f: Formula, d: Dataset) -> tuple[float, float]:
    """Discrimination score of a concrete formula and its sampling noise."""
    if not d.positives or not d.negatives:
        raise ValueError("discrimination needs traces of both classes")
    return discrimination_from_values(*d.robustness(f))


def size_penalty(f, g_avg: float, p: float = PENALTY_P, mode: str = "decaying") -> float:
    """``g_avg * p**size(f)``; ``f`` may be a formula or a node count.

    ``mode="growing"`` uses ``g_avg * (1 - p**size)`` instead, which agrees at
    size 5 but increases with size.
    """
    n = f if isinstance(f, int) else size(f)
    if mode not in ("decaying", "growing"):
        raise ValueError(f"unknown penalty mode {mode!r}")
    if mode == "growing":
        return g_avg * (1.0 - p**n)
    return g_avg * p**n


def is_valid_score(g: float) -> bool:
    return math.isfinite(g) and g > -LARGE / 2


# ---------------------------------------------------------------------------
# candidates and configuration

@dataclass(frozen=True)
class ScoredCandidate:
    template: Formula
    best_theta: Configuration
    g_score: float
    fitness: float = math.nan
    noise: float = 0.0
    history: tuple = field(default=(), compare=False, repr=False)  # optimizer trace

    @property
    def formula(self) -> Formula:
        return instantiate(self.template, self.best_theta)

    @property
    def size(self) -> int:
        return size(self.template)

    @property
    def text(self) -> str:
        return format_formula(self.template)

    def with_fitness(self, fitness: float) -> "ScoredCandidate":
        return replace(self, fitness=float(fitness))


def _order_key(c: ScoredCandidate):
    fit = c.fitness if math.isfinite(c.fitness) else -math.inf
    return (-fit, c.size, c.text)


@dataclass(frozen=True)
class Generation:
    candidates: tuple[ScoredCandidate, ...]
    index: int = 0
    curve: tuple[float, ...] = ()  # best fitness after each generation

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    @property
    def best(self) -> ScoredCandidate:
        """Candidate with the highest discrimination score."""
        return max(self.candidates, key=lambda c: (c.g_score, -c.size, _neg_text(c.text)))


def _neg_text(s: str):
    # max() over text should prefer the lexicographically smaller string
    return tuple(-ord(ch) for ch in s)


@dataclass(frozen=True)
class RogeConfig:
    ne: int = 40
    ng: int = 20
    alpha: float = 0.05
    s: int = 5
    seed: int = 0
    gpucb_light: UcbConfig = gpucb.LIGHT
    gpucb_final: UcbConfig = gpucb.FINAL
    penalty_p: float = PENALTY_P
    penalty: str = "decaying"
    selection: str = "roulette"
    n_l: Optional[int] = None
    max_size: int = 15
    stop_tol: float = 1e-4
    stop_patience: int = 5

    def __post_init__(self):
        if self.ne < 4 or self.ne % 2:
            raise ValueError("population size must be even and >= 4")
        if self.ng < 0:
            raise ValueError("number of generations must be >= 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("mutation probability must lie in [0, 1]")
        if self.s < 1:
            raise ValueError("maximum initial size must be >= 1")
        if self.selection not in ("roulette", "trunc"):
            raise ValueError("selection must be 'roulette' or 'trunc'")
        if self.penalty not in ("decaying", "growing"):
            raise ValueError("penalty must be 'decaying' or 'growing'")

    def as_dict(self) -> dict:
        out = {}
        for k in self.__dataclass_fields__:
            v = getattr(self, k)
            out[k] = v.__dict__.copy() if isinstance(v, UcbConfig) else v
        return out


def _seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# parameter learning

def learning_parameters(
    p: Formula,
    d: Dataset,
    space: Optional[ParameterSpace] = None,
    cfg: UcbConfig = gpucb.LIGHT,
    warm: Optional[Mapping[str, float]] = None,
) -> ScoredCandidate:
    """Fit the placeholders of ``p`` by GP-UCB on the discrimination score.

    The returned ``g_score`` is the score actually measured at the returned
    parameters (the best evaluation), not the surrogate's estimate.
    """
    check_template(p)
    if space is None:
        space = default_space(p, d)
    if space.dim == 0:
        g, noise = discrimination(p, d)
        return ScoredCandidate(p, {}, g, noise=noise)

    def score(u):
        g, noise = discrimination(instantiate(p, space.from_unit_cube(u)), d)
        return (g if is_valid_score(g) else -math.inf), noise

    init = None
    if warm:
        w = warm_configuration(warm, space)
        if w is not None:
            init = [space.to_unit_cube(w)]
    try:
        res = gpucb.optimize(score, space.dim, cfg, initial_points=init)
    except NoFiniteScoreError:
        theta = space.midpoint()
        return ScoredCandidate(p, theta, -LARGE)
    theta = space.from_unit_cube(res.u_observed)
    g, noise = discrimination(instantiate(p, theta), d)
    history = tuple(
        {**h, "theta": space.from_unit_cube(np.asarray(h["u"])) if len(h["u"]) else {}} for h in res.history
    )
    return ScoredCandidate(p, theta, g, noise=noise, history=history)


# ---------------------------------------------------------------------------
# initial population

def _atoms(variables):
    return [Atom(v, rel, Param("k")) for v in variables for rel in (GT, LE)]


def _tp():
    return Param("t", "temporal")


def seed_family(variables: Sequence[str]) -> list[Formula]:
    """``F mu``, ``G mu`` and ``mu1 U mu2`` over atoms and pairs of atoms."""
    atoms = _atoms(variables)
    mus: list[Formula] = list(atoms)
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            mus.append(And(atoms[i], atoms[j]))
            mus.append(Or(atoms[i], atoms[j]))
    fam: list[Formula] = []
    for mu in mus:
        fam.append(Eventually(_tp(), _tp(), mu))
        fam.append(Globally(_tp(), _tp(), mu))
    for a in atoms:
        for b in atoms:
            fam.append(Until(_tp(), _tp(), a, b))
    return [canonical(f) for f in fam]


def random_formula(n: int, variables: Sequence[str], rng: np.random.Generator) -> Formula:
    """Random template with exactly ``n`` nodes (placeholders not yet unique)."""
    if n <= 1:
        return Atom(variables[rng.integers(len(variables))], (GT, LE)[rng.integers(2)], Param("k"))
    if n == 2:
        kind = rng.choice(["F", "G", "!"], p=[0.45, 0.45, 0.1])
    else:
        kind = rng.choice(["F", "G", "!", "&", "|", "U"], p=[0.2, 0.2, 0.05, 0.2, 0.15, 0.2])
    if kind in ("F", "G", "!"):
        child = random_formula(n - 1, variables, rng)
        if kind == "!":
            return Not(child)
        return (Eventually if kind == "F" else Globally)(_tp(), _tp(), child)
    nl = int(rng.integers(1, n - 1))
    left = random_formula(nl, variables, rng)
    right = random_formula(n - 1 - nl, variables, rng)
    if kind == "U":
        return Until(_tp(), _tp(), left, right)
    return (And if kind == "&" else Or)(left, right)


def generate_initial_formulae(
    ne: int, s: int, variables: Sequence[str], rng: np.random.Generator, n_l: Optional[int] = None
) -> list[Formula]:
    if ne < 4:
        raise ValueError("population size must be >= 4")
    family = seed_family(variables)
    if n_l is None:
        n_l = min(ne // 2, len(family))
    n_l = min(n_l, len(family), ne)
    if len(family) > n_l:
        keep = np.sort(rng.choice(len(family), size=n_l, replace=False))
        seeded = [family[i] for i in keep]
    else:
        seeded = list(family)
    rand = [canonical(random_formula(int(rng.integers(1, s + 1)), variables, rng)) for _ in range(ne - n_l)]
    return seeded + rand


# ---------------------------------------------------------------------------
# selection

def assign_fitness(
    cands: Sequence[ScoredCandidate], p: float = PENALTY_P, mode: str = "decaying"
) -> list[ScoredCandidate]:
    """Fitness ``G - size_penalty`` with ``g_avg`` over the valid scores of ``cands``."""
    valid = [c.g_score for c in cands if is_valid_score(c.g_score)]
    g_avg = float(np.mean(valid)) if valid else 0.0
    return [c.with_fitness(c.g_score - size_penalty(c.size, g_avg, p, mode)) for c in cands]


def sample(
    cands: Sequence[ScoredCandidate],
    count: int,
    rng: np.random.Generator,
    selection: str = "roulette",
    p: float = PENALTY_P,
    mode: str = "decaying",
) -> list[ScoredCandidate]:
    """Pick ``count`` candidates by fitness, returned best first.

    Roulette selection draws without replacement with weights
    ``fitness - min(fitness) + eps`` (invalid candidates get a negligible
    weight); if all fitness values coincide, or ``selection == 'trunc'``,
    the top ``count`` in the deterministic tie order are returned.
    """
    if count > len(cands):
        raise ValueError(f"cannot sample {count} of {len(cands)} candidates")
    scored = assign_fitness(cands, p, mode)
    ranked = sorted(scored, key=_order_key)
    if count == len(ranked):
        return ranked
    fit = np.array([c.fitness for c in scored])
    ok = np.array([is_valid_score(c.g_score) for c in scored])
    if selection == "trunc" or not ok.any() or np.ptp(fit[ok]) == 0 and ok.all():
        return ranked[:count]
    eps = 1e-6 * max(1.0, float(np.ptp(fit[ok])))
    w = np.where(ok, fit - fit[ok].min() + eps, eps * 1e-3)
    picked = rng.choice(len(scored), size=count, replace=False, p=w / w.sum())
    return sorted((scored[i] for i in picked), key=_order_key)


# ---------------------------------------------------------------------------
# genetic operators

def recombine(a: Formula, b: Formula, rng: np.random.Generator) -> tuple[Formula, Formula]:
    """Swap a uniformly chosen subtree of ``a`` with one of ``b``."""
    pa = [path for path, _ in iter_nodes(a)]
    pb = [path for path, _ in iter_nodes(b)]
    i = pa[rng.integers(len(pa))]
    j = pb[rng.integers(len(pb))]
    sa, sb = get_node(a, i), get_node(b, j)
    return uniquify(replace_at(a, i, sb)), uniquify(replace_at(b, j, sa))


def applicable_moves(node: Formula, n_vars: int) -> list[str]:
    if isinstance(node, Atom):
        return ["flip", "variable"] if n_vars > 1 else ["flip"]
    if isinstance(node, (Eventually, Globally)):
        return ["swap_temporal", "to_until", "negate"]
    if isinstance(node, Until):
        return ["until_to_eventually", "negate"]
    if isinstance(node, (And, Or)):
        return ["swap_connective", "negate"]
    return ["negate"]


def apply_move(node: Formula, move: str, variables: Sequence[str], rng: np.random.Generator) -> Formula:
    if move == "flip":
        return negate_atom(node)
    if move == "variable":
        others = [v for v in variables if v != node.var]
        return Atom(others[rng.integers(len(others))], node.rel, node.threshold)
    if move == "swap_temporal":
        cls = Globally if isinstance(node, Eventually) else Eventually
        return cls(node.a, node.b, node.child)
    if move == "to_until":
        fresh = random_formula(1, variables, rng)
        return Until(node.a, node.b, fresh, node.child)
    if move == "until_to_eventually":
        return Eventually(node.a, node.b, node.right)
    if move == "swap_connective":
        return (Or if isinstance(node, And) else And)(node.left, node.right)
    if move == "negate":
        return node.child if isinstance(node, Not) else Not(node)
    raise ValueError(f"unknown mutation {move!r}")


def mutate(
    a: Formula, rng: np.random.Generator, variables: Optional[Sequence[str]] = None
) -> Formula:
    """Apply one random move to one uniformly chosen node."""
    if variables is None:
        variables = sorted({n.var for _, n in iter_nodes(a) if isinstance(n, Atom)}) or ["x"]
    nodes = list(iter_nodes(a))
    path, node = nodes[rng.integers(len(nodes))]
    moves = applicable_moves(node, len(variables))
    move = moves[rng.integers(len(moves))]
    return uniquify(replace_at(a, path, apply_move(node, move, variables, rng)))


def evolve(
    subg: Sequence[ScoredCandidate],
    alpha: float,
    ne: int,
    rng: np.random.Generator,
    variables: Sequence[str],
    max_size: int = 15,
) -> list[tuple[Formula, Configuration]]:
    """Produce ``ne`` offspring templates, each with warm-start values.

    Parents enter the genetic operators with their fitted parameters filled
    in, so every offspring inherits the numbers of the subtrees it is made
    of; fresh parts (mutation atoms) come back as open placeholders.
    """
    if len(subg) < 2:
        raise ValueError("evolve needs at least two parents")
    parents = [c.formula for c in subg]
    out: list[tuple[Formula, Configuration]] = []
    attempts = 0
    while len(out) < ne:
        attempts += 1
        if rng.random() <= alpha:
            kids = [mutate(parents[rng.integers(len(parents))], rng, variables)]
        else:
            i, j = rng.choice(len(parents), size=2, replace=False)
            kids = list(recombine(parents[i], parents[j], rng))
        for k in kids:
            if len(out) == ne:
                break
            if size(k) > max_size and attempts < 100 * ne:
                continue
            out.append(abstract(k))
    return out


# ---------------------------------------------------------------------------
# the algorithm

@dataclass
class _Learner:
    d: Dataset
    cfg: RogeConfig
    cache: dict = field(default_factory=dict)
    evaluations: int = 0

    def __call__(self, template: Formula, warm, seed: int) -> ScoredCandidate:
        key = format_formula(template)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        c = learning_parameters(template, self.d, None, self.cfg.gpucb_light.with_seed(seed), warm)
        self.evaluations += 1
        self.cache[key] = c
        return c


def _merge(old: Sequence[ScoredCandidate], new: Sequence[ScoredCandidate]) -> list[ScoredCandidate]:
    """Union of two candidate lists without repeated templates."""
    seen, out = set(), []
    for c in list(old) + list(new):
        if c.text not in seen:
            seen.add(c.text)
            out.append(c)
    return out


def roge(
    d: Dataset,
    cfg: RogeConfig = RogeConfig(),
    progress: Optional[Callable[[Generation], None]] = None,
) -> Generation:
    """Run the genetic loop and return the final scored generation."""
    if not d.positives or not d.negatives:
        raise ValueError("mining needs traces of both classes")
    rng = np.random.default_rng(_seed(cfg.seed, 0))
    learn = _Learner(d, cfg)
    variables = list(d.variable_names)

    templates = generate_initial_formulae(cfg.ne, cfg.s, variables, rng, cfg.n_l)
    gen = [learn(t, None, _seed(cfg.seed, 1, 0, i)) for i, t in enumerate(templates)]
    gen = sorted(assign_fitness(gen, cfg.penalty_p, cfg.penalty), key=_order_key)
    curve = [gen[0].fitness]
    current = Generation(tuple(gen), 0, tuple(curve))
    if progress:
        progress(current)

    stall = 0
    for k in range(1, cfg.ng + 1):
        subg = sample(gen, cfg.ne // 2, rng, cfg.selection, cfg.penalty_p, cfg.penalty)
        offspring = evolve(subg, cfg.alpha, cfg.ne, rng, variables, cfg.max_size)
        newg = [learn(t, w, _seed(cfg.seed, 1, k, i)) for i, (t, w) in enumerate(offspring)]
        pool = _merge(gen, newg)
        filler = iter(gen + newg)
        while len(pool) < cfg.ne:
            pool.append(next(filler))
        gen = sample(pool, cfg.ne, rng, cfg.selection, cfg.penalty_p, cfg.penalty)
        best = max(c.fitness for c in gen)
        stall = stall + 1 if best - curve[-1] < cfg.stop_tol else 0
        curve.append(best)
        current = Generation(tuple(gen), k, tuple(curve))
        if progress:
            progress(current)
        log.debug("generation %d: best fitness %.4f, %d templates learned", k, best, learn.evaluations)
        if stall >= cfg.stop_patience:
            break
    return current


# ---------------------------------------------------------------------------
# calibration

def calibration_offset(rp, rn) -> float:
    """Robustness level that best separates positives (above) from negatives.

    Every ``alpha`` in ``[v_k, v_{k+1})`` between consecutive distinct sample
    values misclassifies the same traces; among the intervals with the fewest
    errors the widest one wins (ties: the one whose midpoint is closest to
    the average of the class means) and its midpoint is returned.
    """
    rp = np.asarray(rp, float)
    rn = np.asarray(rn, float)
    allv = np.concatenate([rp, rn])
    vals = np.unique(allv[np.isfinite(allv)])
    if vals.size == 0:
        return 0.0
    fp, fn = rp[np.isfinite(rp)], rn[np.isfinite(rn)]
    center = 0.5 * (fp.mean() + fn.mean()) if fp.size and fn.size else 0.0
    spread = max(float(vals[-1] - vals[0]), 1.0)
    # interval edges: (-inf, v0), [v0, v1), ..., [v_last, inf)
    edges = np.concatenate([[vals[0] - spread], vals, [vals[-1] + spread]])
    probes = edges[:-1]
    errors = np.array([np.count_nonzero(rp <= a) + np.count_nonzero(rn > a) for a in probes])
    best_err = errors.min()
    # merge runs of adjacent intervals with the minimal error
    runs = []
    k = 0
    while k < len(probes):
        if errors[k] == best_err:
            j = k
            while j + 1 < len(probes) and errors[j + 1] == best_err:
                j += 1
            runs.append((edges[k], edges[j + 1]))
            k = j + 1
        else:
            k += 1
    lo, hi = max(runs, key=lambda r: (r[1] - r[0], -abs(0.5 * (r[0] + r[1]) - center)))
    return float(0.5 * (lo + hi))


def calibrate(f: Formula, d: Dataset) -> Formula:
    """Translate the atoms of ``f`` so that the sign of robustness classifies."""
    return calibrate_with_offset(f, d)[0]


def calibrate_with_offset(f: Formula, d: Dataset) -> tuple[Formula, float]:
    rp, rn = d.robustness(f)
    alpha = calibration_offset(rp, rn)
    return shift(nnf(f), alpha), alpha


# ---------------------------------------------------------------------------
# end-to-end mining

SCHEMA_VERSION = 1


@dataclass
class MiningResult:
    best_formula: Formula  # calibrated
    raw_formula: Formula
    template: Formula
    theta: Configuration
    g_score: float
    fitness: float
    alpha: float
    training_misclassification: float
    generations_run: int
    curve: tuple[float, ...]
    seed: int
    config: dict
    generation: Optional[Generation] = None
    elapsed_seconds: float = 0.0
    optimizer_history: tuple = ()  # GP-UCB trace of the final refinement

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "best_formula": format_formula(self.best_formula),
            "raw_formula": format_formula(self.raw_formula),
            "template": format_formula(self.template),
            "theta": dict(sorted(self.theta.items())),
            "g_score": self.g_score,
            "fitness": self.fitness,
            "calibration_offset": self.alpha,
            "training_misclassification": self.training_misclassification,
            "generations_run": self.generations_run,
            "seed": self.seed,
            "config": self.config,
            "best_fitness_curve": list(self.curve),
            "elapsed_seconds": self.elapsed_seconds,
        }


def mine(
    d: Dataset,
    cfg: RogeConfig = RogeConfig(),
    progress: Optional[Callable[[Generation], None]] = None,
) -> MiningResult:
    """Run the genetic search, refine the winner's parameters, then calibrate."""
    t0 = time.perf_counter()
    gen = roge(d, cfg, progress)
    best = gen.best
    history: tuple = ()
    if check_template(best.template):
        refined = learning_parameters(
            best.template, d, None, cfg.gpucb_final.with_seed(_seed(cfg.seed, 2)), best.best_theta
        )
        history = refined.history
        if refined.g_score > best.g_score:
            best = replace(refined, fitness=best.fitness)
    raw = best.formula
    calibrated, alpha = calibrate_with_offset(raw, d)
    valid = [c.g_score for c in gen if is_valid_score(c.g_score)]
    g_avg = float(np.mean(valid)) if valid else 0.0
    fitness = best.g_score - size_penalty(best.size, g_avg, cfg.penalty_p, cfg.penalty)
    return MiningResult(
        best_formula=calibrated,
        raw_formula=raw,
        template=best.template,
        theta=best.best_theta,
        g_score=best.g_score,
        fitness=fitness,
        alpha=alpha,
        training_misclassification=misclassification_rate(calibrated, d),
        generations_run=gen.index,
        curve=gen.curve,
        seed=cfg.seed,
        config=cfg.as_dict(),
        generation=gen,
        elapsed_seconds=time.perf_counter() - t0,
        optimizer_history=history,
    )
