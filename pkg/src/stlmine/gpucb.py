"""GP-UCB maximization of a noisy black-box score on the unit cube.

The surrogate is a zero-mean Gaussian process on standardized scores with a
squared-exponential ARD kernel. Hyperparameters are chosen on a small log
grid by marginal likelihood at every refit; the observation noise of each
point comes from the noise estimate reported by the score function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist
from scipy.stats import qmc

LENGTH_GRID = (0.08, 0.16, 0.32, 0.64, 1.28)
SIGNAL_GRID = (0.5, 1.0, 2.0)


class NoFiniteScoreError(RuntimeError):
    pass


@dataclass(frozen=True)
class UcbConfig:
    n_init: int = 10
    max_iter: int = 40
    seed: int = 0
    delta: float = 0.1
    n_candidates: int = 1024
    eps_stop: float = 1e-3
    k_stop: int = 5
    noise_floor: float = 1e-6

    def __post_init__(self):
        if self.n_init < 2:
            raise ValueError("n_init must be >= 2")
        if self.max_iter < self.n_init:
            raise ValueError("max_iter must be >= n_init")

    def with_seed(self, seed: int) -> "UcbConfig":
        return replace(self, seed=int(seed))


LIGHT = UcbConfig(n_init=10, max_iter=40)
FINAL = UcbConfig(n_init=10, max_iter=200)


def beta(t: int, delta: float = 0.1) -> float:
    """Exploration weight ``2 log(t^2 pi^2 / (6 delta))``."""
    return 2.0 * math.log(t * t * math.pi**2 / (6.0 * delta))


# ---------------------------------------------------------------------------
# Gaussian process

class GpModel:
    """Exact GP regression with an SE-ARD kernel."""

    def __init__(self, lengthscales=None, signal_var: float = 1.0):
        self.lengthscales = None if lengthscales is None else np.asarray(lengthscales, float)
        self.signal_var = signal_var
        self._fitted = False

    def fit(self, U, y, noise_var, optimize_hypers: bool = True, start=None) -> "GpModel":
        """Condition on observations ``(U, y)`` with per-point noise variances.

        ``start`` (a previous model's ``hypers``) turns the full grid scan into
        a greedy neighbourhood search on the same grid.
        """
        U = np.atleast_2d(np.asarray(U, float))
        y = np.asarray(y, float)
        noise = np.broadcast_to(np.asarray(noise_var, float), y.shape).copy()
        self.U = U
        self.y_mean = float(y.mean())
        sd = float(y.std())
        self.y_scale = sd if sd > 1e-12 else 1.0
        self.yn = (y - self.y_mean) / self.y_scale
        self.noise_n = noise / self.y_scale**2
        d = U.shape[1]
        self._sq = (U[:, None, :] - U[None, :, :]) ** 2  # (n, n, d)
        if optimize_hypers or self.lengthscales is None:
            if start is None:
                self._select_hypers(d)
            else:
                self._local_hypers(*start)
        self._factor(self.lengthscales, self.signal_var)
        self._fitted = True
        return self

    @property
    def hypers(self) -> tuple[tuple[int, ...], int]:
        """Grid indices of the current length-scales and signal variance."""
        return (
            tuple(LENGTH_GRID.index(float(v)) for v in self.lengthscales),
            SIGNAL_GRID.index(float(self.signal_var)),
        )

    def _local_hypers(self, ls_idx, sf_idx):
        ls_idx, sf_idx = list(ls_idx), sf_idx

        def value(li, si):
            return self.log_marginal_likelihood(np.array([LENGTH_GRID[i] for i in li]), SIGNAL_GRID[si])

        best = value(ls_idx, sf_idx)
        for _ in range(4):
            moves = []
            for k in range(len(ls_idx)):
                for step in (-1, 1):
                    if 0 <= ls_idx[k] + step < len(LENGTH_GRID):
                        li = list(ls_idx)
                        li[k] += step
                        moves.append((li, sf_idx))
            for step in (-1, 1):
                if 0 <= sf_idx + step < len(SIGNAL_GRID):
                    moves.append((ls_idx, sf_idx + step))
            improved = False
            for li, si in moves:
                v = value(li, si)
                if v > best:
                    best, ls_idx, sf_idx, improved = v, li, si, True
            if not improved:
                break
        self.lengthscales = np.array([LENGTH_GRID[i] for i in ls_idx])
        self.signal_var = SIGNAL_GRID[sf_idx]

    def _kernel_train(self, ls, sf2):
        return sf2 * np.exp(-0.5 * (self._sq @ (1.0 / ls**2)))

    def _chol(self, ls, sf2):
        """Lower Cholesky factor of the noisy kernel matrix."""
        K = self._kernel_train(ls, sf2)
        diag = K.diagonal().copy() + self.noise_n
        jitter = 1e-10
        for _ in range(8):
            np.fill_diagonal(K, diag + jitter)
            try:
                return np.linalg.cholesky(K)
            except np.linalg.LinAlgError:
                jitter *= 10.0
        raise np.linalg.LinAlgError("kernel matrix is not positive definite")

    def log_marginal_likelihood(self, ls, sf2) -> float:
        try:
            L = self._chol(np.asarray(ls, float), sf2)
        except np.linalg.LinAlgError:
            return -np.inf
        z = linalg.solve_triangular(L, self.yn, lower=True, check_finite=False)
        return float(-0.5 * z @ z - np.log(np.diag(L)).sum() - 0.5 * len(self.yn) * math.log(2 * math.pi))

    def _select_hypers(self, d):
        best = (-np.inf, None, None)
        for ell in LENGTH_GRID:
            for sf2 in SIGNAL_GRID:
                ls = np.full(d, ell)
                lml = self.log_marginal_likelihood(ls, sf2)
                if lml > best[0]:
                    best = (lml, ls, sf2)
        lml, ls, sf2 = best
        if ls is None:
            ls, sf2 = np.full(d, LENGTH_GRID[2]), 1.0
        # one coordinate pass for per-dimension relevance
        if d > 1:
            for k in range(d):
                for ell in LENGTH_GRID:
                    if ell == ls[k]:
                        continue
                    trial = ls.copy()
                    trial[k] = ell
                    v = self.log_marginal_likelihood(trial, sf2)
                    if v > lml:
                        lml, ls = v, trial
        self.lengthscales, self.signal_var = ls, sf2

    def _factor(self, ls, sf2):
        self._L = self._chol(ls, sf2)
        self._alpha = linalg.cho_solve((self._L, True), self.yn, check_finite=False)

    def kernel(self, A, B) -> np.ndarray:
        A, B = np.atleast_2d(A), np.atleast_2d(B)
        d2 = cdist(A / self.lengthscales, B / self.lengthscales, "sqeuclidean")
        return self.signal_var * np.exp(-0.5 * d2)

    def predict(self, Uq) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance (original score units) at each row of ``Uq``."""
        if not self._fitted:
            raise RuntimeError("GP model is not fitted")
        Uq = np.atleast_2d(np.asarray(Uq, float))
        Ks = self.kernel(Uq, self.U)
        mean = Ks @ self._alpha
        v = linalg.solve_triangular(self._L, Ks.T, lower=True, check_finite=False)
        var = np.maximum(self.signal_var - (v**2).sum(axis=0), 0.0)
        return self.y_mean + self.y_scale * mean, var * self.y_scale**2


def gp_posterior(model: GpModel, u) -> tuple[float, float]:
    m, v = model.predict(np.atleast_2d(u))
    return float(m[0]), float(v[0])


# ---------------------------------------------------------------------------
# optimization loop

ScoreFn = Callable[[np.ndarray], Union[float, tuple[float, float]]]


@dataclass
class OptimizeResult:
    u_best: np.ndarray  # incumbent by posterior mean
    estimated_best: float
    u_observed: np.ndarray  # best observed point
    y_observed: float
    n_evals: int
    history: list = field(default_factory=list)

    def history_json(self) -> list:
        return [dict(h) for h in self.history]


def _as_obs(r) -> tuple[float, float]:
    if isinstance(r, tuple):
        y, s = r
    else:
        y, s = r, 0.0
    y = float(y)
    return y, float(s) if math.isfinite(s) else 0.0


def _pattern_search(f, u0, f0, step=0.05, min_step=1e-3, max_rounds=20):
    """Compass search: try every +-step coordinate move at once, take the best."""
    u, best = u0.copy(), f0
    d = len(u)
    moves = np.vstack([np.eye(d), -np.eye(d)])
    for _ in range(max_rounds):
        if step < min_step:
            break
        trials = np.clip(u + step * moves, 0.0, 1.0)
        vals = f(trials)
        k = int(np.argmax(vals))
        if vals[k] > best + 1e-12:
            u, best = trials[k], float(vals[k])
        else:
            step *= 0.5
    return u, best


def optimize(
    score: ScoreFn,
    dim: int,
    cfg: UcbConfig = LIGHT,
    initial_points: Optional[Sequence[Sequence[float]]] = None,
) -> OptimizeResult:
    """Maximize ``score`` over ``[0, 1]^dim``.

    ``score`` returns either a value or ``(value, noise_estimate)``; a
    non-finite value marks an infeasible point. ``initial_points`` are
    evaluated first, as part of the initial design.
    """
    rng = np.random.default_rng(cfg.seed)
    history: list[dict] = []
    if dim == 0:
        y, s = _as_obs(score(np.zeros(0)))
        if not math.isfinite(y):
            raise NoFiniteScoreError("score is not finite")
        history.append({"iter": 0, "u": [], "y": y, "noise": s, "best_y": y})
        return OptimizeResult(np.zeros(0), y, np.zeros(0), y, 1, history)

    design = qmc.LatinHypercube(d=dim, seed=rng).random(cfg.n_init)
    if initial_points is not None and len(initial_points):
        warm = np.clip(np.atleast_2d(np.asarray(initial_points, float)), 0, 1)[: cfg.n_init]
        design[: len(warm)] = warm
    cands = qmc.Sobol(d=dim, scramble=True, seed=rng).random(cfg.n_candidates)

    U: list[np.ndarray] = []
    Y: list[float] = []
    S: list[float] = []
    best_y = -np.inf

    def observe(u, it, ucb=None):
        nonlocal best_y
        y, s = _as_obs(score(u))
        U.append(np.asarray(u, float))
        Y.append(y)
        S.append(s)
        if math.isfinite(y) and y > best_y:
            best_y = y
        h = {"iter": it, "u": [float(v) for v in u], "y": y if math.isfinite(y) else None, "noise": s,
             "best_y": best_y if math.isfinite(best_y) else None}
        if ucb is not None:
            h["ucb"] = ucb
        history.append(h)

    for u in design:
        observe(u, 0)

    stall = 0
    model = None
    t = 0
    while len(Y) < cfg.max_iter:
        t += 1
        model = _fit(U, Y, S, cfg, model)
        sb = math.sqrt(beta(t, cfg.delta))

        def acq(P):
            m, v = model.predict(P)
            return m + sb * np.sqrt(v)

        a = acq(cands)
        k = int(np.argmax(a))
        u_next, a_best = _pattern_search(acq, cands[k], a[k])
        inc = _incumbent(model, U)[1]
        observe(u_next, t, float(a_best))
        if a_best - inc < cfg.eps_stop:
            stall += 1
            if stall >= cfg.k_stop:
                break
        else:
            stall = 0

    if not math.isfinite(best_y):
        raise NoFiniteScoreError(f"all {len(Y)} evaluations returned non-finite scores")
    model = _fit(U, Y, S, cfg, model)
    i_obs = max((i for i in range(len(Y)) if math.isfinite(Y[i])), key=lambda i: Y[i])
    ui, est = _mean_maximizer(model, U, cands)
    return OptimizeResult(ui, est, U[i_obs].copy(), Y[i_obs], len(Y), history)


def _fit(U, Y, S, cfg, previous: Optional[GpModel] = None) -> GpModel:
    y = np.asarray(Y, float)
    ok = np.isfinite(y)
    if ok.any():
        lo = y[ok].min()
        spread = y[ok].max() - lo
        y = np.where(ok, y, lo - max(spread, 1.0))
    else:
        y = np.zeros_like(y)
    noise = np.maximum(np.asarray(S, float) ** 2, cfg.noise_floor)
    start = previous.hypers if previous is not None else None
    return GpModel().fit(np.array(U), y, noise, start=start)


def _mean_maximizer(model: GpModel, U, cands):
    """Maximize the posterior mean over observed points and the candidate set."""
    P = np.vstack([np.array(U), cands])
    m, _ = model.predict(P)
    k = int(np.argmax(m))
    u, val = _pattern_search(lambda Q: model.predict(Q)[0], P[k], m[k])
    return u, float(val)


def _incumbent(model: GpModel, U, finite=None):
    P = np.array(U)
    m, _ = model.predict(P)
    if finite is not None:
        m = np.where(finite, m, -np.inf)
    i = int(np.argmax(m))
    return P[i].copy(), float(m[i])
