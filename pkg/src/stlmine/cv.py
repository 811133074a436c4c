"""Stratified k-fold cross-validation of the mining pipeline."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .data import Dataset, confusion
from .roge import SCHEMA_VERSION, RogeConfig, _seed, mine
from .stl import format_formula, size


@dataclass(frozen=True)
class FoldResult:
    fold: int
    misclassification: float
    false_positive: float
    false_negative: float
    formula: str
    raw_formula: str
    formula_size: int
    top_level: str
    g_score: float
    training_misclassification: float
    n_train: int
    n_test: int
    seconds: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class CvReport:
    k: int
    seed: int
    folds: tuple[FoldResult, ...]
    config: dict

    def _stat(self, attr):
        v = np.array([getattr(f, attr) for f in self.folds])
        return float(v.mean()), float(v.std())

    @property
    def misclassification(self) -> tuple[float, float]:
        return self._stat("misclassification")

    @property
    def false_positive(self) -> tuple[float, float]:
        return self._stat("false_positive")

    @property
    def false_negative(self) -> tuple[float, float]:
        return self._stat("false_negative")

    def to_json(self, timing: bool = True) -> dict:
        folds = [f.as_dict() for f in self.folds]
        if not timing:
            for f in folds:
                f.pop("seconds")
        out = {
            "schema_version": SCHEMA_VERSION,
            "k": self.k,
            "seed": self.seed,
            "misclassification": dict(zip(("mean", "std"), self.misclassification)),
            "false_positive": dict(zip(("mean", "std"), self.false_positive)),
            "false_negative": dict(zip(("mean", "std"), self.false_negative)),
            "folds": folds,
            "config": self.config,
        }
        if timing:
            out["seconds"] = dict(zip(("mean", "std"), self._stat("seconds")))
        return out


def stratified_folds(n_pos: int, n_neg: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Validation indices ``(positives, negatives)`` of each fold."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n_pos < k or n_neg < k:
        raise ValueError(f"each class needs at least k={k} traces (have {n_pos} and {n_neg})")
    rng = np.random.default_rng(_seed(seed, 3))
    pos = np.array_split(rng.permutation(n_pos), k)
    neg = np.array_split(rng.permutation(n_neg), k)
    return [(np.sort(p), np.sort(n)) for p, n in zip(pos, neg)]


def _top_level(f) -> str:
    return type(f).__name__


def run_fold(d: Dataset, fold: int, val_pos, val_neg, cfg: RogeConfig) -> FoldResult:
    t0 = time.perf_counter()
    tr_pos = np.setdiff1d(np.arange(len(d.positives)), val_pos)
    tr_neg = np.setdiff1d(np.arange(len(d.negatives)), val_neg)
    train = d.subset(tr_pos, tr_neg)
    test = d.subset(val_pos, val_neg)
    res = mine(train, cfg)
    c = confusion(res.best_formula, test)
    return FoldResult(
        fold=fold,
        misclassification=c.misclassification,
        false_positive=c.false_positive_rate,
        false_negative=c.false_negative_rate,
        formula=format_formula(res.best_formula),
        raw_formula=format_formula(res.raw_formula),
        formula_size=size(res.best_formula),
        top_level=_top_level(res.best_formula),
        g_score=res.g_score,
        training_misclassification=res.training_misclassification,
        n_train=train.size,
        n_test=test.size,
        seconds=time.perf_counter() - t0,
    )


def kfold_cv(
    d: Dataset,
    k: int = 10,
    cfg: RogeConfig = RogeConfig(),
    workers: Optional[int] = 1,
    folds: Optional[list[int]] = None,
) -> CvReport:
    """Mine on k-1 folds and score the calibrated formula on the held-out one.

    Each fold mines with its own seed derived from ``cfg.seed``, so running
    the folds in parallel (``workers > 1``) gives the same report as running
    them one after another.
    """
    splits = stratified_folds(len(d.positives), len(d.negatives), k, cfg.seed)
    todo = list(range(k)) if folds is None else list(folds)
    jobs = [(d, i, splits[i][0], splits[i][1], replace(cfg, seed=_seed(cfg.seed, 4, i))) for i in todo]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_fold, *zip(*jobs)))
    else:
        results = [run_fold(*j) for j in jobs]
    return CvReport(k, cfg.seed, tuple(results), cfg.as_dict())
