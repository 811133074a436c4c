"""Command-line interface: ``stlmine {gen,mine,cv,robust,classify}``.

Every command prints one JSON document on stdout carrying ``schema_version``.
Errors go to stderr with exit status 2 (bad usage) or 1 (failed operation).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import gpucb
from .cv import kfold_cv
from .data import DatasetError, confusion, load_dataset, read_trace, save_dataset
from .monitor import robustness
from .naval import NavalGenConfig, generate_naval
from .parser import parse
from .roge import SCHEMA_VERSION, RogeConfig, mine
from .stl import format_formula

log = logging.getLogger("stlmine")


def jsonable(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _emit(doc: dict, out) -> None:
    text = json.dumps(jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _roge_config(args) -> RogeConfig:
    cfg = RogeConfig(
        ne=args.ne,
        ng=args.ng,
        alpha=args.alpha,
        s=args.s,
        seed=args.seed,
        selection=args.selection,
        penalty=args.penalty,
    )
    if args.light_budget is not None:
        cfg = replace(cfg, gpucb_light=_budget(gpucb.LIGHT, args.light_budget))
    if args.final_budget is not None:
        cfg = replace(cfg, gpucb_final=_budget(gpucb.FINAL, args.final_budget))
    return cfg


def _budget(base: gpucb.UcbConfig, max_iter: int) -> gpucb.UcbConfig:
    # a small budget also shrinks the initial design so that it still fits
    return replace(base, max_iter=max_iter, n_init=min(base.n_init, max_iter))


def cmd_gen(args) -> dict:
    cfg = NavalGenConfig(
        n_normal=args.n_normal,
        n_anomalous_red=args.n_red,
        n_anomalous_blue=args.n_blue,
        samples_per_trace=args.samples,
        noise_std=args.noise,
        seed=args.seed,
    )
    d = generate_naval(cfg)
    save_dataset(d, args.out)
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": str(args.out),
        "positives": len(d.positives),
        "negatives": len(d.negatives),
        "samples_per_trace": d.n_samples,
        "dt": d.dt,
        "seed": args.seed,
    }


def cmd_mine(args) -> dict:
    d = load_dataset(args.data)
    cfg = _roge_config(args)

    def progress(gen):
        log.info("generation %d: best fitness %.4f", gen.index, gen.curve[-1])

    res = mine(d, cfg, progress)
    if args.trace_opt:
        hist = {
            "schema_version": SCHEMA_VERSION,
            "template": format_formula(res.template),
            "history": list(res.optimizer_history),
        }
        Path(args.trace_opt).write_text(json.dumps(jsonable(hist), indent=2, sort_keys=True) + "\n")
    doc = res.to_json()
    if args.no_timing:
        doc.pop("elapsed_seconds")
    return doc


def cmd_cv(args) -> dict:
    d = load_dataset(args.data)
    report = kfold_cv(d, args.folds, _roge_config(args), workers=args.workers)
    return report.to_json(timing=not args.no_timing)


def cmd_robust(args) -> dict:
    f = parse(args.formula)
    x = read_trace(args.trace)
    return {
        "schema_version": SCHEMA_VERSION,
        "formula": args.formula,
        "trace": str(args.trace),
        "time_index": args.index,
        "robustness": robustness(f, x, args.index),
    }


def cmd_classify(args) -> dict:
    f = parse(args.formula)
    d = load_dataset(args.data)
    c = confusion(f, d)
    return {
        "schema_version": SCHEMA_VERSION,
        "formula": args.formula,
        **c.as_dict(),
        "misclassification": c.misclassification,
        "false_positive_rate": c.false_positive_rate,
        "false_negative_rate": c.false_negative_rate,
    }


def _add_mining_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, type=Path, help="dataset directory")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--ne", type=int, default=40, help="population size")
    p.add_argument("--ng", type=int, default=20, help="maximum number of generations")
    p.add_argument("--alpha", type=float, default=0.05, help="mutation probability")
    p.add_argument("--s", type=int, default=5, help="maximum size of random initial formulas")
    p.add_argument("--selection", choices=("roulette", "trunc"), default="roulette")
    p.add_argument("--penalty", choices=("decaying", "growing"), default="decaying", help="size penalty shape")
    p.add_argument("--light-budget", type=int, default=None, help="GP-UCB evaluations per candidate")
    p.add_argument("--final-budget", type=int, default=None, help="GP-UCB evaluations for the winner")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    p.add_argument("--out", type=Path, default=None, help="also write the JSON here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stlmine", description="Mine STL classifiers from labeled traces.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("kind", choices=("naval",))
    g.add_argument("--seed", required=True, type=int)
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--n-normal", type=int, default=1000)
    g.add_argument("--n-red", type=int, default=500)
    g.add_argument("--n-blue", type=int, default=500)
    g.add_argument("--samples", type=int, default=61)
    g.add_argument("--noise", type=float, default=0.3)
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("mine", help="mine one formula from a dataset")
    _add_mining_flags(m)
    m.add_argument("--trace-opt", type=Path, default=None, help="write the final GP-UCB history as JSON")
    m.set_defaults(func=cmd_mine)

    c = sub.add_parser("cv", help="k-fold cross-validation")
    _add_mining_flags(c)
    c.add_argument("--folds", type=int, default=10)
    c.add_argument("--workers", type=int, default=1, help="folds mined in parallel")
    c.set_defaults(func=cmd_cv)

    r = sub.add_parser("robust", help="robustness of a formula on one trace CSV")
    r.add_argument("--formula", required=True)
    r.add_argument("--trace", required=True, type=Path)
    r.add_argument("--index", type=int, default=0, help="sample index to evaluate at")
    r.set_defaults(func=cmd_robust, out=None)

    k = sub.add_parser("classify", help="confusion counts of a formula on a dataset")
    k.add_argument("--formula", required=True)
    k.add_argument("--data", required=True, type=Path)
    k.set_defaults(func=cmd_classify, out=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        doc = args.func(args)
    except (ValueError, KeyError, OSError, DatasetError, RuntimeError) as e:
        print(f"stlmine {args.command}: error: {e}", file=sys.stderr)
        return 1
    _emit(doc, None if args.command == "gen" else args.out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
