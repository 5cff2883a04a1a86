"""Command-line interface: simulate networks, compute selection counts, fit
the count mixture pipeline, select edges, and run method comparisons."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from scipy.stats import median_abs_deviation

from . import __version__
from .benchmark import ComparisonScenario, kappa_analysis, run_comparison
from .counts import ResamplePlan, compute_counts, make_grid
from .graphs import (SIGNALS, TOPOLOGIES, DataMatrix, build_covariance,
                     gen_topology, sample_gaussian)
from .io import (read_counts_csv, read_data_csv, write_counts_csv,
                 write_data_csv, write_edges_csv, write_gcurve_csv,
                 write_kappa_csv, write_report_csv, write_rope_json)
from .graphs import EdgeSet
from .mixture import NotFittableError
from .pipeline import RopeConfig, run_rope

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_FITTABLE = 3
EXIT_IO = 4

_TARGETS_DEFAULT = "0.05,0.1,0.15"


def _parse_targets(spec: str) -> List[float]:
    try:
        targets = [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"invalid target list {spec!r}")
    if not targets or not all(0 < t <= 1 for t in targets):
        raise ValueError("targets must be numbers in (0, 1]")
    return targets


def _read_config_file(path: str) -> dict:
    """key = value lines; # comments and blank lines ignored."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def _grid_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--lambda-min", type=float, default=0.02,
                     help="smallest penalty level")
    sub.add_argument("--lambda-max", type=float, default=0.3,
                     help="largest penalty level")
    sub.add_argument("--steps", type=int, default=15,
                     help="number of penalty levels")
    sub.add_argument("--b", type=int, default=500, dest="b",
                     help="number of resamples")
    sub.add_argument("--weakness", type=float, default=0.8,
                     help="lower bound of the randomized penalty weights")
    sub.add_argument("--resample", choices=("bootstrap", "subsample"),
                     default="bootstrap")
    sub.add_argument("--subsample-size", type=int, default=None,
                     help="rows per subsample (default: half of n)")


def _fit_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--level", type=float, default=0.95,
                     help="confidence level for the penalty intervals")
    sub.add_argument("--n-boot", type=int, default=100,
                     help="bootstrap replicates for the penalty intervals")
    sub.add_argument("--restarts", type=int, default=8,
                     help="optimizer restarts per histogram fit")
    sub.add_argument("--fraction", type=float, default=0.75,
                     help="count mass fraction defining the low-count cutoff")


def _mad_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--mad-keep", type=float, default=None,
                     help="keep this fraction of columns, by decreasing "
                          "median absolute deviation")
    sub.add_argument("--mad-scale", action="store_true", default=False,
                     help="rescale kept columns to median absolute deviation 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ropenet",
        description="Resampling-based edge selection for sparse network "
                    "models with FDR control.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("--config", default=None,
                        help="key = value file; command-line flags override it")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (results do not depend on this)")
    parser.add_argument("-v", "--verbose", action="store_true", default=False)
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="generate a network and data")
    sim.add_argument("--topology", choices=TOPOLOGIES, default="scale_free")
    sim.add_argument("--nodes", type=int, default=100, dest="d")
    sim.add_argument("--n", type=int, default=200, help="observations")
    sim.add_argument("--edges", type=int, default=None,
                     help="target edge count (scale-free only)")
    sim.add_argument("--signal", choices=tuple(SIGNALS), default="strong")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--data-out", required=True)
    sim.add_argument("--edges-out", required=True)

    cnt = commands.add_parser("counts", help="selection counts from data")
    cnt.add_argument("--data", required=True, help="input data CSV")
    _grid_args(cnt)
    _mad_args(cnt)
    cnt.add_argument("--seed", type=int, default=0)
    cnt.add_argument("--out", required=True, help="counts CSV (sidecar JSON "
                     "is written next to it)")

    fit = commands.add_parser("fit", help="fit the pipeline on counts")
    fit.add_argument("--counts", required=True, help="input counts CSV")
    _fit_args(fit)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", required=True, help="result JSON")
    fit.add_argument("--gcurve", default=None,
                     help="optional separation-curve CSV")

    sel = commands.add_parser("select", help="edges under a target FDR from "
                              "a fitted result")
    sel.add_argument("--result", required=True, help="result JSON from fit")
    sel.add_argument("--target", type=float, default=0.1)
    sel.add_argument("--out", required=True, help="edges CSV")

    cmp_ = commands.add_parser("compare", help="simulate and score both methods")
    cmp_.add_argument("--topology", choices=TOPOLOGIES, default="scale_free")
    cmp_.add_argument("--signal", choices=tuple(SIGNALS), default="strong")
    cmp_.add_argument("--nodes", type=int, default=100, dest="d")
    cmp_.add_argument("--n", type=int, default=200)
    cmp_.add_argument("--edges", type=int, default=None)
    _grid_args(cmp_)
    _fit_args(cmp_)
    cmp_.add_argument("--targets", default=_TARGETS_DEFAULT,
                      help="comma-separated target FDR levels")
    cmp_.add_argument("--replicates", type=int, default=20)
    cmp_.add_argument("--seed", type=int, default=0)
    cmp_.add_argument("--out", required=True, help="report CSV")

    kap = commands.add_parser("kappa", help="selection agreement across "
                              "model subsamples")
    kap.add_argument("--data", required=True, help="input data CSV")
    _grid_args(kap)
    _fit_args(kap)
    _mad_args(kap)
    kap.add_argument("--targets", default=_TARGETS_DEFAULT)
    kap.add_argument("--subsamples", type=int, default=20)
    kap.add_argument("--subsample-models", type=int, default=None,
                     help="models per subsample (default: 0.8 B)")
    kap.add_argument("--seed", type=int, default=0)
    kap.add_argument("--out", required=True, help="agreement CSV")
    parser.command_parsers = commands.choices
    return parser


def _coerce_for_action(action: argparse.Action, value: str) -> object:
    if action.type is not None:
        out = action.type(value)
    elif isinstance(action.default, bool):
        out = _coerce(value, action.default)
    else:
        out = value
    if action.choices is not None and out not in action.choices:
        raise ValueError(
            f"config value {value!r} for {action.dest} not in "
            f"{tuple(action.choices)}")
    return out


def _apply_config_file(parser: argparse.ArgumentParser, command: str,
                       path: str) -> None:
    """Install file values as defaults so explicit flags still win."""
    file_values = _read_config_file(path)
    sub = parser.command_parsers[command]
    actions = {a.dest: a for a in sub._actions}
    top = {a.dest: a for a in parser._actions if a.dest not in actions}
    unknown = set(file_values) - set(actions) - set(top)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    sub.set_defaults(**{k: _coerce_for_action(actions[k], v)
                        for k, v in file_values.items() if k in actions})
    parser.set_defaults(**{k: _coerce_for_action(top[k], v)
                           for k, v in file_values.items() if k in top})


def _mad_filter(data: DataMatrix, keep: Optional[float],
                scale: bool) -> DataMatrix:
    values, names = data.values, list(data.column_names)
    mads = median_abs_deviation(values, axis=0)
    if keep is not None:
        if not 0 < keep <= 1:
            raise ValueError("--mad-keep must be in (0, 1]")
        k = max(2, int(round(keep * values.shape[1])))
        order = np.argsort(-mads, kind="stable")[:k]
        order.sort()
        values, mads = values[:, order], mads[order]
        names = [names[i] for i in order]
        logger.info("kept %d of %d columns by MAD", k, data.d)
    if scale:
        safe = np.where(mads > 0, mads, 1.0)
        values = values / safe
    return DataMatrix(values=values, column_names=tuple(names))


def _load_counts_settings(args) -> tuple:
    lambdas = make_grid(args.lambda_min, args.lambda_max, args.steps)
    plan = ResamplePlan(kind=args.resample, B=args.b,
                        subsample_size=args.subsample_size,
                        weakness=args.weakness, seed=args.seed)
    return lambdas, plan


def cmd_simulate(args) -> int:
    truth = gen_topology(args.topology, args.d, target_edges=args.edges,
                         seed=args.seed)
    cov = build_covariance(truth, SIGNALS[args.signal], seed=args.seed)
    data = sample_gaussian(cov, args.n, seed=args.seed)
    write_data_csv(data, args.data_out)
    write_edges_csv(truth, args.edges_out)
    print(f"wrote {args.n} x {args.d} data to {args.data_out}; "
          f"{len(truth)} edges to {args.edges_out}")
    return EXIT_OK


def cmd_counts(args) -> int:
    data = read_data_csv(args.data)
    data = _mad_filter(data, args.mad_keep, args.mad_scale)
    lambdas, plan = _load_counts_settings(args)
    W = compute_counts(data.values, lambdas, plan, n_jobs=args.threads)
    write_counts_csv(W, args.out)
    print(f"wrote counts for {W.p} potential edges, {len(lambdas)} penalties, "
          f"B={W.B} to {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    W = read_counts_csv(args.counts)
    config = RopeConfig(level=args.level, n_boot=args.n_boot, seed=args.seed,
                        inflation_fraction=args.fraction,
                        n_restarts=args.restarts)
    result = run_rope(W, config)
    write_rope_json(result, args.out)
    if args.gcurve:
        write_gcurve_csv(result, args.gcurve)
    print(f"lambda_a={result.lambda_a:g} lambda_b={result.lambda_b:g} "
          f"pi_star={result.pi_star:.6g}; wrote {args.out}")
    return EXIT_OK


def cmd_select(args) -> int:
    if not 0 < args.target <= 1:
        raise ValueError("--target must be in (0, 1]")
    with open(args.result) as fh:
        payload = json.load(fh)
    d = payload["d"]
    q_curve = payload["q_curve"]
    pairs = [(e["i"], e["j"]) for e in payload["edges"]
             if e["qvalue"] < args.target]
    if q_curve and q_curve[0] < args.target:
        logger.warning("q-value at count 0 is below the target; "
                       "unseen edges would qualify but are not listed")
    edges = EdgeSet.from_pairs(d, pairs)
    write_edges_csv(edges, args.out)
    print(f"selected {len(edges)} edges at target {args.target:g}; "
          f"wrote {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario = ComparisonScenario(
        topology=args.topology, signal=args.signal, d=args.d, n=args.n,
        target_edges=args.edges, B=args.b, steps=args.steps,
        lambda_min=args.lambda_min, lambda_max=args.lambda_max,
        weakness=args.weakness, resample=args.resample,
        targets=tuple(_parse_targets(args.targets)),
        n_replicates=args.replicates, seed=args.seed, n_boot=args.n_boot,
        n_restarts=args.restarts, n_jobs=args.threads)
    rows = run_comparison(scenario)
    write_report_csv(rows, args.out)
    print(f"wrote {len(rows)} report rows to {args.out}")
    return EXIT_OK


def cmd_kappa(args) -> int:
    data = read_data_csv(args.data)
    data = _mad_filter(data, args.mad_keep, args.mad_scale)
    lambdas, plan = _load_counts_settings(args)
    W = compute_counts(data.values, lambdas, plan, n_jobs=args.threads,
                       keep_selections=True)
    config = RopeConfig(level=args.level, n_boot=args.n_boot, seed=args.seed,
                        inflation_fraction=args.fraction,
                        n_restarts=args.restarts)
    rows = kappa_analysis(W, _parse_targets(args.targets),
                          n_subsamples=args.subsamples,
                          subsample_size=args.subsample_models,
                          seed=args.seed, rope_config=config)
    write_kappa_csv(rows, args.out)
    print(f"wrote {len(rows)} agreement rows to {args.out}")
    return EXIT_OK


_COMMANDS = {"simulate": cmd_simulate, "counts": cmd_counts, "fit": cmd_fit,
             "select": cmd_select, "compare": cmd_compare, "kappa": cmd_kappa}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            _apply_config_file(parser, args.command, args.config)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except NotFittableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FITTABLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
