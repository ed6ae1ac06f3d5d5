"""
Command-line experiment runner.

    whittlecrawl run table1_m1.json --out out/m1
    whittlecrawl index table1_m1.json --source 0 --k 1
    whittlecrawl verify table1_m1.json

Exit codes: 0 success, 1 a verification check failed, 2 bad config, arguments or I/O.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .dp_oracle import (ConvergenceError, IndexabilityError, SubsidyProblem, check_value_function,
                        oracle_index, passive_set_sweep, solve_average_lattice, solve_discounted)
from .model import InvalidParameterError, SourceParams
from .sim import run
from .whittle import eta, lattice_index, whittle_index


def run_experiment(cfg: ExperimentConfig, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    trace, summary = run(cfg.fleet, cfg.policy, cfg.mode, cfg.horizon, cfg.warmup, cfg.seed,
                         cfg.arrival, cfg.x0)
    trace.write_csv(out_dir / "trace.csv")
    doc = summary.to_dict()
    doc["config"] = cfg.to_dict()
    doc["version"] = __version__
    (out_dir / "summary.json").write_text(json.dumps(doc, indent=2) + "\n")
    return trace, summary


def _one_line(summary) -> str:
    cycle = "none"
    if summary.cycle_period is not None:
        crawled = [i for i, c in enumerate(summary.crawl_count) if c > 0]
        cycle = f"period {summary.cycle_period} over sources {crawled}"
    frac = " ".join(f"{f:.3f}" for f in summary.crawl_fraction)
    return (f"average_reward={summary.average_reward:.4f} "
            f"(no warmup {summary.average_reward_no_warmup:.4f}) "
            f"average_cost={summary.average_cost:.4f} cycle={cycle} crawl_fraction=[{frac}]")


def _replicate(args):
    cfg, out_dir = args
    _, summary = run_experiment(cfg, out_dir)
    return summary.average_reward


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.horizon is not None:
        cfg.horizon = args.horizon
        if cfg.warmup is not None and cfg.warmup >= cfg.horizon:
            cfg.warmup = None
    out = Path(args.out or cfg.out_dir or "out")
    if args.replications <= 1:
        _, summary = run_experiment(cfg, out)
        print(_one_line(summary))
        return 0
    base_seed = cfg.seed if cfg.seed is not None else 0
    jobs = [(dataclasses.replace(cfg, seed=base_seed + r), out / f"rep_{r:03d}") for r in range(args.replications)]
    with ProcessPoolExecutor() as pool:
        rewards = list(pool.map(_replicate, jobs))
    merged = {"replications": [{"id": r, "seed": j[0].seed, "average_reward": w}
                               for r, (j, w) in enumerate(zip(jobs, rewards))],
              "mean_average_reward": float(np.mean(rewards)),
              "version": __version__}
    out.mkdir(parents=True, exist_ok=True)
    (out / "replications.json").write_text(json.dumps(merged, indent=2) + "\n")
    print(f"replications={len(rewards)} mean_average_reward={np.mean(rewards):.4f} "
          f"std={np.std(rewards, ddof=1):.4f}")
    return 0


def cmd_index(args) -> int:
    cfg = load_config(args.config)
    if not 0 <= args.source < cfg.fleet.n:
        print(f"error: source id {args.source} out of range 0..{cfg.fleet.n - 1}", file=sys.stderr)
        return 2
    p = cfg.fleet.sources[args.source]
    if (args.x is None) == (args.k is None):
        print("error: give exactly one of --x or --k", file=sys.stderr)
        return 2
    if args.k is not None:
        x, gamma = p.lattice(args.k), lattice_index(args.k, p)
    else:
        x, gamma = args.x, whittle_index(args.x, p)
    print(f"source={args.source} x={x:.10g} eta={eta(x, p)} gamma={gamma:.10g}")
    return 0


def verify_source(p: SourceParams, tol: float = 1e-6, grid_n: int = 4001, n_lambda: int = 50,
                  k_max: int = 25) -> list[tuple[str, bool, str]]:
    """Run the DP-based checks for one source. Returns ``(check, passed, detail)`` rows."""
    rows = []
    probe = [whittle_index(p.lattice(k), p) for k in (2, 5)]
    for delta in (0.9, 0.99):
        for lam in probe:
            vf = solve_discounted(SubsidyProblem(p, lam), delta, grid_n)
            for name, (ok, worst) in check_value_function(vf, p).items():
                rows.append((f"{name} delta={delta} lambda={lam:.4g}", ok, f"{worst:.3e}"))

    lam = probe[0]
    vf = solve_discounted(SubsidyProblem(p, lam), 0.999, grid_n)
    beta, _ = solve_average_lattice(SubsidyProblem(p, lam))
    rel = abs((1 - 0.999) * vf.values[0] - beta) / abs(beta)
    rows.append((f"vanishing discount lambda={lam:.4g}", rel <= 0.01, f"rel err {rel:.2e}"))

    lambdas = np.linspace(0.0, 2.0 * p.u_star / p.cost, n_lambda)
    parts = passive_set_sweep(p, lambdas, strict=False)
    bad = [q.lambda_subsidy for q in parts if not q.is_threshold]
    rows.append(("passive set is [u, a)", not bad, f"violations at lambda={bad}" if bad else f"{len(parts)} lambdas"))
    a = [q.threshold_a for q in parts]
    drops = [lambdas[j + 1] for j in range(len(a) - 1) if a[j + 1] < a[j]]
    rows.append(("threshold nondecreasing in lambda", not drops,
                 f"decrease at lambda={drops}" if drops else "ok"))

    worst_k, worst = None, 0.0
    for k in range(1, k_max + 1):
        x = p.lattice(k)
        g = whittle_index(x, p)
        try:
            o = oracle_index(x, p, tol=min(1e-9, tol * 1e-3))
        except IndexabilityError as exc:
            rows.append((f"oracle index k={k}", False, str(exc)))
            continue
        err = abs(o - g) / max(1.0, abs(g))
        if err > worst:
            worst_k, worst = k, err
    rows.append((f"oracle vs closed form k=1..{k_max}", worst <= tol,
                 f"max rel err {worst:.2e}" + (f" at k={worst_k}" if worst > tol else "")))
    return rows


def cmd_verify(args) -> int:
    if not args.tol > 0:
        print("error: --tol must be positive; closed-form and DP indices agree only up to "
              "floating-point and bisection error", file=sys.stderr)
        return 2
    cfg = load_config(args.config)
    failed = 0
    print(f"{'source':>6}  {'check':<44} {'result':<6} detail")
    for i, p in enumerate(cfg.fleet.sources):
        try:
            rows = verify_source(p, args.tol, args.grid_n, args.sweep_points)
        except ConvergenceError as exc:
            rows = [("solver convergence", False, str(exc))]
        for name, ok, detail in rows:
            failed += not ok
            print(f"{i:>6}  {name:<44} {'PASS' if ok else 'FAIL':<6} {detail}")
    print("all checks passed" if not failed else f"{failed} check(s) failed")
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="whittlecrawl", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a config, write trace.csv and summary.json")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: config output.dir or ./out)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--horizon", type=int, help="override the config horizon")
    p.add_argument("--replications", type=int, default=1,
                   help="independent runs with seeds seed, seed+1, ... written to rep_NNN/")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("index", help="print the Whittle index of one source")
    p.add_argument("config")
    p.add_argument("--source", type=int, required=True, help="0-based source id")
    p.add_argument("--x", type=float, help="state value")
    p.add_argument("--k", type=int, help="lattice step (state (1 - alpha^k) u_star)")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("verify", help="check the closed-form index against the DP oracle")
    p.add_argument("config")
    p.add_argument("--tol", type=float, default=1e-6, help="relative index agreement tolerance")
    p.add_argument("--grid-n", type=int, default=4001)
    p.add_argument("--sweep-points", type=int, default=50)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
