"""Command-line front end.

Subcommands:
  campaign                multi-source Monte Carlo campaign from a JSON config
  bounds                  analytic mean-rate bound curves as CSV/JSON
  validate-single-source  greedy single-source scheme vs. the bounds
  precoding-bench         sandwich statistics of the discrete weight solvers
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bounds import BoundParams, mean_rate_bound_pathloss, \
    mean_rate_bound_shadowing
from .harness import (ScenarioConfig, fmt_float, run_campaign,
                      run_single_source_validation, write_campaign_outputs,
                      write_rows)
from .precoding import (Codebook, PrecodingProblem, enumerate_optimum,
                        round_solution, sdr_solve)


def _add_common(p):
    p.add_argument("--out-dir", default="out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _cmd_campaign(args) -> int:
    config = ScenarioConfig.from_json_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        d = config.to_json_dict()
        d.update(overrides)
        config = ScenarioConfig.from_json_dict(d)
    result = run_campaign(config)
    write_campaign_outputs(result, args.out_dir, args.format)
    print(json.dumps(result.summary(), indent=1, sort_keys=True))
    return 0


def _cmd_bounds(args) -> int:
    rows = []
    for gamma_db in args.gamma_db:
        gamma = 10.0 ** (gamma_db / 10.0)
        src_snr = (args.src_snr if args.src_snr is not None
                   else gamma * args.d_ref ** args.alpha)
        for lam in getattr(args, "lambda"):
            params = BoundParams(gamma=gamma, density=lam, src_snr=src_snr,
                                 alpha=args.alpha, sigma_db=args.sigma_db,
                                 d_max=args.d_max, delta=args.delta)
            res = (mean_rate_bound_pathloss(params) if args.sigma_db == 0.0
                   else mean_rate_bound_shadowing(params))
            rows.append({"lambda": lam, "gamma_db": gamma_db,
                         "bound_bps_hz": res.value, "baseline": res.baseline})
    path = os.path.join(args.out_dir, f"bounds.{args.format}")
    write_rows(rows, path, args.format)
    for row in rows:
        print(",".join(fmt_float(row[k]) if isinstance(row[k], float) else str(row[k])
                       for k in ("lambda", "gamma_db", "bound_bps_hz", "baseline")))
    return 0


def _cmd_validate(args) -> int:
    rows = run_single_source_validation(
        args.gamma_db, getattr(args, "lambda"), trials=args.trials,
        master_seed=args.seed, d_ref_m=args.d_ref, alpha=args.alpha,
        d_max=args.d_max, delta=args.delta)
    path = os.path.join(args.out_dir, f"single_source.{args.format}")
    write_rows(rows, path, args.format)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _cmd_precoding_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    for i in range(args.instances):
        dim = int(rng.integers(2, args.max_dim + 1))
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        q = a @ a.conj().T
        q /= np.linalg.norm(q, 2)
        for n_w in args.n_w:
            problem = PrecodingProblem(q=q, codebook=Codebook(n_w))
            exact = enumerate_optimum(problem)
            relax = sdr_solve(problem)
            rounded = round_solution(problem, relax.w,
                                     relaxation_value=relax.value)
            rows.append({
                "instance": i,
                "dim": dim,
                "n_w": n_w,
                "rounded": rounded.objective,
                "enumerated": exact.objective,
                "relaxation": relax.value,
                "rounded_over_enumerated":
                    rounded.objective / exact.objective if exact.objective else 1.0,
            })
    path = os.path.join(args.out_dir, f"precoding_bench.{args.format}")
    write_rows(rows, path, args.format)
    ratios = np.array([r["rounded_over_enumerated"] for r in rows])
    sandwich_ok = all(r["rounded"] <= r["enumerated"] + 1e-8
                      and r["enumerated"] <= r["relaxation"] + 1e-8
                      for r in rows)
    print(json.dumps({
        "instances": len(rows),
        "rounded_over_enumerated_min": float(ratios.min()),
        "rounded_over_enumerated_mean": float(ratios.mean()),
        "sandwich_holds": sandwich_ok,
    }, indent=1))
    return 0 if sandwich_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmimo",
        description="Virtual-MIMO relay clustering simulator and bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("campaign", help="run a multi-source Monte Carlo campaign")
    p.add_argument("--config", required=True, help="JSON scenario config")
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--trials", type=int, default=None, help="override trial count")
    _add_common(p)
    p.set_defaults(func=_cmd_campaign)

    p = sub.add_parser("bounds", help="emit analytic bound curves")
    p.add_argument("--gamma-db", type=float, nargs="+", default=[-10.0, 0.0, 10.0])
    p.add_argument("--lambda", type=float, nargs="+",
                   default=[0.0, 0.0025, 0.005, 0.01, 0.02])
    p.add_argument("--src-snr", type=float, default=None,
                   help="linear transmit SNR x gain constant (meters); "
                        "default derives from --d-ref")
    p.add_argument("--d-ref", type=float, default=35.0,
                   help="reference AP distance for the power-controlled source")
    p.add_argument("--alpha", type=float, default=2.42)
    p.add_argument("--sigma-db", type=float, default=0.0)
    p.add_argument("--d-max", type=float, default=25.0)
    p.add_argument("--delta", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("validate-single-source",
                       help="greedy single-source scheme vs. analytic bounds")
    p.add_argument("--gamma-db", type=float, nargs="+", default=[-10.0, 0.0, 10.0])
    p.add_argument("--lambda", type=float, nargs="+",
                   default=[0.0, 0.0025, 0.005, 0.01, 0.02])
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--d-ref", type=float, default=35.0)
    p.add_argument("--alpha", type=float, default=2.42)
    p.add_argument("--d-max", type=float, default=25.0)
    p.add_argument("--delta", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("precoding-bench",
                       help="sandwich statistics for the weight solvers")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--max-dim", type=int, default=6)
    p.add_argument("--n-w", type=int, nargs="+", default=[2, 4, 8])
    p.add_argument("--seed", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_precoding_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
