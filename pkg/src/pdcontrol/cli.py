"""Command-line interface.

Subcommands: ``run`` (experiment + CSV/JSON output), ``sweep`` (horizon slope
study), ``oracle`` (hindsight comparator only), ``verify-lemmas`` (signal and
gradient self-checks), ``presets`` (built-in configs).  Exit codes: 0 success,
1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import ConfigError, ExperimentConfig, PRESETS, preset_names
from .harness import (
    resolve_controller,
    run_experiment,
    sweep_horizons,
    write_results,
    write_sweep,
)
from .oracle import hindsight_dac_oracle
from .verify import run_all


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "controller", None):
        cfg.controller["kind"] = args.controller
    if getattr(args, "T", None):
        cfg.run["T"] = args.T
    if getattr(args, "seeds", None):
        cfg.run["seeds"] = args.seeds
    if getattr(args, "n_seeds", None):
        cfg.run["seeds"] = list(range(args.n_seeds))
    if getattr(args, "eta", None) is not None:
        cfg.controller["eta"] = args.eta
    if getattr(args, "delta", None) is not None:
        cfg.controller["delta"] = args.delta
    if getattr(args, "pd", None):
        cfg.controller["pd"] = args.pd
    return ExperimentConfig.from_dict(cfg.to_dict())


def cmd_run(args) -> int:
    cfg = _apply_overrides(ExperimentConfig.load(args.config), args)
    report = run_experiment(cfg)
    paths = write_results(report, args.out, write_trajectories=args.write_trajectories)
    mean_r, se_r = report.mean_stderr(report.final_regret)
    mean_c, se_c = report.mean_stderr(report.final_avg_cost)
    print(f"completed {len(report.results)}/{len(report.seeds)} seeds, T={report.T}")
    print(f"final regret: {mean_r:.6g} +/- {se_r:.3g}")
    print(f"final average cost: {mean_c:.6g} +/- {se_c:.3g}")
    for seed, msg in report.errors:
        print(f"seed {seed} failed: {msg}", file=sys.stderr)
    print(f"wrote {paths['results']} and {paths['summary']}")
    return 0 if not report.partial else 1


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(ExperimentConfig.load(args.config), args)
    sw = sweep_horizons(cfg, args.horizons)
    path = write_sweep(sw, args.out)
    for T, m, s in zip(sw.horizons, sw.mean_regret, sw.stderr_regret):
        print(f"T={T}: mean final regret {m:.6g} +/- {s:.3g}")
    print(f"log-log slope: {sw.slope:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_oracle(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    system = cfg.build_system()
    setup = resolve_controller(cfg, system)
    gen = cfg.build_generator(system.dx)
    cost = cfg.build_cost(system.dx, system.du)
    T = cfg.run.get("T", 1000)
    w_seq = gen.sequence(T, seed=args.seed)
    res = hindsight_dac_oracle(system, setup.k_base, cost, w_seq, setup.h,
                               setup.kappa, setup.alpha, setup.radius_scale, seed=args.seed)
    spread = float(res.restart_costs.max() - res.restart_costs.min())
    print(f"hindsight DAC cost over T={T}: {res.total_cost:.6g} "
          f"(converged={res.converged}, restart spread={spread:.3g})")
    print("block spectral norms:", np.array2string(res.params.block_norms(), precision=4))
    if not res.converged:
        print("warning: oracle did not reach the gradient tolerance", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    results = run_all(n_samples=args.n_samples)
    width = max(len(r.name) for r in results)
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.detail}")
        failed = failed or not r.passed
    return 1 if failed else 0


def cmd_presets(args) -> int:
    for name in preset_names():
        sys_tbl = PRESETS[name]["system"]
        dist = PRESETS[name]["disturbance"]["kind"]
        print(f"{name}: system preset {sys_tbl['preset']!r}, {dist} disturbances")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdctl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file or preset")
    run_p.add_argument("config")
    run_p.add_argument("--controller", choices=("lqr", "gpc", "rbpc", "bpc", "mfgpc"))
    run_p.add_argument("--T", type=int)
    run_p.add_argument("--seeds", type=int, nargs="+")
    run_p.add_argument("--n-seeds", type=int)
    run_p.add_argument("--eta", type=float)
    run_p.add_argument("--delta", type=float)
    run_p.add_argument("--pd", choices=("true", "pd1", "pd2", "pd3"))
    run_p.add_argument("--out", default="results")
    run_p.add_argument("--write-trajectories", action="store_true")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="regret slope study across horizons")
    sweep_p.add_argument("config")
    sweep_p.add_argument("--horizons", type=int, nargs="+", required=True)
    sweep_p.add_argument("--controller", choices=("lqr", "gpc", "rbpc", "bpc", "mfgpc"))
    sweep_p.add_argument("--seeds", type=int, nargs="+")
    sweep_p.add_argument("--n-seeds", type=int)
    sweep_p.add_argument("--out", default="results")
    sweep_p.set_defaults(func=cmd_sweep)

    oracle_p = sub.add_parser("oracle", help="hindsight-optimal DAC on the realized disturbances")
    oracle_p.add_argument("config")
    oracle_p.add_argument("--seed", type=int, default=0)
    oracle_p.set_defaults(func=cmd_oracle)

    verify_p = sub.add_parser("verify-lemmas", help="run the signal/gradient self-check table")
    verify_p.add_argument("--n-samples", type=int, default=20_000)
    verify_p.set_defaults(func=cmd_verify)

    presets_p = sub.add_parser("presets", help="list built-in experiment presets")
    presets_p.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
