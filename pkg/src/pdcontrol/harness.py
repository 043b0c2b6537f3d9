"""Experiment runner: rollouts, hindsight comparator, regret series, and file output.

Seeds run as independent tasks (``PDCTL_THREADS`` caps the pool); the reduce is
an ordered merge by seed index so parallelism never changes output bytes.
"""

from __future__ import annotations

import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ConfigError, ExperimentConfig
from .controllers import (
    BanditGpc,
    Bpc,
    GpcFullInfo,
    LqrController,
    MfGpc,
    default_params,
    lqr_gain,
)
from .lds import AssumptionSet, DivergenceError, LinearSystem, Trajectory, rollout, strong_stability
from .oracle import counterfactual_trajectory, hindsight_dac_oracle
from .signals import Pd1, Pd2, Pd3
from .values import solve_dare, vector_value_transform


@dataclass
class ControllerSetup:
    """Config resolved against a concrete system: gains, schedule, stability constants."""

    kind: str
    h: int
    eta: float
    delta: float
    k_base: Optional[np.ndarray]
    kappa: float
    alpha: float
    radius_scale: float
    pd: str
    gamma: float
    sigma: float
    guard: float
    W: float


@dataclass
class SeedResult:
    seed: int
    costs: np.ndarray
    cum_alg: np.ndarray
    cum_oracle: np.ndarray
    regret: np.ndarray
    oracle_total: float
    oracle_converged: bool
    trajectory: Trajectory


@dataclass
class RegretReport:
    config: dict
    seeds: list
    T: int
    results: list = field(default_factory=list)   # SeedResult, ordered by seeds
    errors: list = field(default_factory=list)    # (seed, message)

    @property
    def partial(self) -> bool:
        return bool(self.errors)

    @property
    def final_regret(self) -> np.ndarray:
        return np.array([r.regret[-1] for r in self.results])

    @property
    def final_avg_cost(self) -> np.ndarray:
        return np.array([r.cum_alg[-1] / self.T for r in self.results])

    def mean_stderr(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return float("nan"), float("nan")
        mean = float(values.mean())
        stderr = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
        return mean, stderr

    def regret_growth_slope(self) -> Optional[float]:
        """Within-run slope of log mean-regret vs log t over the back half of the horizon."""
        if not self.results:
            return None
        mean_series = np.mean([r.regret for r in self.results], axis=0)
        t = np.arange(1, self.T + 1)
        lo = self.T // 4
        mask = (t >= max(lo, 2)) & (mean_series > 0)
        if mask.sum() < 8:
            return None
        slope, _ = np.polyfit(np.log(t[mask]), np.log(mean_series[mask]), 1)
        return float(slope)


def resolve_controller(config: ExperimentConfig, system: LinearSystem) -> ControllerSetup:
    tbl = config.controller
    kind = tbl.get("kind", "rbpc")
    base = tbl.get("base", "lqr")
    cost = config.build_cost(system.dx, system.du)
    if base == "lqr":
        k_base = lqr_gain(system, cost.Q, cost.R)
    elif base in ("none", "zero"):
        k_base = None
    else:
        raise ConfigError(f"controller.base must be 'lqr' or 'none', got {base!r}")

    Abar = system.A if k_base is None else system.A - system.B @ k_base
    cert = strong_stability(Abar)
    if cert is None:
        raise ConfigError("closed-loop matrix is not certifiably strongly stable; "
                          "provide a stabilizing base or a stable system")
    kappa, alpha = cert
    kappa = max(kappa, float(np.linalg.norm(system.B, 2)), 1.0)

    T = config.run.get("T", 1000)
    eta_s, delta_s, h_s = default_params(T, system.du, system.dx, kappa, alpha,
                                         smooth=bool(tbl.get("smooth", False)))
    h = int(tbl.get("h", h_s))
    eta = float(tbl.get("eta", eta_s))
    delta = float(tbl.get("delta", delta_s))
    gen = config.build_generator(system.dx)
    W = gen.norm_bound()
    if not np.isfinite(W):
        W = 1.0
    assumptions = AssumptionSet(kappa=kappa, alpha=alpha, W=max(W, 1e-9))
    guard = 1e6 * assumptions.state_bound(h)
    sigma = float(tbl.get("sigma", delta / np.sqrt(system.du)))
    return ControllerSetup(
        kind=kind, h=h, eta=eta, delta=delta, k_base=k_base, kappa=kappa, alpha=alpha,
        radius_scale=float(tbl.get("radius_scale", 1.0)), pd=tbl.get("pd", "true"),
        gamma=float(tbl.get("gamma", 0.9)), sigma=sigma, guard=guard, W=W,
    )


def _build_estimator(setup: ControllerSetup, config: ExperimentConfig, system: LinearSystem,
                     noise_cov: np.ndarray):
    cost = config.build_cost(system.dx, system.du)
    if setup.pd == "true":
        return None
    if setup.pd == "pd1":
        qv = solve_dare(system.A, system.B, cost.Q, cost.R, setup.gamma)
        return Pd1(qv, noise_cov, system, cost)
    if setup.pd == "pd2":
        k_pi = setup.k_base if setup.k_base is not None else np.zeros((system.du, system.dx))
        L = np.eye(system.dx)
        tv = vector_value_transform(system.A, system.B, k_pi, L, setup.gamma)
        return Pd2(tv, system)
    if setup.pd == "pd3":
        return Pd3(LinearSystem(system.A.copy(), system.B.copy()))
    raise ConfigError(f"unknown pd kind {setup.pd!r}")


def build_controller(config: ExperimentConfig, system: LinearSystem, seed: int,
                     setup: Optional[ControllerSetup] = None):
    setup = setup or resolve_controller(config, system)
    cost = config.build_cost(system.dx, system.du)
    rng = np.random.default_rng(np.random.SeedSequence((0xC0117, seed)))
    tbl = config.controller
    if setup.kind == "lqr":
        K = setup.k_base if setup.k_base is not None else lqr_gain(system, cost.Q, cost.R)
        return LqrController(K)
    if setup.kind == "gpc":
        return GpcFullInfo(system, cost, setup.h, setup.eta, k_base=setup.k_base,
                           kappa=setup.kappa, alpha=setup.alpha, radius_scale=setup.radius_scale)
    if setup.kind == "rbpc":
        cov = (setup.delta**2 / system.du) * np.eye(system.du)
        est = _build_estimator(setup, config, system, cov)
        return BanditGpc(system, setup.h, setup.eta, setup.delta, k_base=setup.k_base,
                         estimator=est, kappa=setup.kappa, alpha=setup.alpha,
                         radius_scale=setup.radius_scale, rng=rng)
    if setup.kind == "bpc":
        return Bpc(system, setup.h, setup.eta, setup.delta, k_base=setup.k_base,
                   kappa=setup.kappa, alpha=setup.alpha, radius_scale=setup.radius_scale, rng=rng)
    if setup.kind == "mfgpc":
        cov = setup.sigma**2 * np.eye(system.du)
        est = _build_estimator(setup, config, system, cov)
        if est is None:
            raise ConfigError("mfgpc requires pd1/pd2/pd3")
        return MfGpc(system, est, setup.h, setup.eta, cov, k_base=setup.k_base,
                     kappa=setup.kappa, alpha=setup.alpha, radius_scale=setup.radius_scale,
                     rng=rng, update_period=int(tbl.get("update_period", 1)),
                     weight_decay=float(tbl.get("weight_decay", 0.0)))
    raise ConfigError(f"unknown controller kind {setup.kind!r}")


def _oracle_costs_for(system, setup: ControllerSetup, cost, w_seq: np.ndarray, seed: int,
                      cache: Optional[dict] = None, lock=None):
    """Hindsight comparator for one disturbance sequence.

    Deterministic generators produce the same w for every seed, so results are
    cached by the realized sequence bytes (exploration seeds never enter the
    comparator).
    """
    def compute():
        oracle = hindsight_dac_oracle(system, setup.k_base, cost, w_seq, setup.h,
                                      setup.kappa, setup.alpha, setup.radius_scale, seed=0)
        _, _, oracle_costs = counterfactual_trajectory(system, setup.k_base, cost, w_seq,
                                                       oracle.params)
        return oracle, oracle_costs

    if cache is None:
        return compute()
    key = w_seq.tobytes()
    # holding the lock during the solve serializes misses, which is the point:
    # identical sequences (deterministic generators) are solved exactly once
    with lock:
        if key not in cache:
            cache[key] = compute()
        return cache[key]


def _run_seed(config: ExperimentConfig, system: LinearSystem, setup: ControllerSetup,
              seed: int, cache: Optional[dict] = None, lock=None) -> SeedResult:
    gen = config.build_generator(system.dx)
    cost = config.build_cost(system.dx, system.du)
    T = config.run.get("T", 1000)
    x0 = np.array(config.run["x0"], dtype=float) if "x0" in config.run else None
    controller = build_controller(config, system, seed, setup)
    traj = rollout(system, controller, gen, cost, T, seed=seed, x0=x0, guard=setup.guard)
    w_seq = traj.disturbances
    oracle, oracle_costs = _oracle_costs_for(system, setup, cost, w_seq, seed, cache, lock)
    costs = traj.costs
    cum_alg = np.cumsum(costs)
    cum_oracle = np.cumsum(oracle_costs)
    return SeedResult(
        seed=seed, costs=costs, cum_alg=cum_alg, cum_oracle=cum_oracle,
        regret=cum_alg - cum_oracle, oracle_total=oracle.total_cost,
        oracle_converged=oracle.converged, trajectory=traj,
    )


def thread_count(n_tasks: int) -> int:
    env = os.environ.get("PDCTL_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError("PDCTL_THREADS must be an integer") from None
        return max(1, min(cap, n_tasks))
    return max(1, min(os.cpu_count() or 1, n_tasks))


def run_experiment(config: ExperimentConfig) -> RegretReport:
    system = config.build_system()
    setup = resolve_controller(config, system)
    seeds = list(config.run.get("seeds", range(25)))
    T = config.run.get("T", 1000)
    report = RegretReport(config=config.to_dict(), seeds=seeds, T=T)
    cache, lock = {}, threading.Lock()

    def task(seed):
        try:
            return seed, _run_seed(config, system, setup, seed, cache, lock), None
        except (DivergenceError, ConfigError, np.linalg.LinAlgError, ValueError) as e:
            return seed, None, f"{type(e).__name__}: {e}"

    workers = thread_count(len(seeds))
    if workers == 1:
        outcomes = [task(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(task, seeds))
    for seed, result, err in sorted(outcomes, key=lambda o: seeds.index(o[0])):
        if err is not None:
            report.errors.append((seed, err))
        else:
            report.results.append(result)
    return report


def _fmt(x: float) -> str:
    return repr(float(x))


def write_results(report: RegretReport, path: str, write_trajectories: bool = False) -> dict:
    """Emit results.csv, summary.json, and optional per-seed trajectory CSVs.

    results.csv schema: seed,t,cost,cum_cost,oracle_cum_cost,regret with one
    row per (seed, t), LF newlines, UTF-8, repr floats (lossless round trip).
    """
    os.makedirs(path, exist_ok=True)
    paths = {}

    csv_path = os.path.join(path, "results.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("seed,t,cost,cum_cost,oracle_cum_cost,regret\n")
        for r in report.results:
            for t in range(len(r.costs)):
                fh.write(f"{r.seed},{t},{_fmt(r.costs[t])},{_fmt(r.cum_alg[t])},"
                         f"{_fmt(r.cum_oracle[t])},{_fmt(r.regret[t])}\n")
    paths["results"] = csv_path

    mean_reg, se_reg = report.mean_stderr(report.final_regret)
    mean_cost, se_cost = report.mean_stderr(report.final_avg_cost)
    summary = {
        "config": report.config,
        "seeds": report.seeds,
        "completed_seeds": [r.seed for r in report.results],
        "T": report.T,
        "final_regret": {str(r.seed): float(r.regret[-1]) for r in report.results},
        "final_avg_cost": {str(r.seed): float(r.cum_alg[-1] / report.T) for r in report.results},
        "mean_final_regret": mean_reg,
        "stderr_final_regret": se_reg,
        "mean_final_avg_cost": mean_cost,
        "stderr_final_avg_cost": se_cost,
        "oracle_converged": all(r.oracle_converged for r in report.results),
        "regret_growth_slope": report.regret_growth_slope(),
        "partial": report.partial,
        "errors": [list(e) for e in report.errors],
    }
    json_path = os.path.join(path, "summary.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["summary"] = json_path

    if write_trajectories:
        for r in report.results:
            tpath = os.path.join(path, f"trajectory_{r.seed}.csv")
            traj = r.trajectory
            dx = traj.records[0].x.size
            du = traj.records[0].u.size
            dw = traj.records[0].what.size
            header = (
                ["t"]
                + [f"x_{i}" for i in range(dx)]
                + [f"u_{i}" for i in range(du)]
                + [f"w_{i}" for i in range(dx)]
                + [f"what_{i}" for i in range(dw)]
            )
            with open(tpath, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(",".join(header) + "\n")
                for rec in traj:
                    row = [str(rec.t)]
                    row += [_fmt(v) for v in rec.x]
                    row += [_fmt(v) for v in rec.u]
                    row += [_fmt(v) for v in rec.w]
                    row += [_fmt(v) for v in rec.what]
                    fh.write(",".join(row) + "\n")
            paths[f"trajectory_{r.seed}"] = tpath
    return paths


@dataclass
class SweepReport:
    horizons: list
    mean_regret: list
    stderr_regret: list
    slope: float
    intercept: float
    reports: list


def fit_loglog_slope(horizons, values):
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def sweep_horizons(config: ExperimentConfig, horizons) -> SweepReport:
    """Re-run the experiment across horizons (schedule re-resolved per T) and fit
    the log-log slope of mean final regret against T."""
    reports, means, ses = [], [], []
    for T in horizons:
        cfg = ExperimentConfig.from_dict(config.to_dict())
        cfg.run["T"] = int(T)
        # explicit eta/delta would freeze the schedule across T; drop them so the
        # horizon-dependent defaults apply
        cfg.controller.pop("eta", None)
        cfg.controller.pop("delta", None)
        rep = run_experiment(cfg)
        m, s = rep.mean_stderr(rep.final_regret)
        reports.append(rep)
        means.append(m)
        ses.append(s)
    slope, intercept = fit_loglog_slope(horizons, means)
    return SweepReport(horizons=list(horizons), mean_regret=means, stderr_regret=ses,
                       slope=slope, intercept=intercept, reports=reports)


def write_sweep(sw: SweepReport, path: str) -> str:
    os.makedirs(path, exist_ok=True)
    out = {
        "horizons": [int(t) for t in sw.horizons],
        "mean_final_regret": [float(v) for v in sw.mean_regret],
        "stderr_final_regret": [float(v) for v in sw.stderr_regret],
        "loglog_slope": sw.slope,
        "loglog_intercept": sw.intercept,
    }
    p = os.path.join(path, "sweep_summary.json")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return p
