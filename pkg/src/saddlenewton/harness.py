"""CLI benchmark harness: configured runs, parameter sweeps, the two
built-in experiment families (cubic regularized bilinear, AUC maximization),
trace persistence, and summary statistics.

Trace files carry the columns
    iter,time_s,lambda,step_norm,grad_norm,gap,hat_dist,samples,subproblem_iters
and are byte-deterministic for a fixed seed/config; the time_s column is
left empty unless wall-clock timing is explicitly requested, since wall time
is the one per-run quantity that cannot be reproduced bit for bit.
"""

import argparse
import csv
import dataclasses
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .core import GapConfig, operator_jacobian, restricted_gap
from .numerics import spectral_norm
from .problems import (
    make_auc_problem,
    make_cubic_bilinear,
    make_random_cc_quadratic,
    parse_libsvm,
    scale_features,
    subset_dataset,
    synthetic_binary_dataset,
)
from .solvers import (
    IterateTrace,
    SolverConfig,
    eg_solve,
    inexact_newton_minmax,
    inv_sqrt_step,
    newton_minmax,
    ogda_solve,
    seg_solve,
    sogda_solve,
    subsampled_newton_minmax,
)

TRACE_COLUMNS = [
    "iter", "time_s", "lambda", "step_norm", "grad_norm", "gap", "hat_dist",
    "samples", "subproblem_iters",
]

NEWTON_ALGOS = ("newton", "inexact-newton", "subsampled-newton")
FIRST_ORDER_ALGOS = ("eg", "ogda", "seg", "sogda")
EXACT_BETA_FACTOR = 7.0
INEXACT_BETA_FACTOR = 8.0


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "cubic-bilinear"
    algo: str = "newton"
    n: int = 50
    rho: float = None
    iters: int = 100
    seed: int = 0
    dataset: str = None
    subset: int = None
    out: str = None
    format: str = "csv"
    reps: int = 1
    sampling: str = "empirical"
    stop_tol: float = None
    kappa_m: float = 0.1
    delta: float = 0.01
    batch: int = 32
    step_c: float = None
    gap: bool = True
    timing: str = "none"
    synthetic_rows: int = 500

    def validate(self):
        if self.problem not in ("cubic-bilinear", "auc", "quadratic"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.algo not in NEWTON_ALGOS + FIRST_ORDER_ALGOS:
            raise ConfigError(f"unknown algorithm {self.algo!r}")
        if self.algo in ("subsampled-newton", "seg", "sogda") and self.problem != "auc":
            raise ConfigError(f"{self.algo} requires a finite-sum problem (auc)")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.sampling not in ("uniform", "nonuniform", "empirical", "full"):
            raise ConfigError(f"unknown sampling scheme {self.sampling!r}")
        if self.timing not in ("none", "wall"):
            raise ConfigError(f"unknown timing mode {self.timing!r}")
        if self.dataset is not None and not os.path.exists(self.dataset):
            raise ConfigError(f"dataset file not found: {self.dataset}")
        if self.iters < 1 or self.reps < 1:
            raise ConfigError("iters and reps must be >= 1")
        return self


def load_config(path):
    with open(path) as fh:
        data = json.load(fh)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return data


# ---------------------------------------------------------------------------
# trace persistence
# ---------------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def emit_trace(trace, path, fmt="csv", header=None, timing="none"):
    """Write a trace to CSV or JSON.

    The gap cell is empty (not 0) when no reference saddle was available;
    time_s is cumulative wall time when timing="wall" and empty otherwise.
    """
    cum_t = np.cumsum([row.wall_time_s for row in trace]) if trace else []
    records = []
    for i, row in enumerate(trace):
        records.append({
            "iter": row.k,
            "time_s": float(cum_t[i]) if timing == "wall" else None,
            "lambda": row.lambda_k,
            "step_norm": row.step_norm,
            "grad_norm": row.grad_norm,
            "gap": row.gap,
            "hat_dist": row.hat_dist,
            "samples": row.samples,
            "subproblem_iters": row.subproblem_iters,
        })
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for rec in records:
                w.writerow([_fmt(rec[c]) for c in TRACE_COLUMNS])
    elif fmt == "json":
        doc = {"header": header or {}, "rows": records}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown format {fmt!r}")


def parse_trace(path, fmt="csv"):
    """Read a trace file back into IterateTrace rows (round-trip of emit)."""
    rows = []
    if fmt == "csv":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                rows.append(IterateTrace(
                    k=int(rec["iter"]),
                    lambda_k=float(rec["lambda"]),
                    step_norm=float(rec["step_norm"]),
                    grad_norm=float(rec["grad_norm"]),
                    gap=float(rec["gap"]) if rec["gap"] != "" else None,
                    hat_dist=float(rec["hat_dist"]),
                    samples=int(rec["samples"]),
                    subproblem_iters=int(rec["subproblem_iters"]),
                    wall_time_s=0.0,
                ))
    else:
        with open(path) as fh:
            doc = json.load(fh)
        for rec in doc["rows"]:
            rows.append(IterateTrace(
                k=rec["iter"], lambda_k=rec["lambda"],
                step_norm=rec["step_norm"], grad_norm=rec["grad_norm"],
                gap=rec["gap"], hat_dist=rec["hat_dist"],
                samples=rec["samples"],
                subproblem_iters=rec["subproblem_iters"], wall_time_s=0.0))
    return rows


def loglog_slope(xs, ys):
    xs = np.log(np.asarray(xs, dtype=np.float64))
    ys = np.log(np.asarray(ys, dtype=np.float64))
    A = np.vstack((xs, np.ones_like(xs))).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(coef[0])


@dataclass
class RunSummary:
    final_gap: float
    final_grad_norm: float
    iterations: int
    total_subproblem_iters: int
    total_samples: int
    wall_time_s: float
    gap_slope: float

    @classmethod
    def from_trace(cls, trace):
        gaps = [(r.k, r.gap) for r in trace if r.gap is not None and r.gap > 0]
        slope = loglog_slope(*zip(*gaps)) if len(gaps) >= 10 else None
        final_gap = next((r.gap for r in reversed(trace) if r.gap is not None), None)
        return cls(
            final_gap=final_gap,
            final_grad_norm=trace[-1].grad_norm if trace else None,
            iterations=len(trace),
            total_subproblem_iters=sum(r.subproblem_iters for r in trace),
            total_samples=sum(r.samples for r in trace),
            wall_time_s=sum(r.wall_time_s for r in trace),
            gap_slope=slope,
        )

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=1)


# ---------------------------------------------------------------------------
# gap column
# ---------------------------------------------------------------------------

def prefix_averages(result):
    """Running weighted averages z_bar_T for every prefix of the run."""
    if result.iterates.shape[0] == 0:
        return np.empty((0, 0))
    w = result.lambdas[:, None]
    csum = np.cumsum(w * result.iterates, axis=0)
    return csum / np.cumsum(result.lambdas)[:, None]

def attach_gaps(result, problem, center, beta, gap_cfg=None):
    """Fill the gap column of a trace with Gap(z_bar_T; beta) per prefix T."""
    cfg = gap_cfg or GapConfig(beta=beta)
    avgs = prefix_averages(result)
    for i, row in enumerate(result.trace):
        row.gap = float(restricted_gap(problem, avgs[i], center, cfg).value)
    return result


# ---------------------------------------------------------------------------
# problem / solver construction
# ---------------------------------------------------------------------------

def build_problem(cfg):
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    if cfg.problem == "cubic-bilinear":
        rho = cfg.rho if cfg.rho is not None else 1.0 / (20.0 * cfg.n)
        return make_cubic_bilinear(cfg.n, rho, seeds[0]), rho
    if cfg.problem == "quadratic":
        return make_random_cc_quadratic(cfg.n, cfg.n, seeds[0]), cfg.rho or 1.0
    ds = _load_dataset(cfg)
    rho = cfg.rho if cfg.rho is not None else 1.0 / ds.N
    return make_auc_problem(ds, rho), rho


def _load_dataset(cfg):
    if cfg.dataset is not None:
        ds = parse_libsvm(cfg.dataset)
        ds, _ = scale_features(ds)
    else:
        rows = cfg.subset or cfg.synthetic_rows
        return synthetic_binary_dataset(rows, seed=cfg.seed)
    if cfg.subset is not None and cfg.subset < ds.N:
        ds = subset_dataset(ds, cfg.subset, seed=cfg.seed)
    return ds


def estimate_smoothness(problem, z0, extra_points=()):
    """Gradient Lipschitz estimate: max spectral norm of the operator
    Jacobian over the start point and any supplied probes, with headroom."""
    best = 0.0
    for z in (z0, *extra_points):
        best = max(best, spectral_norm(operator_jacobian(problem, z), iters=60))
    return 1.1 * max(best, 1e-12)


def default_start(problem):
    return np.zeros(problem.m + problem.n)


def run_algorithm(cfg, problem, rho):
    z0 = default_start(problem)
    solver_cfg = SolverConfig(
        rho=rho, T=cfg.iters, stop_tol=cfg.stop_tol, kappa_m=cfg.kappa_m,
        delta=cfg.delta, seed=cfg.seed)
    if cfg.algo == "newton":
        return newton_minmax(problem, z0, solver_cfg)
    if cfg.algo == "inexact-newton":
        return inexact_newton_minmax(problem, z0, solver_cfg)
    if cfg.algo == "subsampled-newton":
        return subsampled_newton_minmax(problem, z0, solver_cfg,
                                        scheme=cfg.sampling)
    if cfg.algo == "eg":
        saddle = problem.saddle()
        probes = (saddle,) if saddle is not None else ()
        ell = estimate_smoothness(problem, z0, probes)
        return eg_solve(problem, z0, ell, cfg.iters, stop_tol=cfg.stop_tol)
    if cfg.algo == "ogda":
        saddle = problem.saddle()
        probes = (saddle,) if saddle is not None else ()
        ell = estimate_smoothness(problem, z0, probes)
        c = cfg.step_c if cfg.step_c is not None else 1.0 / (4.0 * ell)
        return ogda_solve(problem, z0, c, cfg.iters, stop_tol=cfg.stop_tol)
    if cfg.algo == "seg":
        c = cfg.step_c if cfg.step_c is not None else 0.1
        return seg_solve(problem, z0, inv_sqrt_step(c), cfg.iters,
                         seed=cfg.seed, batch=cfg.batch)
    if cfg.algo == "sogda":
        c = cfg.step_c if cfg.step_c is not None else 0.1
        return sogda_solve(problem, z0, inv_sqrt_step(c), cfg.iters,
                           seed=cfg.seed, batch=cfg.batch)
    raise ConfigError(f"unknown algorithm {cfg.algo!r}")


_AUC_REFERENCE_CACHE = {}


def auc_reference_saddle(problem, iters=400):
    """High-accuracy saddle estimate for gap evaluation, computed once per
    problem instance by driving the inexact solver to ||F|| <= 1e-10."""
    key = id(problem)
    if key not in _AUC_REFERENCE_CACHE:
        cfg = SolverConfig(rho=problem.rho, T=iters, stop_tol=1e-10)
        res = inexact_newton_minmax(problem, default_start(problem), cfg)
        _AUC_REFERENCE_CACHE[key] = res.last.coords.copy()
    return _AUC_REFERENCE_CACHE[key]


def gap_center_and_beta(cfg, problem, z0):
    """Reference saddle and ball radius for the gap column, or (None, None)."""
    if not cfg.gap:
        return None, None
    center = problem.saddle()
    if center is None and cfg.problem == "auc" and cfg.algo in NEWTON_ALGOS:
        center = auc_reference_saddle(problem)
    if center is None:
        return None, None
    factor = EXACT_BETA_FACTOR if cfg.algo in ("newton", "eg", "ogda") \
        else INEXACT_BETA_FACTOR
    dist = np.linalg.norm(z0 - center)
    if dist == 0.0:
        return None, None
    return center, factor * dist


def run_experiment(cfg):
    """Single configured run: build, solve, attach gaps, emit, summarize."""
    cfg.validate()
    problem, rho = build_problem(cfg)
    result = run_algorithm(cfg, problem, rho)
    z0 = default_start(problem)
    center, beta = gap_center_and_beta(cfg, problem, z0)
    if center is not None and result.iterates.shape[0] > 0:
        attach_gaps(result, problem, center, beta)
    if cfg.out:
        header = {"config": dataclasses.asdict(cfg), "seed": cfg.seed,
                  "versions": {"saddlenewton": __version__,
                               "numpy": np.__version__}}
        emit_trace(result.trace, cfg.out, fmt=cfg.format, header=header,
                   timing=cfg.timing)
    return result, problem


# ---------------------------------------------------------------------------
# experiment families
# ---------------------------------------------------------------------------

def worst_case_gap_bound(rho, dist, T, exact=True):
    """Worst-case ergodic gap bound: c * rho * ||z0 - z*||^3 / T^{3/2} with
    c = 960 sqrt(3) for the exact method and 1215 sqrt(5) for the inexact
    family."""
    c = 960.0 * math.sqrt(3.0) if exact else 1215.0 * math.sqrt(5.0)
    return c * rho * dist**3 / T**1.5


def run_cubic_experiment(n=50, algos=("newton", "eg"), seed=0, iters=100,
                         out_dir=None, fmt="csv", check_bounds=True):
    """Cubic regularized bilinear family at rho = 1/(20 n) from z0 = 0.

    Emits per-iteration and per-second trace views per algorithm.  For the
    Newton runs the ergodic gap is checked against the worst-case bound at
    every prefix; violations are reported in the returned dict.
    """
    results = {}
    for algo in algos:
        cfg = ExperimentConfig(problem="cubic-bilinear", algo=algo, n=n,
                               seed=seed, iters=iters)
        cfg.validate()
        problem, rho = build_problem(cfg)
        result = run_algorithm(cfg, problem, rho)
        z0 = default_start(problem)
        center = problem.saddle()
        dist = np.linalg.norm(z0 - center)
        exact = algo in ("newton", "eg", "ogda")
        beta = (EXACT_BETA_FACTOR if exact else INEXACT_BETA_FACTOR) * dist
        attach_gaps(result, problem, center, beta)
        violations = []
        if check_bounds and algo in NEWTON_ALGOS:
            for row in result.trace:
                bound = worst_case_gap_bound(rho, dist, row.k, exact=algo == "newton")
                if row.gap is not None and row.gap > bound + 1e-8:
                    violations.append((row.k, row.gap, bound))
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            base = os.path.join(out_dir, f"cubic_n{n}_{algo}")
            ext = "csv" if fmt == "csv" else "json"
            emit_trace(result.trace, f"{base}_iters.{ext}", fmt=fmt)
            emit_trace(result.trace, f"{base}_time.{ext}", fmt=fmt, timing="wall")
        results[algo] = {
            "result": result,
            "summary": RunSummary.from_trace(result.trace),
            "bound_violations": violations,
            "rho": rho,
            "dist": dist,
        }
    return results


def tune_step_constant(problem, algo, iters, seed, batch,
                       grid=(1e-3, 1e-2, 1e-1, 1.0)):
    """Grid-search the c in c/sqrt(k+1) by final operator norm."""
    best_c, best_val = None, np.inf
    z0 = default_start(problem)
    for c in grid:
        if algo == "seg":
            res = seg_solve(problem, z0, inv_sqrt_step(c), iters, seed=seed,
                            batch=batch)
        else:
            res = sogda_solve(problem, z0, inv_sqrt_step(c), iters, seed=seed,
                              batch=batch)
        val = res.trace[-1].grad_norm if res.trace else np.inf
        if np.isfinite(val) and val < best_val:
            best_val, best_c = val, c
    return best_c if best_c is not None else grid[0]


def run_auc_experiment(dataset=None, subset=500, algos=None, seed=0,
                       iters=200, out_dir=None, fmt="csv",
                       sampling="empirical", batch=32, compute_gap=False):
    """AUC min-max family at rho = 1/N.

    Runs the requested algorithms; SEG/SOGDA get their step constants from a
    small deterministic grid search and an iteration count matched to the
    subsampled-Newton run's epoch budget (component-gradient equivalents).
    """
    algos = algos or ["inexact-newton", "subsampled-newton", "seg", "sogda"]
    cfg = ExperimentConfig(problem="auc", algo="inexact-newton", seed=seed,
                           dataset=dataset, subset=subset, iters=iters,
                           sampling=sampling, batch=batch)
    if dataset is not None and not os.path.exists(dataset):
        raise ConfigError(f"dataset file not found: {dataset}")
    problem, rho = build_problem(cfg)
    if problem.degenerate:
        raise ConfigError("single-class dataset: AUC run is degenerate")
    N = problem.N
    z0 = default_start(problem)
    results = {}
    epoch_budget = None
    newton_like = [a for a in algos if a in NEWTON_ALGOS]
    stochastic = [a for a in algos if a in ("seg", "sogda")]
    for algo in newton_like:
        solver_cfg = SolverConfig(rho=rho, T=iters, stop_tol=1e-6,
                                  kappa_m=0.1, delta=0.01, seed=seed)
        if algo == "inexact-newton":
            res = inexact_newton_minmax(problem, z0, solver_cfg)
        elif algo == "subsampled-newton":
            res = subsampled_newton_minmax(problem, z0, solver_cfg,
                                           scheme=sampling)
        else:
            res = newton_minmax(problem, z0, solver_cfg)
        equivalents = sum(2 * N + row.samples for row in res.trace)
        if algo == "subsampled-newton" or epoch_budget is None:
            epoch_budget = equivalents
        results[algo] = {"result": res, "summary": RunSummary.from_trace(res.trace)}
    if epoch_budget is None:
        epoch_budget = iters * 2 * N
    for algo in stochastic:
        per_iter = 2 * batch if algo == "seg" else batch
        t_iters = max(1, int(epoch_budget // per_iter))
        c = tune_step_constant(problem, algo, min(t_iters, 200), seed, batch)
        if algo == "seg":
            res = seg_solve(problem, z0, inv_sqrt_step(c), t_iters, seed=seed,
                            batch=batch)
        else:
            res = sogda_solve(problem, z0, inv_sqrt_step(c), t_iters,
                              seed=seed, batch=batch)
        results[algo] = {"result": res, "step_c": c,
                         "summary": RunSummary.from_trace(res.trace)}
    if compute_gap:
        center = auc_reference_saddle(problem)
        for algo, entry in results.items():
            res = entry["result"]
            if res.iterates.shape[0] == 0:
                continue
            beta = INEXACT_BETA_FACTOR * np.linalg.norm(z0 - center)
            attach_gaps(res, problem, center, beta)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        tag = "synthetic" if dataset is None else os.path.basename(dataset)
        for algo, entry in results.items():
            base = os.path.join(out_dir, f"auc_{tag}_{algo}")
            ext = "csv" if fmt == "csv" else "json"
            emit_trace(entry["result"].trace, f"{base}_iters.{ext}", fmt=fmt)
            emit_trace(entry["result"].trace, f"{base}_time.{ext}", fmt=fmt,
                       timing="wall")
    results["epoch_budget"] = epoch_budget
    results["N"] = N
    return results


# ---------------------------------------------------------------------------
# built-in invariant checks (the `check` subcommand)
# ---------------------------------------------------------------------------

def run_checks(verbose=True):
    from . import subproblem as sub
    from .core import operator_value
    from .sampling import nonuniform_sample_size as theta_n
    from .sampling import uniform_sample_size as theta_u
    from .solvers import EXACT_WINDOW, select_lambda

    failures = []

    def check(name, ok):
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    # scalar cubic prox root at rho = 1/6, ell = 1, ||v|| = 1
    v = np.array([1.0])
    out = sub.cubic_prox(v, 1.0, 1.0 / 6.0)
    check("cubic_prox golden-ratio root",
          abs(out[0] - (math.sqrt(5.0) - 1.0) / 2.0) < 1e-12)

    # SOC projection idempotence and nonexpansiveness on random points
    rng = np.random.default_rng(0)
    ok_idem, ok_nonexp = True, True
    for _ in range(200):
        w = rng.standard_normal(7) * 3.0
        w2 = rng.standard_normal(7) * 3.0
        p1 = sub.soc_project(w, 2, 3).as_array()
        p2 = sub.soc_project(w2, 2, 3).as_array()
        ok_idem &= np.linalg.norm(
            sub.soc_project(p1, 2, 3).as_array() - p1) <= 1e-14 * (1 + np.linalg.norm(p1))
        ok_nonexp &= np.linalg.norm(p1 - p2) <= np.linalg.norm(w - w2) + 1e-12
    check("soc_project idempotent", ok_idem)
    check("soc_project nonexpansive", ok_nonexp)

    # sample-size formulas at the documented spot values
    check("uniform sample size spot value",
          theta_u(1.0, 0.5, 0.5, 5, 5) == 237)
    check("nonuniform sample size spot value",
          theta_n(1.0, 0.5, 0.5, 5, 5) == 60)

    # window midpoint rule
    lam = select_lambda(1.0, 1.0, EXACT_WINDOW)
    check("lambda window midpoint", abs(lam - 14.0 / 195.0) < 1e-15)

    # monotonicity of the operator on a quadratic fixture
    prob = make_random_cc_quadratic(4, 3, seed=1)
    ok_mono = True
    for _ in range(50):
        za = rng.standard_normal(7)
        zb = rng.standard_normal(7)
        gap = (za - zb) @ (operator_value(prob, za) - operator_value(prob, zb))
        ok_mono &= gap >= -1e-10 * np.dot(za - zb, za - zb)
    check("operator monotone on quadratic", ok_mono)

    # determinism of a small Newton run
    inst = make_cubic_bilinear(8, 1.0 / 160.0, seed=3)
    cfgs = SolverConfig(rho=1.0 / 160.0, T=5, seed=3)
    r1 = newton_minmax(inst, np.zeros(16), cfgs)
    r2 = newton_minmax(inst, np.zeros(16), cfgs)
    check("newton run deterministic",
          np.array_equal(r1.iterates, r2.iterates)
          and np.array_equal(r1.lambdas, r2.lambdas))

    return failures


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _add_run_flags(p):
    p.add_argument("--problem", choices=["cubic-bilinear", "auc", "quadratic"])
    p.add_argument("--algo", choices=list(NEWTON_ALGOS + FIRST_ORDER_ALGOS))
    p.add_argument("--n", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dataset")
    p.add_argument("--subset", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--config")
    p.add_argument("--reps", type=int)
    p.add_argument("--sampling", choices=["uniform", "nonuniform", "empirical", "full"])
    p.add_argument("--stop-tol", dest="stop_tol", type=float)
    p.add_argument("--kappa-m", dest="kappa_m", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--step-c", dest="step_c", type=float)
    p.add_argument("--timing", choices=["none", "wall"])
    p.add_argument("--no-gap", action="store_true")


def _merge_config(args):
    data = {}
    if getattr(args, "config", None):
        data.update(load_config(args.config))
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            data[f.name] = v
    if getattr(args, "no_gap", False):
        data["gap"] = False
    return ExperimentConfig(**data).validate()


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="saddlenewton",
        description="Benchmark harness for second-order saddle-point solvers")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="single configured run")
    _add_run_flags(p_run)

    p_sweep = subs.add_parser("sweep", help="grid over list-valued config fields")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out-dir", default="sweep_out")

    p_cubic = subs.add_parser("repro-cubic", help="cubic bilinear experiment family")
    p_cubic.add_argument("--n", type=int, default=50)
    p_cubic.add_argument("--algos", default="newton,eg")
    p_cubic.add_argument("--seed", type=int, default=0)
    p_cubic.add_argument("--iters", type=int, default=100)
    p_cubic.add_argument("--out", default="traces")
    p_cubic.add_argument("--format", choices=["csv", "json"], default="csv")

    p_auc = subs.add_parser("repro-auc", help="AUC maximization experiment family")
    p_auc.add_argument("--dataset")
    p_auc.add_argument("--subset", type=int, default=500)
    p_auc.add_argument("--algos",
                       default="inexact-newton,subsampled-newton,seg,sogda")
    p_auc.add_argument("--seed", type=int, default=0)
    p_auc.add_argument("--iters", type=int, default=200)
    p_auc.add_argument("--out", default="traces")
    p_auc.add_argument("--format", choices=["csv", "json"], default="csv")
    p_auc.add_argument("--sampling",
                       choices=["uniform", "nonuniform", "empirical", "full"],
                       default="empirical")
    p_auc.add_argument("--batch", type=int, default=32)
    p_auc.add_argument("--gap", action="store_true")

    subs.add_parser("check", help="run the built-in invariant fixtures")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2

    try:
        if args.command == "run":
            cfg = _merge_config(args)
            for rep in range(cfg.reps):
                rep_cfg = dataclasses.replace(cfg, seed=cfg.seed + rep)
                if cfg.reps > 1 and cfg.out:
                    root, ext = os.path.splitext(cfg.out)
                    rep_cfg = dataclasses.replace(rep_cfg,
                                                  out=f"{root}_rep{rep}{ext}")
                result, _ = run_experiment(rep_cfg)
                summary = RunSummary.from_trace(result.trace)
                print(f"status={result.status} iters={summary.iterations} "
                      f"grad_norm={summary.final_grad_norm} gap={summary.final_gap}")
                if result.status == "budget":
                    return 1
            return 0
        if args.command == "sweep":
            data = load_config(args.config)
            grid_keys = [k for k, v in data.items() if isinstance(v, list)]
            fixed = {k: v for k, v in data.items() if not isinstance(v, list)}
            combos = itertools.product(*(data[k] for k in grid_keys)) \
                if grid_keys else [()]
            os.makedirs(args.out_dir, exist_ok=True)
            rc = 0
            for combo in combos:
                entry = dict(fixed)
                entry.update(dict(zip(grid_keys, combo)))
                tag = "_".join(f"{k}{v}" for k, v in zip(grid_keys, combo)) or "run"
                entry.setdefault("format", "csv")
                entry["out"] = os.path.join(
                    args.out_dir, f"{tag}.{entry['format']}")
                cfg = ExperimentConfig(**entry).validate()
                result, _ = run_experiment(cfg)
                print(f"{tag}: status={result.status}")
                if result.status == "budget":
                    rc = 1
            return rc
        if args.command == "repro-cubic":
            algos = [a.strip() for a in args.algos.split(",") if a.strip()]
            out = run_cubic_experiment(n=args.n, algos=algos, seed=args.seed,
                                       iters=args.iters, out_dir=args.out,
                                       fmt=args.format)
            rc = 0
            for algo, entry in out.items():
                s = entry["summary"]
                print(f"{algo}: iters={s.iterations} final_gap={s.final_gap} "
                      f"grad_norm={s.final_grad_norm} slope={s.gap_slope}")
                if entry["bound_violations"]:
                    print(f"{algo}: BOUND VIOLATIONS {entry['bound_violations'][:3]}")
                    rc = 1
                status = entry["result"].status
                if status == "budget":
                    rc = 1
            return rc
        if args.command == "repro-auc":
            algos = [a.strip() for a in args.algos.split(",") if a.strip()]
            out = run_auc_experiment(
                dataset=args.dataset, subset=args.subset, algos=algos,
                seed=args.seed, iters=args.iters, out_dir=args.out,
                fmt=args.format, sampling=args.sampling, batch=args.batch,
                compute_gap=args.gap)
            rc = 0
            for algo in algos:
                entry = out[algo]
                s = entry["summary"]
                epochs = s.total_samples / out["N"]
                print(f"{algo}: iters={s.iterations} grad_norm={s.final_grad_norm} "
                      f"samples={s.total_samples} (~{epochs:.1f} Hessian epochs)")
                if entry["result"].status == "budget":
                    rc = 1
            return rc
        if args.command == "check":
            failures = run_checks()
            if failures:
                print(f"{len(failures)} check(s) failed")
                return 1
            print("all checks passed")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 2


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
