"""Outer solvers: exact, inexact, and subsampled regularized-Newton
extragradient methods, plus the first-order baselines EG, OGDA and their
stochastic variants.  Every solver emits a per-iteration trace.

One Newton-type iteration anchored at z_hat_k: solve the cubic regularized
model at the anchor for dz_k, pick lambda_{k+1} so that
lambda * rho * ||dz_k|| lands mid-window, move the leading iterate to
z_{k+1} = z_hat_k + dz_k, then slide the anchor along the operator,
z_hat_{k+1} = z_hat_k - lambda_{k+1} F(z_{k+1}).  The output is the
lambda-weighted average of the leading iterates.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import JointPoint, average_iterates, operator_value
from .numerics import spectral_norm
from .problems import FiniteSumProblem
from .sampling import (
    SamplingPlan,
    empirical_sample_size,
    nonuniform_probs,
    nonuniform_sample_size,
    per_iteration_delta,
    subsampled_hessian,
    tau_rule,
    uniform_sample_size,
)
from .subproblem import CubicSubproblem, solve_cubic_subproblem

EXACT_WINDOW = (1.0 / 15.0, 1.0 / 13.0)
INEXACT_WINDOW = (1.0 / 15.0, 1.0 / 14.0)


class SaddleDetected(RuntimeError):
    """Signal that the current iterate already solves the problem."""


@dataclass
class SolverConfig:
    """Shared knobs for the Newton-type solvers.

    The lambda window defaults per algorithm ((1/15, 1/13) exact,
    (1/15, 1/14) inexact/subsampled) when left unset.  kappa_m and tau0 are
    validated softly: values outside the analysed range (kappa_m < min(1,
    rho/4), tau0 < rho/4) only trigger a warning, matching practical tuning
    on problems with tiny rho.
    """

    rho: float
    T: int
    stop_tol: float = None
    kappa_m: float = 0.1
    tau0: float = None
    kappa_H: float = None
    delta: float = 0.01
    lambda_window: tuple = None
    seed: int = 0
    gmp_budget: int = 500
    ssn_budget: int = 200

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if not (0.0 < self.kappa_m < 1.0):
            raise ValueError("kappa_m must lie in (0, 1)")

    def warn_outside_analysed_regime(self):
        # only relevant to the inexact-mode solvers that consume kappa_m/tau0
        if self.kappa_m >= min(1.0, self.rho / 4.0):
            warnings.warn(
                f"kappa_m={self.kappa_m} exceeds min(1, rho/4)="
                f"{min(1.0, self.rho / 4)}; outside the analysed regime",
                stacklevel=3)
        if self.tau0 is not None and self.tau0 >= self.rho / 4.0:
            warnings.warn(f"tau0={self.tau0} exceeds rho/4", stacklevel=3)

    def effective_tau0(self):
        return self.tau0 if self.tau0 is not None else self.rho / 8.0


@dataclass
class IterateTrace:
    """One row per accepted outer iterate z_k."""

    k: int
    lambda_k: float
    step_norm: float
    grad_norm: float
    gap: float = None
    hat_dist: float = 0.0
    samples: int = 0
    subproblem_iters: int = 0
    wall_time_s: float = 0.0


@dataclass
class SolverResult:
    averaged: JointPoint
    last: JointPoint
    trace: list
    status: str  # "converged" | "budget" | "stopped_at_saddle"
    iterates: np.ndarray = None
    hat_iterates: np.ndarray = None
    lambdas: np.ndarray = None
    certificates: list = field(default_factory=list)
    aux: dict = field(default_factory=dict)


def select_lambda(step_norm, rho, window):
    """Midpoint rule: lambda with lambda * rho * step_norm = (lo + hi) / 2,
    so the window inequality holds with maximal margin."""
    lo, hi = window
    if not (0 < lo < hi):
        raise ValueError("window must satisfy 0 < lo < hi")
    if rho <= 0:
        raise ValueError("rho must be positive")
    if step_norm <= 0:
        raise SaddleDetected("zero step: current anchor solves the model")
    return 0.5 * (lo + hi) / (rho * step_norm)


def _full_hessian_samples(problem):
    return problem.N if isinstance(problem, FiniteSumProblem) else 0


def _newton_loop(problem, z0, cfg, window, mode, make_hessian):
    m, n = problem.m, problem.n
    z0 = problem.check_point(z0).copy()
    zhat = z0.copy()
    z = z0.copy()
    Fz = operator_value(problem, z)
    fnorm = np.linalg.norm(Fz)
    stop_tol = cfg.stop_tol
    if stop_tol is None:
        stop_tol = 1e-12 * (1.0 + fnorm)
    rng = np.random.default_rng(np.random.PCG64(cfg.seed))
    rows, iterates, lambdas, certs, taus, hats = [], [], [], [], [], [zhat.copy()]
    status = "converged"
    for k in range(cfg.T):
        t0 = time.perf_counter()
        if fnorm <= stop_tol:
            status = "stopped_at_saddle"
            break
        g = problem.gradient(zhat)
        gnorm = np.linalg.norm(g)
        H, samples, tau_k = make_hessian(k, zhat, g, gnorm, fnorm, rng)
        sp = CubicSubproblem(g, H, cfg.rho, m, n)
        sol = solve_cubic_subproblem(
            sp, mode=mode, kappa_m=cfg.kappa_m, grad_norm_ref=gnorm,
            gmp_budget=cfg.gmp_budget, ssn_budget=cfg.ssn_budget)
        if sol.status == "budget_exhausted":
            status = "budget"
            break
        dz = sol.dz
        step_norm = np.linalg.norm(dz)
        if step_norm == 0.0:
            status = "stopped_at_saddle"
            break
        lam = select_lambda(step_norm, cfg.rho, window)
        z = zhat + dz
        Fz = operator_value(problem, z)
        fnorm = np.linalg.norm(Fz)
        zhat = zhat - lam * Fz
        if mode == "condition2":
            certs.append((sol.model_grad_norm, step_norm, gnorm))
        taus.append(tau_k)
        iterates.append(z.copy())
        hats.append(zhat.copy())
        lambdas.append(lam)
        rows.append(IterateTrace(
            k=k + 1, lambda_k=lam, step_norm=step_norm, grad_norm=fnorm,
            hat_dist=np.linalg.norm(zhat - z0), samples=samples,
            subproblem_iters=sol.gmp_iters + sol.ssn_iters,
            wall_time_s=time.perf_counter() - t0))
    if iterates:
        averaged = average_iterates(
            [JointPoint(m, n, zi) for zi in iterates], lambdas)
    else:
        averaged = JointPoint(m, n, z0.copy())
    return SolverResult(
        averaged=averaged, last=JointPoint(m, n, z.copy()), trace=rows,
        status=status,
        iterates=np.asarray(iterates) if iterates else np.empty((0, m + n)),
        hat_iterates=np.asarray(hats),
        lambdas=np.asarray(lambdas),
        certificates=certs,
        aux={"taus": taus, "stop_tol": stop_tol})


def newton_minmax(problem, z0, cfg):
    """Exact second-order extragradient method (tight-tolerance subproblem
    solves, exact Hessians, window (1/15, 1/13))."""
    window = cfg.lambda_window or EXACT_WINDOW
    samples = _full_hessian_samples(problem)

    def make_hessian(k, zhat, g, gnorm, fnorm, rng):
        return problem.hessian(zhat), samples, None

    return _newton_loop(problem, z0, cfg, window, "exact", make_hessian)


def inexact_newton_minmax(problem, z0, cfg, hessian_source=None):
    """Inexact variant: Hessian surrogates from `hessian_source` (defaults to
    the exact Hessian) and subproblem solves to the relative condition-2
    accuracy; window (1/15, 1/14)."""
    window = cfg.lambda_window or INEXACT_WINDOW
    cfg.warn_outside_analysed_regime()
    source = hessian_source or problem.hessian
    samples = _full_hessian_samples(problem) if hessian_source is None else 0
    tau0 = cfg.effective_tau0()

    def make_hessian(k, zhat, g, gnorm, fnorm, rng):
        H = source(zhat)
        kH = cfg.kappa_H
        if kH is None:
            kH = 1.01 * max(spectral_norm(H, iters=50), 1e-12)
        tau_k = tau_rule(tau0, cfg.kappa_m, kH, cfg.rho, gnorm)
        return H, samples, tau_k

    return _newton_loop(problem, z0, cfg, window, "condition2", make_hessian)


def subsampled_newton_minmax(fs, z0, cfg, scheme="uniform", plan_builder=None,
                             with_replacement=True):
    """Subsampled-Hessian variant for finite sums.

    scheme: "uniform" / "nonuniform" use the concentration sample sizes with
    the per-iteration failure split of the total delta; "empirical" uses the
    practitioner's 5 log(d+3) / min(grad norms)^2 rule; "full" forces |S| = N
    (degenerates to the inexact solver with exact Hessians).  A custom
    plan_builder(fs, k, zhat, tau_k, delta_k, rng) overrides the scheme.
    """
    if not isinstance(fs, FiniteSumProblem):
        raise ValueError("subsampled solver requires a finite-sum problem")
    window = cfg.lambda_window or INEXACT_WINDOW
    cfg.warn_outside_analysed_regime()
    bounds = fs.component_hessian_bounds()
    if bounds is None and scheme in ("uniform", "nonuniform"):
        raise ValueError("component Hessian bounds required for sized sampling")
    B_max = float(np.max(bounds)) if bounds is not None else None
    B_avg = float(np.mean(bounds)) if bounds is not None else None
    tau0 = cfg.effective_tau0()
    N = fs.N
    d_total = fs.m + fs.n

    def make_hessian(k, zhat, g, gnorm, fnorm, rng):
        kH = B_max if B_max is not None else cfg.kappa_H or 1.0
        tau_k = tau_rule(tau0, cfg.kappa_m, kH, cfg.rho, gnorm) if gnorm > 0 else tau0
        delta_k = per_iteration_delta(cfg.delta, cfg.T)
        if plan_builder is not None:
            plan = plan_builder(fs, k, zhat, tau_k, delta_k, rng)
            if plan.sample_size >= N and not plan.with_replacement:
                return fs.hessian(zhat), N, tau_k
        else:
            if scheme == "uniform":
                size = uniform_sample_size(B_max, tau_k, delta_k, fs.m, fs.n)
            elif scheme == "nonuniform":
                size = nonuniform_sample_size(B_avg, tau_k, delta_k, fs.m, fs.n)
            elif scheme == "empirical":
                size = empirical_sample_size(d_total, gnorm, fnorm, N)
            elif scheme == "full":
                size = N
            else:
                raise ValueError(f"unknown sampling scheme {scheme!r}")
            if size >= N:
                # prescribed size covers the sum: take the exact full batch
                # (identical code path to the exact Hessian, so a degenerate
                # sampling run reproduces the inexact solver bit for bit)
                return fs.hessian(zhat), N, tau_k
            if scheme == "nonuniform":
                plan = SamplingPlan("nonuniform", nonuniform_probs(fs, zhat),
                                    size, True)
            else:
                plan = SamplingPlan("uniform", np.full(N, 1.0 / N), size,
                                    with_replacement)
        H = subsampled_hessian(fs, zhat, plan, rng)
        return H, plan.sample_size, tau_k

    return _newton_loop(fs, z0, cfg, window, "condition2", make_hessian)


# ---------------------------------------------------------------------------
# first-order baselines
# ---------------------------------------------------------------------------

def constant_step(c):
    return lambda k: c


def inv_sqrt_step(c):
    return lambda k: c / np.sqrt(k + 1.0)


def _as_step_rule(step_rule):
    if callable(step_rule):
        return step_rule
    return constant_step(float(step_rule))


def _first_order_result(problem, z0, iterates, hats, lambdas, rows, status):
    m, n = problem.m, problem.n
    if iterates:
        averaged = average_iterates(
            [JointPoint(m, n, zi) for zi in iterates], lambdas)
        last = JointPoint(m, n, iterates[-1].copy())
    else:
        averaged = JointPoint(m, n, z0.copy())
        last = JointPoint(m, n, z0.copy())
    return SolverResult(
        averaged=averaged, last=last, trace=rows, status=status,
        iterates=np.asarray(iterates) if iterates else np.empty((0, m + n)),
        hat_iterates=np.asarray(hats) if hats else np.empty((0, m + n)),
        lambdas=np.asarray(lambdas))


def eg_solve(problem, z0, ell, T, stop_tol=None):
    """Extragradient with the closed-form quadratic model step: exploration
    z_{k+1} = z_hat_k - (1/2 ell) F(z_hat_k), anchor update with the same
    step."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    z0 = problem.check_point(z0).copy()
    lam = 1.0 / (2.0 * ell)
    zhat = z0.copy()
    Fz = operator_value(problem, z0)
    rows, iterates, lambdas, hats = [], [], [], [z0.copy()]
    status = "converged"
    for k in range(T):
        t0 = time.perf_counter()
        if stop_tol is not None and np.linalg.norm(Fz) <= stop_tol:
            status = "stopped_at_saddle"
            break
        dz = -lam * operator_value(problem, zhat)
        z = zhat + dz
        Fz = operator_value(problem, z)
        zhat = zhat - lam * Fz
        iterates.append(z.copy())
        hats.append(zhat.copy())
        lambdas.append(lam)
        rows.append(IterateTrace(
            k=k + 1, lambda_k=lam, step_norm=np.linalg.norm(dz),
            grad_norm=np.linalg.norm(Fz), hat_dist=np.linalg.norm(zhat - z0),
            wall_time_s=time.perf_counter() - t0))
    return _first_order_result(problem, z0, iterates, hats, lambdas, rows, status)


def ogda_solve(problem, z0, step_rule, T, stop_tol=None):
    """Optimistic gradient descent ascent:
    z_{k+1} = z_k - 2 lambda_k F(z_k) + lambda_{k-1} F(z_{k-1})."""
    step = _as_step_rule(step_rule)
    z0 = problem.check_point(z0).copy()
    z = z0.copy()
    Fk = operator_value(problem, z)
    F_prev = Fk.copy()
    lam_prev = step(0)
    rows, iterates, lambdas, hats = [], [], [], [z0.copy()]
    status = "converged"
    for k in range(T):
        t0 = time.perf_counter()
        if stop_tol is not None and np.linalg.norm(Fk) <= stop_tol:
            status = "stopped_at_saddle"
            break
        lam = step(k)
        z_new = z - 2.0 * lam * Fk + lam_prev * F_prev
        F_prev, lam_prev = Fk, lam
        step_norm = np.linalg.norm(z_new - z)
        z = z_new
        Fk = operator_value(problem, z)
        iterates.append(z.copy())
        hats.append(z.copy())
        lambdas.append(lam if lam > 0 else 1.0)
        rows.append(IterateTrace(
            k=k + 1, lambda_k=lam, step_norm=step_norm,
            grad_norm=np.linalg.norm(Fk), hat_dist=np.linalg.norm(z - z0),
            wall_time_s=time.perf_counter() - t0))
    return _first_order_result(problem, z0, iterates, hats, lambdas, rows, status)


def _minibatch_operator(fs, z, idx):
    g = fs.sum_gradient_subset(z, idx) + fs.deterministic_gradient(z)
    g[fs.m :] = -g[fs.m :]
    return g


def _draw_batch(fs, rng, batch):
    if batch >= fs.N:
        return np.arange(fs.N)
    return rng.integers(0, fs.N, size=batch)


def seg_solve(fs, z0, step_rule, T, seed=0, batch=32):
    """Stochastic extragradient: EG recursion with independent minibatch
    operator estimates at the exploration and anchor updates."""
    step = _as_step_rule(step_rule)
    z0 = fs.check_point(z0).copy()
    rng = np.random.default_rng(np.random.PCG64(seed))
    zhat = z0.copy()
    rows, iterates, lambdas, hats = [], [], [], [z0.copy()]
    for k in range(T):
        t0 = time.perf_counter()
        lam = step(k)
        idx = _draw_batch(fs, rng, batch)
        z = zhat - lam * _minibatch_operator(fs, zhat, idx)
        idx = _draw_batch(fs, rng, batch)
        zhat = zhat - lam * _minibatch_operator(fs, z, idx)
        iterates.append(z.copy())
        hats.append(zhat.copy())
        lambdas.append(lam if lam > 0 else 1.0)
        rows.append(IterateTrace(
            k=k + 1, lambda_k=lam, step_norm=np.linalg.norm(z - hats[-2]),
            grad_norm=np.linalg.norm(operator_value(fs, z)),
            hat_dist=np.linalg.norm(zhat - z0), samples=2 * batch,
            wall_time_s=time.perf_counter() - t0))
    return _first_order_result(fs, z0, iterates, hats, lambdas, rows, "converged")


def sogda_solve(fs, z0, step_rule, T, seed=0, batch=32):
    """Stochastic OGDA: one fresh minibatch estimate per iteration, the
    previous estimate reused for the optimistic correction."""
    step = _as_step_rule(step_rule)
    z0 = fs.check_point(z0).copy()
    rng = np.random.default_rng(np.random.PCG64(seed))
    z = z0.copy()
    idx = _draw_batch(fs, rng, batch)
    Fk = _minibatch_operator(fs, z, idx)
    F_prev = Fk.copy()
    lam_prev = step(0)
    rows, iterates, lambdas, hats = [], [], [], [z0.copy()]
    for k in range(T):
        t0 = time.perf_counter()
        lam = step(k)
        z_new = z - 2.0 * lam * Fk + lam_prev * F_prev
        F_prev, lam_prev = Fk, lam
        step_norm = np.linalg.norm(z_new - z)
        z = z_new
        idx = _draw_batch(fs, rng, batch)
        Fk = _minibatch_operator(fs, z, idx)
        iterates.append(z.copy())
        hats.append(z.copy())
        lambdas.append(lam if lam > 0 else 1.0)
        rows.append(IterateTrace(
            k=k + 1, lambda_k=lam, step_norm=step_norm,
            grad_norm=np.linalg.norm(operator_value(fs, z)),
            hat_dist=np.linalg.norm(z - z0), samples=batch,
            wall_time_s=time.perf_counter() - t0))
    return _first_order_result(fs, z0, iterates, hats, lambdas, rows, "converged")
