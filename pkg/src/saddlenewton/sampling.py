"""Subsampled Hessian construction for finite sums: uniform and nonuniform
sampling distributions, concentration-based sample sizes, the tau forcing
rule, and the per-iteration failure-probability split."""

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class SamplingPlan:
    """How to draw component indices for one subsampled Hessian."""

    scheme: str  # "uniform" | "nonuniform"
    probs: np.ndarray
    sample_size: int
    with_replacement: bool = True

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")


def uniform_plan(N, sample_size, with_replacement=True):
    return SamplingPlan("uniform", np.full(N, 1.0 / N), sample_size,
                        with_replacement)


def subsampled_hessian(fs, z, plan, rng):
    """Importance-weighted subsampled Hessian
    (1/(N |S|)) sum_{i in S} (1/p_i) hess f_i(z), plus the exact Hessian of
    the deterministic part.  Unbiased for the sum part."""
    N = fs.N
    if plan.probs.size != N:
        raise ValueError("plan does not match the finite sum")
    if plan.with_replacement:
        idx = rng.choice(N, size=plan.sample_size, replace=True, p=plan.probs)
    else:
        if plan.sample_size > N:
            raise ValueError("cannot draw more than N without replacement")
        idx = rng.choice(N, size=plan.sample_size, replace=False, p=plan.probs)
    coeff = 1.0 / (N * plan.sample_size * plan.probs[idx])
    H = fs.sum_hessian_subset(z, idx, coeff) + fs.deterministic_hessian(z)
    return 0.5 * (H + H.T)


def uniform_sample_size(B_max, tau, delta, m, n):
    """Uniform-sampling size threshold ceil((16 B^2 / tau^2) log(2(m+n)/delta))."""
    _check_size_args(B_max, tau, delta, m, n)
    return math.ceil(16.0 * B_max**2 / tau**2 * math.log(2.0 * (m + n) / delta))


def nonuniform_sample_size(B_avg, tau, delta, m, n):
    """Nonuniform-sampling size threshold ceil((4 B^2 / tau^2) log(2(m+n)/delta))."""
    _check_size_args(B_avg, tau, delta, m, n)
    return math.ceil(4.0 * B_avg**2 / tau**2 * math.log(2.0 * (m + n) / delta))


def _check_size_args(B, tau, delta, m, n):
    if B <= 0 or m < 1 or n < 1:
        raise ValueError("bounds and dimensions must be positive")
    if not (0 < tau < 1) or not (0 < delta < 1):
        raise ValueError("tau and delta must lie in (0, 1)")


def nonuniform_probs(fs, z):
    """Sampling distribution p_i proportional to
    ||phi_i''(a_i^T x, b_i^T y)|| (||a_i||^2 + ||b_i||^2) for GLM-form sums.
    Falls back to uniform (with a warning) when every weight vanishes."""
    glm = fs.glm_data
    if glm is None:
        raise ValueError("nonuniform sampling needs GLM component data")
    s = glm.a @ z[: fs.m]
    t = glm.b @ z[fs.m :]
    phi2 = glm.phi2(s, t)
    half_tr = 0.5 * (phi2[:, 0, 0] + phi2[:, 1, 1])
    rad = np.sqrt(0.25 * (phi2[:, 0, 0] - phi2[:, 1, 1]) ** 2 + phi2[:, 0, 1] ** 2)
    phi_norm = np.abs(half_tr) + rad
    w = phi_norm * glm.sq_norms()
    total = w.sum()
    if total <= 0:
        warnings.warn("all nonuniform sampling weights are zero; using uniform")
        return np.full(fs.N, 1.0 / fs.N)
    return w / total


def tau_rule(tau0, kappa_m, kappa_H, rho, grad_norm):
    """Forcing rule min(tau0, rho (1 - kappa_m) grad_norm / (4 (kappa_H + 6 rho))).

    grad_norm = 0 means the outer solver should already have stopped; tau0 is
    returned with a warning in that case.
    """
    if tau0 <= 0 or rho <= 0 or kappa_H <= 0:
        raise ValueError("tau0, rho and kappa_H must be positive")
    if not (0 < kappa_m < 1):
        raise ValueError("kappa_m must lie in (0, 1)")
    if grad_norm == 0:
        warnings.warn("tau_rule called at a saddle point (grad_norm = 0)")
        return tau0
    return min(tau0, rho * (1.0 - kappa_m) * grad_norm / (4.0 * (kappa_H + 6.0 * rho)))


def per_iteration_delta(delta_total, T):
    """Per-iteration failure probability 1 - (1 - delta)^{1/T}: compounding T
    successes keeps the overall success probability at least 1 - delta."""
    if not (0 < delta_total < 1):
        raise ValueError("delta_total must lie in (0, 1)")
    if T < 1:
        raise ValueError("T must be >= 1")
    return 1.0 - (1.0 - delta_total) ** (1.0 / T)


def empirical_sample_size(dim, grad_hat_norm, grad_norm, N):
    """Practitioner's rule 5 log(d+3) / min(grad norms squared), clipped to
    [1, N]."""
    g = min(grad_hat_norm, grad_norm)
    if g <= 0:
        return N
    size = math.ceil(5.0 * math.log(dim + 3.0) / g**2)
    return int(min(max(size, 1), N))
