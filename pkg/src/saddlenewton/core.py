"""Joint-point arithmetic, the saddle operator and its Jacobian, ergodic
averaging, and the restricted-gap performance measure.

Conventions: a joint point z = [x; y] stacks the min-block x (length m) and
the max-block y (length n).  The saddle operator F(z) = (grad_x f, -grad_y f)
is monotone for convex-concave f and vanishes exactly at saddle points.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import spectral_norm


class JointPoint:
    """A point z = (x, y) in R^{m+n} with the block split recorded."""

    __slots__ = ("m", "n", "coords")

    def __init__(self, m, n, coords):
        if m < 1 or n < 1:
            raise ValueError("block dimensions must be >= 1")
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape != (m + n,):
            raise ValueError(f"coords length {coords.shape} != m+n = {m + n}")
        self.m = int(m)
        self.n = int(n)
        self.coords = coords

    @classmethod
    def from_blocks(cls, x, y):
        x = np.asarray(x, dtype=np.float64).ravel()
        y = np.asarray(y, dtype=np.float64).ravel()
        return cls(x.size, y.size, np.concatenate((x, y)))

    @classmethod
    def zeros(cls, m, n):
        return cls(m, n, np.zeros(m + n))

    def x(self):
        return self.coords[: self.m]

    def y(self):
        return self.coords[self.m :]

    def __repr__(self):
        return f"JointPoint(m={self.m}, n={self.n}, coords={self.coords!r})"


def as_array(z):
    """Flat coordinate view of a JointPoint or array-like."""
    if isinstance(z, JointPoint):
        return z.coords
    return np.asarray(z, dtype=np.float64)


class SaddleProblem:
    """Evaluator bundle for a convex-concave objective f(x, y).

    Subclasses supply value/gradient/hessian on the stacked point z = [x; y];
    the optional hooks advertise a known saddle point and closed-form inner
    solves for the restricted gap.
    """

    m = None
    n = None

    def value(self, z):
        raise NotImplementedError

    def gradient(self, z):
        raise NotImplementedError

    def hessian(self, z):
        raise NotImplementedError

    def saddle(self):
        return None

    def gap_max_y(self, x_hat, y_center, beta):
        """Closed-form max_{y in B_beta(y_center)} f(x_hat, y), or None."""
        return None

    def gap_min_x(self, y_hat, x_center, beta):
        """Closed-form min_{x in B_beta(x_center)} f(x, y_hat), or None."""
        return None

    def dim(self):
        return self.m + self.n

    def check_point(self, z):
        z = as_array(z)
        if z.shape != (self.m + self.n,):
            raise ValueError(
                f"point of length {z.shape} does not match problem dim {self.m + self.n}"
            )
        return z


def operator_value(problem, z):
    """Saddle operator F(z) = (grad_x f, -grad_y f)."""
    z = problem.check_point(z)
    g = problem.gradient(z)
    out = g.copy()
    out[problem.m :] = -out[problem.m :]
    return out


def operator_jacobian(problem, z):
    """Jacobian DF(z) = diag(I_m, -I_n) @ hessian(z); asymmetric in general."""
    z = problem.check_point(z)
    H = problem.hessian(z)
    J = H.copy()
    J[problem.m :, :] = -J[problem.m :, :]
    return J


def average_iterates(points, weights):
    """Weighted (ergodic) average of joint points: sum(w_i z_i) / sum(w_i)."""
    if len(points) == 0:
        raise ValueError("cannot average an empty sequence")
    if len(points) != len(weights):
        raise ValueError("points and weights must have equal length")
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    first = points[0]
    arr = np.stack([as_array(p) for p in points])
    avg = (weights[:, None] * arr).sum(axis=0) / weights.sum()
    if isinstance(first, JointPoint):
        return JointPoint(first.m, first.n, avg)
    return avg


def weighted_regret(problem, points, weights, comparator):
    """Normalized weighted regret sum(w_i (z_i - z)^T F(z_i)) / sum(w_i)."""
    if len(points) == 0:
        raise ValueError("cannot evaluate regret on an empty sequence")
    if len(points) != len(weights):
        raise ValueError("points and weights must have equal length")
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    zc = problem.check_point(comparator)
    total = 0.0
    for w, p in zip(weights, points):
        zi = as_array(p)
        total += w * float((zi - zc) @ operator_value(problem, zi))
    return total / weights.sum()


@dataclass
class GapConfig:
    """Settings for the restricted-gap inner max/min solves."""

    beta: float
    inner_iters: int = 2000
    inner_tol: float = 1e-9

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")
        if self.inner_tol <= 0:
            raise ValueError("inner_tol must be positive")


@dataclass
class GapResult:
    """Restricted-gap value with inner-solver diagnostics."""

    value: float
    max_side: float
    min_side: float
    converged: bool
    residual: float

    def __float__(self):
        return float(self.value)


def ball_project(w, center, beta):
    d = w - center
    nd = np.linalg.norm(d)
    return center + (beta / max(beta, nd)) * d


def _ball_smoothness(hess_fn, center, beta, dim):
    # Probe the block Hessian at the center and a few ball points; the 5%
    # headroom keeps the projected-gradient step 1/L valid between probes.
    rng = np.random.default_rng(12345)
    probes = [center]
    for _ in range(3):
        u = rng.standard_normal(dim)
        probes.append(center + beta * u / np.linalg.norm(u))
    best = 0.0
    for p in probes:
        best = max(best, spectral_norm(hess_fn(p), iters=60))
    return 1.05 * best


def _projected_extremum(value_fn, grad_fn, hess_fn, center, beta, maximize,
                        inner_iters, inner_tol):
    dim = center.size
    lhat = max(_ball_smoothness(hess_fn, center, beta, dim), 1e-12)
    step = 1.0 / lhat
    sign = 1.0 if maximize else -1.0
    w = center.copy()
    residual = np.inf
    for _ in range(inner_iters):
        g = grad_fn(w)
        w_new = ball_project(w + sign * step * g, center, beta)
        residual = np.linalg.norm(w_new - w) / step
        w = w_new
        if residual <= inner_tol:
            break
    return float(value_fn(w)), residual <= inner_tol, residual


def restricted_gap(problem, candidate, center, cfg):
    """Restricted gap of `candidate` around the saddle estimate `center`.

    Gap = max_{y in B_beta(y*)} f(x_hat, y) - min_{x in B_beta(x*)} f(x, y_hat),
    each inner problem solved by a problem-supplied closed form when available
    and by projected gradient ascent/descent on the Euclidean ball otherwise.
    """
    zc = problem.check_point(candidate)
    zs = problem.check_point(center)
    m = problem.m
    x_hat, y_hat = zc[:m], zc[m:]
    x_c, y_c = zs[:m], zs[m:]
    beta = cfg.beta

    max_side = problem.gap_max_y(x_hat, y_c, beta)
    max_conv, max_res = True, 0.0
    if max_side is None:
        max_side, max_conv, max_res = _projected_extremum(
            value_fn=lambda y: problem.value(np.concatenate((x_hat, y))),
            grad_fn=lambda y: problem.gradient(np.concatenate((x_hat, y)))[m:],
            hess_fn=lambda y: problem.hessian(np.concatenate((x_hat, y)))[m:, m:],
            center=y_c, beta=beta, maximize=True,
            inner_iters=cfg.inner_iters, inner_tol=cfg.inner_tol)

    min_side = problem.gap_min_x(y_hat, x_c, beta)
    min_conv, min_res = True, 0.0
    if min_side is None:
        min_side, min_conv, min_res = _projected_extremum(
            value_fn=lambda x: problem.value(np.concatenate((x, y_hat))),
            grad_fn=lambda x: problem.gradient(np.concatenate((x, y_hat)))[:m],
            hess_fn=lambda x: problem.hessian(np.concatenate((x, y_hat)))[:m, :m],
            center=x_c, beta=beta, maximize=False,
            inner_iters=cfg.inner_iters, inner_tol=cfg.inner_tol)

    return GapResult(
        value=float(max_side) - float(min_side),
        max_side=float(max_side),
        min_side=float(min_side),
        converged=max_conv and min_conv,
        residual=max(max_res, min_res),
    )
