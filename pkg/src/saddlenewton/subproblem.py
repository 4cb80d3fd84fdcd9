"""Cubic regularized saddle subproblem and its solvers.

The per-iteration model
    m(dx, dy) = dz^T g + 0.5 dz^T H dz + 2 rho ||dx||^3 - 2 rho ||dy||^3
is solved either to a tight stationarity tolerance ("exact" mode) or to the
relative accuracy ||grad m(dz)|| <= kappa_m * min(||dz||^2, grad_norm_ref)
("condition2" mode).  The pipeline is a generalized mirror-prox warm start
whose prox steps reduce to a scalar quadratic root, followed by a semismooth
Newton method on the projection equation obtained by lifting the cubic terms
into second-order-cone constraints.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .numerics import SingularMatrixError, direct_solve, krylov_solve, spectral_norm

DIRECT_SOLVE_MAX_DIM = 200
SSN_ETA_COEFF = 1e-2
SSN_DECREASE = 1e-4
SSN_BACKTRACK_STEPS = 9
KRYLOV_RTOL = 1e-2


@dataclass
class CubicSubproblem:
    """Model data at an anchor point: gradient g, symmetric Hessian
    surrogate H, cubic weight rho, block dims (m, n)."""

    g: np.ndarray
    H: np.ndarray
    rho: float
    m: int
    n: int
    _ell: float = field(default=None, init=False, repr=False)

    def __post_init__(self):
        d = self.m + self.n
        self.g = np.asarray(self.g, dtype=np.float64)
        H = np.asarray(self.H, dtype=np.float64)
        if self.g.shape != (d,):
            raise ValueError(f"gradient length {self.g.shape} != {d}")
        if H.shape != (d, d):
            raise ValueError(f"Hessian shape {H.shape} != ({d}, {d})")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        self.H = np.ascontiguousarray(0.5 * (H + H.T))

    @property
    def dim(self):
        return self.m + self.n

    def ell(self):
        """Smoothness constant of the quadratic part: ||H|| estimated by
        power iteration with 1% headroom, floored away from zero."""
        if self._ell is None:
            est = spectral_norm(self.H, iters=50)
            self._ell = max(1.01 * est, 1e-12)
        return self._ell

    def model_value(self, dz):
        dx, dy = dz[: self.m], dz[self.m :]
        return (
            dz @ self.g
            + 0.5 * dz @ (self.H @ dz)
            + 2.0 * self.rho * np.linalg.norm(dx) ** 3
            - 2.0 * self.rho * np.linalg.norm(dy) ** 3
        )


@dataclass
class SOCPoint:
    """Augmented point (dx, u, dy, v) in the product of two second-order
    cones; feasible iff ||dx|| <= u and ||dy|| <= v."""

    dx: np.ndarray
    u: float
    dy: np.ndarray
    v: float

    @classmethod
    def from_array(cls, w, m, n):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (m + n + 2,):
            raise ValueError(f"length {w.shape} != m+n+2 = {m + n + 2}")
        return cls(dx=w[:m].copy(), u=float(w[m]), dy=w[m + 1 : m + 1 + n].copy(),
                   v=float(w[m + 1 + n]))

    def as_array(self):
        return np.concatenate((self.dx, [self.u], self.dy, [self.v]))

    def feasible(self, tol=0.0):
        return (np.linalg.norm(self.dx) <= self.u + tol
                and np.linalg.norm(self.dy) <= self.v + tol)


@dataclass
class SubproblemSolution:
    dz: np.ndarray
    model_grad_norm: float
    gmp_iters: int
    ssn_iters: int
    status: str  # "exact" | "condition2" | "budget_exhausted"
    optimality_residual: float = None


def model_gradient(sp, dz):
    """Stationarity residual g + H dz + (6 rho ||dx|| dx, -6 rho ||dy|| dy);
    zero exactly at the unique saddle of the model."""
    dz = np.asarray(dz, dtype=np.float64)
    if dz.shape != (sp.dim,):
        raise ValueError(f"dz length {dz.shape} != {sp.dim}")
    r = sp.g + sp.H @ dz
    dx, dy = dz[: sp.m], dz[sp.m :]
    r[: sp.m] += 6.0 * sp.rho * np.linalg.norm(dx) * dx
    r[sp.m :] -= 6.0 * sp.rho * np.linalg.norm(dy) * dy
    return r


def cubic_prox(v, ell, rho):
    """argmin_x { -ell v^T x + (ell/2)||x||^2 + 2 rho ||x||^3 }, i.e. x = lam v
    with lam = 2 ell / (ell + sqrt(ell^2 + 24 rho ||v|| ell))."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return _kernels.cubic_prox(np.ascontiguousarray(v, dtype=np.float64), ell, rho)


def gmp_iterate(sp, dz):
    """One generalized mirror-prox sweep; returns (half_step, full_step)."""
    dz = np.ascontiguousarray(dz, dtype=np.float64)
    state = dz.copy()
    half = np.zeros_like(state)
    _kernels.gmp_chunk(sp.g, sp.H, sp.rho, sp.ell(), sp.m, state, half, 1)
    return half, state


def lift(dz, m):
    """Lift (dx, dy) to the cone point (dx, ||dx||, dy, ||dy||)."""
    dx, dy = dz[:m], dz[m:]
    return np.concatenate((dx, [np.linalg.norm(dx)], dy, [np.linalg.norm(dy)]))


@dataclass
class GmpResult:
    dz: np.ndarray
    iterations: int
    hit_switch: bool


def gmp_solve(sp, start, max_iters, switch_tol, switch_norm="model_grad",
              check_every=1):
    """Run the mirror-prox warm start and return the running average of the
    half-step iterates.

    Stops once the switch criterion drops below switch_tol: the model
    gradient norm at the average ("model_grad") or the cone-equation residual
    at the lifted average ("cone_residual").  Exhausting max_iters returns
    the final average (the point the averaged-iterate error bound certifies)
    flagged via hit_switch=False.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    state = np.ascontiguousarray(start, dtype=np.float64).copy()
    half_sum = np.zeros_like(state)
    ell = sp.ell()
    done = 0
    avg = state
    while done < max_iters:
        chunk = min(check_every, max_iters - done)
        _kernels.gmp_chunk(sp.g, sp.H, sp.rho, ell, sp.m, state, half_sum, chunk)
        done += chunk
        avg = half_sum / done
        if switch_norm == "model_grad":
            score = np.linalg.norm(model_gradient(sp, avg))
        else:
            score = np.linalg.norm(
                _kernels.cone_residual(sp.g, sp.H, sp.rho, sp.m, sp.n, lift(avg, sp.m))
            )
        if score <= switch_tol:
            return GmpResult(dz=avg, iterations=done, hit_switch=True)
    return GmpResult(dz=avg, iterations=done, hit_switch=False)


def soc_project(w, m=None, n=None):
    """Euclidean projection onto the product of the two second-order cones.

    Accepts a raw vector of length m+n+2 (with dims given) or an SOCPoint;
    returns an SOCPoint.
    """
    if isinstance(w, SOCPoint):
        m, n = w.dx.size, w.dy.size
        w = w.as_array()
    else:
        w = np.ascontiguousarray(w, dtype=np.float64)
        if m is None or n is None:
            raise ValueError("m and n required for raw-vector input")
    out = _kernels.soc_project_pair(w, m, n)
    return SOCPoint.from_array(out, m, n)


def _cone_jacobian_block(wx, wu):
    k = wx.size
    nx = np.linalg.norm(wx)
    if nx == 0.0:
        return np.eye(k + 1) if wu >= 0 else np.zeros((k + 1, k + 1))
    if wu > nx:
        return np.eye(k + 1)
    if wu < -nx:
        return np.zeros((k + 1, k + 1))
    # middle case (ties included: any generalized-Jacobian element works)
    J = np.zeros((k + 1, k + 1))
    J[:k, :k] = (1.0 + wu / nx) * np.eye(k) - wu * np.outer(wx, wx) / nx**3
    J[:k, k] = wx / nx
    J[k, :k] = wx / nx
    J[k, k] = 1.0
    return 0.5 * J


def soc_projection_jacobian(w, m=None, n=None):
    """An element of the generalized Jacobian of soc_project at w, assembled
    block-diagonally; ties on case boundaries resolve to the middle-case
    formula."""
    if isinstance(w, SOCPoint):
        m, n = w.dx.size, w.dy.size
        w = w.as_array()
    else:
        w = np.asarray(w, dtype=np.float64)
        if m is None or n is None:
            raise ValueError("m and n required for raw-vector input")
    d = m + n + 2
    J = np.zeros((d, d))
    J[: m + 1, : m + 1] = _cone_jacobian_block(w[:m], w[m])
    J[m + 1 :, m + 1 :] = _cone_jacobian_block(w[m + 1 : m + 1 + n], w[m + 1 + n])
    return J


def _as_cone_array(p, m, n):
    if isinstance(p, SOCPoint):
        return np.ascontiguousarray(p.as_array())
    p = np.ascontiguousarray(p, dtype=np.float64)
    if p.shape != (m + n + 2,):
        raise ValueError(f"cone point length {p.shape} != {m + n + 2}")
    return p


def _cone_map(sp, p):
    """The monotone map G(p) whose fixed-point projection equation encodes
    the lifted saddle: affine gradient blocks plus 6 rho u^2, 6 rho v^2."""
    m, n = sp.m, sp.n
    dz = np.concatenate((p[:m], p[m + 1 : m + 1 + n]))
    hdz = sp.H @ dz
    G = np.empty(m + n + 2)
    G[:m] = sp.g[:m] + hdz[:m]
    G[m] = 6.0 * sp.rho * p[m] ** 2
    G[m + 1 : m + 1 + n] = -(sp.g[m:] + hdz[m:])
    G[m + 1 + n] = 6.0 * sp.rho * p[m + 1 + n] ** 2
    return G


def residual_E(sp, p):
    """Projection-equation residual E(p) = p - P_Z(p - G(p))."""
    p = _as_cone_array(p, sp.m, sp.n)
    return _kernels.cone_residual(sp.g, sp.H, sp.rho, sp.m, sp.n, p)


def residual_jacobian(sp, p):
    """Generalized-Jacobian element I - J_{P_Z}(w) (I - G'(p)) at w = p - G(p)."""
    p = _as_cone_array(p, sp.m, sp.n)
    m, n = sp.m, sp.n
    d = m + n + 2
    w = p - _cone_map(sp, p)
    Gp = np.zeros((d, d))
    Gp[:m, :m] = sp.H[:m, :m]
    Gp[:m, m + 1 : m + 1 + n] = sp.H[:m, m:]
    Gp[m, m] = 12.0 * sp.rho * p[m]
    Gp[m + 1 : m + 1 + n, :m] = -sp.H[m:, :m]
    Gp[m + 1 : m + 1 + n, m + 1 : m + 1 + n] = -sp.H[m:, m:]
    Gp[d - 1, d - 1] = 12.0 * sp.rho * p[d - 1]
    Jp = soc_projection_jacobian(w, m, n)
    return np.eye(d) - Jp @ (np.eye(d) - Gp)


def _dz_from_cone(p, m, n):
    return np.concatenate((p[:m], p[m + 1 : m + 1 + n]))


def _target_tol(sp, mode, kappa_m, grad_norm_ref, dz, exact_tol=None):
    if mode == "exact":
        if exact_tol is None:
            exact_tol = 1e-10
        return exact_tol * (1.0 + np.linalg.norm(sp.g))
    # Solve tighter than the certificate when kappa_m sits above the rho/4
    # regime: the outer step multiplies the model residual by ~1/(rho
    # ||dz||), so residuals at the loose target stall the anchor sequence.
    kappa_eff = min(kappa_m, 0.25 * sp.rho) if sp.rho > 0 else kappa_m
    return kappa_eff * min(float(dz @ dz), grad_norm_ref)


def ssn_solve(sp, start, mode="exact", kappa_m=None, grad_norm_ref=None,
              budget=200, min_steps=0, exact_tol=None):
    """Adaptive regularized semismooth Newton on E(p) = 0.

    Each step solves (J(p) + eta I) d = -E(p) with eta proportional to
    ||E(p)||, accepting p + d on a sufficient decrease of ||E|| and falling
    back to one mirror-prox sweep (with the cone scalars re-lifted)
    otherwise.  Terminates once the model-gradient norm meets the mode
    target, but not before min_steps Newton steps: the outer extragradient
    update is only as clean as the realized (not the permitted) subproblem
    accuracy, so callers ask for one refinement step even when the warm
    start already meets a loose relative target.
    """
    if mode not in ("exact", "condition2"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "condition2":
        if kappa_m is None or not (0.0 < kappa_m < 1.0):
            raise ValueError("condition2 mode needs kappa_m in (0, 1)")
        if grad_norm_ref is None:
            raise ValueError("condition2 mode needs grad_norm_ref")
    m, n = sp.m, sp.n
    d = m + n + 2
    p = _as_cone_array(start, m, n).copy()
    E = residual_E(sp, p)
    enorm = np.linalg.norm(E)
    best_p, best_score = p.copy(), np.inf
    iters = 0
    while True:
        dz = _dz_from_cone(p, m, n)
        mg = np.linalg.norm(model_gradient(sp, dz))
        if mg < best_score:
            best_score, best_p = mg, p.copy()
        if iters >= min_steps and mg <= _target_tol(sp, mode, kappa_m,
                                                    grad_norm_ref, dz,
                                                    exact_tol):
            return SubproblemSolution(
                dz=dz, model_grad_norm=mg, gmp_iters=0, ssn_iters=iters,
                status=mode)
        if iters >= budget:
            dz = _dz_from_cone(best_p, m, n)
            return SubproblemSolution(
                dz=dz,
                model_grad_norm=np.linalg.norm(model_gradient(sp, dz)),
                gmp_iters=0, ssn_iters=iters, status="budget_exhausted")
        iters += 1
        J = residual_jacobian(sp, p)
        eta = SSN_ETA_COEFF * enorm
        M = J + eta * np.eye(d)
        if d <= DIRECT_SOLVE_MAX_DIM:
            try:
                step = direct_solve(M, -E)
            except SingularMatrixError:
                step, _ = krylov_solve(M, -E, tol=KRYLOV_RTOL)
        else:
            step, _ = krylov_solve(M, -E, tol=KRYLOV_RTOL)
        # geometric backtracking: the unit step can overshoot near the cone
        # vertex even though the direction is good
        accepted = False
        t = 1.0
        for _ in range(SSN_BACKTRACK_STEPS):
            trial = p + t * step
            E_trial = residual_E(sp, trial)
            trial_norm = np.linalg.norm(E_trial)
            if trial_norm <= (1.0 - SSN_DECREASE * t) * enorm:
                p, E, enorm = trial, E_trial, trial_norm
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # safeguard: one mirror-prox sweep on the (dx, dy) blocks, cone
            # scalars reset to the lifted norms
            _, dz_next = gmp_iterate(sp, dz)
            p = lift(dz_next, m)
            E = residual_E(sp, p)
            enorm = np.linalg.norm(E)


def solve_cubic_subproblem(sp, mode="exact", kappa_m=None, grad_norm_ref=None,
                           gmp_budget=500, ssn_budget=200, gamma_switch=None,
                           gmp_check_every=5):
    """Mirror-prox warm start followed by the semismooth Newton finisher.

    The switch fires once the cone residual at the lifted running average
    drops below gamma_switch (default max(1e-2, 1e-2 ||g||)).  In exact mode
    the returned solution also reports the optimality residual of the
    quadratic-plus-cubic stationarity system.
    """
    gnorm = np.linalg.norm(sp.g)
    if grad_norm_ref is None:
        grad_norm_ref = gnorm
    if gnorm == 0.0:
        return SubproblemSolution(
            dz=np.zeros(sp.dim), model_grad_norm=0.0, gmp_iters=0, ssn_iters=0,
            status=mode, optimality_residual=0.0)
    if gamma_switch is None:
        gamma_switch = max(1e-2, 1e-2 * gnorm)
    warm = gmp_solve(sp, np.zeros(sp.dim), max_iters=gmp_budget,
                     switch_tol=gamma_switch, switch_norm="cone_residual",
                     check_every=gmp_check_every)
    sol = ssn_solve(sp, lift(warm.dz, sp.m), mode=mode, kappa_m=kappa_m,
                    grad_norm_ref=grad_norm_ref, budget=ssn_budget,
                    min_steps=1)
    sol.gmp_iters = warm.iterations
    if mode == "exact" and sol.status != "budget_exhausted":
        r = model_gradient(sp, sol.dz)
        r[sp.m :] = -r[sp.m :]
        sol.optimality_residual = float(np.linalg.norm(r))
    return sol
