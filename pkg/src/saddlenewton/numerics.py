"""Dense linear-algebra kernels: direct solves, restarted GMRES, norm
estimates, and finite-difference oracles used by the test suite."""

import numpy as np

from . import _kernels


class SingularMatrixError(ValueError):
    """Raised when elimination meets a pivot below the singularity threshold."""

    def __init__(self, pivot_index):
        self.pivot_index = pivot_index
        super().__init__(f"matrix singular to tolerance at pivot {pivot_index}")


def direct_solve(A, rhs):
    """Solve A x = rhs by partially pivoted elimination.

    Raises SingularMatrixError when a pivot falls below 1e-14 * max|A|.
    """
    A = np.asarray(A, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected square matrix, got shape {A.shape}")
    if rhs.shape != (A.shape[0],):
        raise ValueError(f"rhs length {rhs.shape} does not match matrix {A.shape}")
    x, fail = _kernels.lu_solve(np.ascontiguousarray(A), np.ascontiguousarray(rhs))
    if fail >= 0:
        raise SingularMatrixError(int(fail))
    return x


def krylov_solve(apply, rhs, tol=1e-10, restart=50, max_iters=500):
    """Restarted GMRES for a square system given as a matrix or matvec map.

    Returns (solution, residual_norm) where residual_norm is the true
    ||A x - rhs||.  Stops once the residual drops below tol * ||rhs|| or the
    total inner-iteration budget is spent; a zero Arnoldi norm (breakdown)
    ends the current cycle with the subspace solution.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rhs = np.asarray(rhs, dtype=np.float64)
    if callable(apply):
        matvec = apply
    else:
        mat = np.asarray(apply, dtype=np.float64)
        if mat.shape != (rhs.size, rhs.size):
            raise ValueError(f"matrix {mat.shape} does not match rhs {rhs.shape}")
        matvec = lambda v: mat @ v

    n = rhs.size
    x = np.zeros(n)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return x, 0.0
    target = tol * bnorm
    done = 0
    while done < max_iters:
        r = rhs - matvec(x)
        beta = np.linalg.norm(r)
        if beta <= target:
            return x, beta
        k_max = min(restart, n, max_iters - done)
        V = np.zeros((k_max + 1, n))
        Hm = np.zeros((k_max + 1, k_max))
        cs = np.zeros(k_max)
        sn = np.zeros(k_max)
        gamma = np.zeros(k_max + 1)
        gamma[0] = beta
        V[0] = r / beta
        j = -1
        for j in range(k_max):
            w = matvec(V[j])
            for i in range(j + 1):
                Hm[i, j] = V[i] @ w
                w -= Hm[i, j] * V[i]
            Hm[j + 1, j] = np.linalg.norm(w)
            breakdown = Hm[j + 1, j] <= 1e-14 * beta
            if not breakdown:
                V[j + 1] = w / Hm[j + 1, j]
            for i in range(j):
                hi = cs[i] * Hm[i, j] + sn[i] * Hm[i + 1, j]
                Hm[i + 1, j] = -sn[i] * Hm[i, j] + cs[i] * Hm[i + 1, j]
                Hm[i, j] = hi
            denom = np.hypot(Hm[j, j], Hm[j + 1, j])
            cs[j] = Hm[j, j] / denom
            sn[j] = Hm[j + 1, j] / denom
            Hm[j, j] = denom
            gamma[j + 1] = -sn[j] * gamma[j]
            gamma[j] = cs[j] * gamma[j]
            done += 1
            if abs(gamma[j + 1]) <= target or breakdown or done >= max_iters:
                break
        y = np.zeros(j + 1)
        for i in range(j, -1, -1):
            y[i] = (gamma[i] - Hm[i, i + 1 : j + 1] @ y[i + 1 : j + 1]) / Hm[i, i]
        x = x + V[: j + 1].T @ y
        res = np.linalg.norm(rhs - matvec(x))
        if res <= target:
            return x, res
    return x, np.linalg.norm(rhs - matvec(x))


def spectral_norm(apply, dim=None, iters=100):
    """Largest singular value via power iteration on A^T A.

    `apply` is a dense matrix, or a (matvec, rmatvec) pair with `dim` given.
    The estimate approaches the true norm from below.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if isinstance(apply, np.ndarray) or not callable(apply):
        mat = np.asarray(apply, dtype=np.float64)
        dim = mat.shape[1]
        matvec = lambda v: mat @ v
        rmatvec = lambda v: mat.T @ v
    else:
        matvec, rmatvec = apply
        if dim is None:
            raise ValueError("dim required for callable input")
    v = np.ones(dim) + 1e-3 * np.arange(dim)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        w = matvec(v)
        sigma = np.linalg.norm(w)
        if sigma == 0.0:
            return 0.0
        v = rmatvec(w)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return sigma
        v /= nv
    return np.linalg.norm(matvec(v))


def finite_diff_gradient(fn, at, h=1e-6):
    """Central-difference gradient of a scalar function."""
    at = np.asarray(at, dtype=np.float64)
    g = np.zeros_like(at)
    for i in range(at.size):
        e = np.zeros_like(at)
        e[i] = h
        g[i] = (fn(at + e) - fn(at - e)) / (2.0 * h)
    return g


def finite_diff_jacobian(fn, at, h=1e-6):
    """Central-difference Jacobian of a vector-valued function."""
    at = np.asarray(at, dtype=np.float64)
    f0 = np.asarray(fn(at), dtype=np.float64)
    J = np.zeros((f0.size, at.size))
    for i in range(at.size):
        e = np.zeros_like(at)
        e[i] = h
        J[:, i] = (np.asarray(fn(at + e)) - np.asarray(fn(at - e))) / (2.0 * h)
    return J
