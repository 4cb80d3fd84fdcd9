"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The inner loops that dominate solver runtime live here: the cubic prox map,
second-order-cone projections, the mirror-prox sweep over the cubic model,
the cone-residual evaluation used by the semismooth Newton loop, and the
partially pivoted LU solve backing small dense Newton systems.

Backend selection: numba is used when importable unless the environment
variable ``SADDLENEWTON_NUMBA`` is set to ``0``/``false``/``off``.  Both
backends are kept importable (``*_py`` / ``*_nb``) so the benchmark in
``benchmarks/bench_kernels.py`` and the tests can compare them directly.
"""

import os

import numpy as np

__all__ = [
    "BACKEND",
    "cubic_prox",
    "soc_project_pair",
    "gmp_chunk",
    "cone_residual",
    "lu_solve",
    "kernel_backend",
]


def _numba_enabled():
    flag = os.environ.get("SADDLENEWTON_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _cubic_prox_py(v, ell, rho):
    nv = np.sqrt(np.dot(v, v))
    if nv == 0.0:
        return np.zeros_like(v)
    lam = 2.0 * ell / (ell + np.sqrt(ell * ell + 24.0 * rho * nv * ell))
    return lam * v


def _soc_project_pair_py(w, m, n):
    out = np.zeros_like(w)
    nx = np.sqrt(np.dot(w[:m], w[:m]))
    wu = w[m]
    if wu >= nx:
        out[: m + 1] = w[: m + 1]
    elif wu > -nx:
        a = 0.5 * (1.0 + wu / nx)
        out[:m] = a * w[:m]
        out[m] = a * nx
    ny = np.sqrt(np.dot(w[m + 1 : m + 1 + n], w[m + 1 : m + 1 + n]))
    wv = w[m + 1 + n]
    if wv >= ny:
        out[m + 1 :] = w[m + 1 :]
    elif wv > -ny:
        a = 0.5 * (1.0 + wv / ny)
        out[m + 1 : m + 1 + n] = a * w[m + 1 : m + 1 + n]
        out[m + 1 + n] = a * ny
    return out


def _gmp_chunk_py(g, H, rho, ell, m, dz, half_sum, iters):
    # Mirror-prox sweep on the cubic model: both prox centers of the full
    # step stay at dz_j, only the gradient point moves to the half step.
    inv = 1.0 / ell
    for _ in range(iters):
        hdz = H @ dz
        vx = dz[:m] - (g[:m] + hdz[:m]) * inv
        vy = dz[m:] + (g[m:] + hdz[m:]) * inv
        hx = _cubic_prox_py(vx, ell, rho)
        hy = _cubic_prox_py(vy, ell, rho)
        half_sum[:m] += hx
        half_sum[m:] += hy
        hdh = H[:, :m] @ hx + H[:, m:] @ hy
        vx = dz[:m] - (g[:m] + hdh[:m]) * inv
        vy = dz[m:] + (g[m:] + hdh[m:]) * inv
        dz[:m] = _cubic_prox_py(vx, ell, rho)
        dz[m:] = _cubic_prox_py(vy, ell, rho)


def _cone_residual_py(g, H, rho, m, n, p):
    dz = np.concatenate((p[:m], p[m + 1 : m + 1 + n]))
    hdz = H @ dz
    w = np.empty_like(p)
    w[:m] = p[:m] - (g[:m] + hdz[:m])
    w[m] = p[m] - 6.0 * rho * p[m] * p[m]
    w[m + 1 : m + 1 + n] = p[m + 1 : m + 1 + n] + (g[m:] + hdz[m:])
    w[m + 1 + n] = p[m + 1 + n] - 6.0 * rho * p[m + 1 + n] * p[m + 1 + n]
    return p - _soc_project_pair_py(w, m, n)


def _lu_solve_py(A, b):
    n = A.shape[0]
    U = A.copy()
    x = b.astype(np.float64).copy()
    tol = 1e-14 * np.max(np.abs(A)) if n else 0.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(U[k:, k])))
        if abs(U[p, k]) <= tol:
            return x, k
        if p != k:
            tmp = U[k].copy()
            U[k] = U[p]
            U[p] = tmp
            x[k], x[p] = x[p], x[k]
        mult = U[k + 1 :, k] / U[k, k]
        U[k + 1 :, k + 1 :] -= np.outer(mult, U[k, k + 1 :])
        x[k + 1 :] -= mult * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - np.dot(U[k, k + 1 :], x[k + 1 :])) / U[k, k]
    return x, -1


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

_NUMBA_OK = _numba_enabled()

if _NUMBA_OK:
    from numba import njit

    @njit(cache=True)
    def _cubic_prox_nb(v, ell, rho):
        nv = 0.0
        for i in range(v.shape[0]):
            nv += v[i] * v[i]
        nv = np.sqrt(nv)
        out = np.zeros_like(v)
        if nv == 0.0:
            return out
        lam = 2.0 * ell / (ell + np.sqrt(ell * ell + 24.0 * rho * nv * ell))
        for i in range(v.shape[0]):
            out[i] = lam * v[i]
        return out

    @njit(cache=True)
    def _soc_project_pair_nb(w, m, n):
        out = np.zeros_like(w)
        nx = 0.0
        for i in range(m):
            nx += w[i] * w[i]
        nx = np.sqrt(nx)
        wu = w[m]
        if wu >= nx:
            for i in range(m + 1):
                out[i] = w[i]
        elif wu > -nx:
            a = 0.5 * (1.0 + wu / nx)
            for i in range(m):
                out[i] = a * w[i]
            out[m] = a * nx
        ny = 0.0
        for i in range(m + 1, m + 1 + n):
            ny += w[i] * w[i]
        ny = np.sqrt(ny)
        wv = w[m + 1 + n]
        if wv >= ny:
            for i in range(m + 1, m + 2 + n):
                out[i] = w[i]
        elif wv > -ny:
            a = 0.5 * (1.0 + wv / ny)
            for i in range(m + 1, m + 1 + n):
                out[i] = a * w[i]
            out[m + 1 + n] = a * ny
        return out

    @njit(cache=True)
    def _gmp_chunk_nb(g, H, rho, ell, m, dz, half_sum, iters):
        d = dz.shape[0]
        inv = 1.0 / ell
        v = np.empty(d)
        half = np.empty(d)
        for _ in range(iters):
            hdz = np.dot(H, dz)
            for i in range(m):
                v[i] = dz[i] - (g[i] + hdz[i]) * inv
            for i in range(m, d):
                v[i] = dz[i] + (g[i] + hdz[i]) * inv
            hx = _cubic_prox_nb(v[:m], ell, rho)
            hy = _cubic_prox_nb(v[m:], ell, rho)
            for i in range(m):
                half[i] = hx[i]
                half_sum[i] += hx[i]
            for i in range(m, d):
                half[i] = hy[i - m]
                half_sum[i] += hy[i - m]
            hdh = np.dot(H, half)
            for i in range(m):
                v[i] = dz[i] - (g[i] + hdh[i]) * inv
            for i in range(m, d):
                v[i] = dz[i] + (g[i] + hdh[i]) * inv
            nx = _cubic_prox_nb(v[:m], ell, rho)
            ny = _cubic_prox_nb(v[m:], ell, rho)
            for i in range(m):
                dz[i] = nx[i]
            for i in range(m, d):
                dz[i] = ny[i - m]

    @njit(cache=True)
    def _cone_residual_nb(g, H, rho, m, n, p):
        d = m + n
        dz = np.empty(d)
        for i in range(m):
            dz[i] = p[i]
        for i in range(n):
            dz[m + i] = p[m + 1 + i]
        hdz = np.dot(H, dz)
        w = np.empty(d + 2)
        for i in range(m):
            w[i] = p[i] - (g[i] + hdz[i])
        w[m] = p[m] - 6.0 * rho * p[m] * p[m]
        for i in range(n):
            w[m + 1 + i] = p[m + 1 + i] + (g[m + i] + hdz[m + i])
        w[d + 1] = p[d + 1] - 6.0 * rho * p[d + 1] * p[d + 1]
        return p - _soc_project_pair_nb(w, m, n)

    @njit(cache=True)
    def _lu_solve_nb(A, b):
        n = A.shape[0]
        U = A.copy()
        x = b.copy()
        tol = 0.0
        for i in range(n):
            for j in range(n):
                a = abs(U[i, j])
                if a > tol:
                    tol = a
        tol *= 1e-14
        for k in range(n):
            p = k
            best = abs(U[k, k])
            for i in range(k + 1, n):
                a = abs(U[i, k])
                if a > best:
                    best = a
                    p = i
            if best <= tol:
                return x, k
            if p != k:
                for j in range(n):
                    tmp = U[k, j]
                    U[k, j] = U[p, j]
                    U[p, j] = tmp
                tmp = x[k]
                x[k] = x[p]
                x[p] = tmp
            piv = U[k, k]
            for i in range(k + 1, n):
                mult = U[i, k] / piv
                if mult != 0.0:
                    for j in range(k + 1, n):
                        U[i, j] -= mult * U[k, j]
                    x[i] -= mult * x[k]
        for k in range(n - 1, -1, -1):
            acc = x[k]
            for j in range(k + 1, n):
                acc -= U[k, j] * x[j]
            x[k] = acc / U[k, k]
        return x, -1


if _NUMBA_OK:
    BACKEND = "numba"
    cubic_prox = _cubic_prox_nb
    soc_project_pair = _soc_project_pair_nb
    gmp_chunk = _gmp_chunk_nb
    cone_residual = _cone_residual_nb
    lu_solve = _lu_solve_nb
else:
    BACKEND = "numpy"
    cubic_prox = _cubic_prox_py
    soc_project_pair = _soc_project_pair_py
    gmp_chunk = _gmp_chunk_py
    cone_residual = _cone_residual_py
    lu_solve = _lu_solve_py


def kernel_backend():
    """Name of the active kernel backend ("numba" or "numpy")."""
    return BACKEND
