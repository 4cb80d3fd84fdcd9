"""Concrete saddle-point problem instances and dataset ingestion.

Contains the cubic regularized bilinear benchmark family, seeded
convex-concave quadratics (test fixtures), generalized-linear finite sums,
the AUC max-margin formulation over labeled feature vectors, and a LIBSVM
text-format reader/writer with min-max feature scaling.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .core import JointPoint, SaddleProblem


# ---------------------------------------------------------------------------
# cubic regularized bilinear family
# ---------------------------------------------------------------------------

class CubicBilinearProblem(SaddleProblem):
    """f(x, y) = (rho/6) ||x||^3 + y^T (A x - b) on R^n x R^n.

    A is upper bidiagonal with unit diagonal and -1 superdiagonal; b has
    i.i.d. uniform [-1, 1] entries drawn from the seeded generator.  The
    unique saddle point is x* = A^{-1} b, y* = -(rho/2)||x*|| (A^T)^{-1} x*.
    """

    def __init__(self, n, rho, seed):
        if n < 1:
            raise ValueError("n must be >= 1")
        if rho <= 0:
            raise ValueError("rho must be positive")
        self.m = n
        self.n = n
        self.rho = float(rho)
        self.seed = seed  # int or a spawned SeedSequence
        rng = np.random.default_rng(np.random.PCG64(seed))
        self.b = rng.uniform(-1.0, 1.0, size=n)
        A = np.eye(n)
        A[np.arange(n - 1), np.arange(1, n)] = -1.0
        self.A = A

    def value(self, z):
        x, y = z[: self.m], z[self.m :]
        return self.rho / 6.0 * np.linalg.norm(x) ** 3 + y @ (self.A @ x - self.b)

    def gradient(self, z):
        x, y = z[: self.m], z[self.m :]
        gx = 0.5 * self.rho * np.linalg.norm(x) * x + self.A.T @ y
        gy = self.A @ x - self.b
        return np.concatenate((gx, gy))

    def hessian(self, z):
        d = self.m + self.n
        H = np.zeros((d, d))
        x = z[: self.m]
        nx = np.linalg.norm(x)
        if nx > 0:
            H[: self.m, : self.m] = 0.5 * self.rho * (
                nx * np.eye(self.m) + np.outer(x, x) / nx
            )
        H[: self.m, self.m :] = self.A.T
        H[self.m :, : self.m] = self.A
        return H

    def saddle(self):
        # Back-substitution on the upper bidiagonal A, then forward
        # substitution on A^T.
        n = self.m
        x = np.zeros(n)
        x[n - 1] = self.b[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = self.b[i] + x[i + 1]
        w = np.zeros(n)
        w[0] = x[0]
        for i in range(1, n):
            w[i] = x[i] + w[i - 1]
        y = -0.5 * self.rho * np.linalg.norm(x) * w
        return np.concatenate((x, y))

    def gap_max_y(self, x_hat, y_center, beta):
        # f(x_hat, .) is linear in y: the ball max is reached on the boundary
        # along A x_hat - b.
        r = self.A @ x_hat - self.b
        return (
            self.rho / 6.0 * np.linalg.norm(x_hat) ** 3
            + y_center @ r
            + beta * np.linalg.norm(r)
        )


def make_cubic_bilinear(n, rho, seed):
    return CubicBilinearProblem(n, rho, seed)


def cubic_bilinear_saddle(inst):
    z = inst.saddle()
    return JointPoint(inst.m, inst.n, z)


# ---------------------------------------------------------------------------
# seeded convex-concave quadratic (test fixture)
# ---------------------------------------------------------------------------

class RandomCCQuadratic(SaddleProblem):
    """f = 0.5 (x-x0)^T P (x-x0) + (x-x0)^T Q (y-y0) - 0.5 (y-y0)^T R (y-y0).

    P and R come from seeded Gram factors (positive semidefinite, almost
    surely definite); the saddle point is (x0, y0), recoverable by solving
    the linear system F(z) = M (z - z0) = 0.
    """

    def __init__(self, m, n, seed, shifted=True):
        if m < 1 or n < 1:
            raise ValueError("dimensions must be >= 1")
        self.m, self.n = int(m), int(n)
        rng = np.random.default_rng(np.random.PCG64(seed))
        Gp = rng.standard_normal((m, m))
        Gr = rng.standard_normal((n, n))
        self.P = Gp.T @ Gp / m
        self.R = Gr.T @ Gr / n
        self.Q = rng.standard_normal((m, n)) / np.sqrt(m * n)
        if shifted:
            self.z0 = rng.standard_normal(m + n)
        else:
            self.z0 = np.zeros(m + n)

    def _d(self, z):
        return z - self.z0

    def value(self, z):
        d = self._d(z)
        dx, dy = d[: self.m], d[self.m :]
        return 0.5 * dx @ self.P @ dx + dx @ self.Q @ dy - 0.5 * dy @ self.R @ dy

    def gradient(self, z):
        d = self._d(z)
        dx, dy = d[: self.m], d[self.m :]
        return np.concatenate((self.P @ dx + self.Q @ dy, self.Q.T @ dx - self.R @ dy))

    def hessian(self, z):
        top = np.hstack((self.P, self.Q))
        bot = np.hstack((self.Q.T, -self.R))
        return np.vstack((top, bot))

    def saddle(self):
        return self.z0.copy()


def make_random_cc_quadratic(m, n, seed, shifted=True):
    return RandomCCQuadratic(m, n, seed, shifted=shifted)


# ---------------------------------------------------------------------------
# LIBSVM text format
# ---------------------------------------------------------------------------

class LibsvmFormatError(ValueError):
    def __init__(self, message, line_no):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass
class LibsvmDataset:
    """Sparse rows in CSR layout with labels in {-1, +1}; indices 0-based."""

    name: str
    n_features: int
    labels: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    @property
    def N(self):
        return self.labels.size

    @property
    def empty(self):
        return self.N == 0

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.values[lo:hi]

    def to_dense(self):
        X = np.zeros((self.N, self.n_features))
        for i in range(self.N):
            idx, vals = self.row(i)
            X[i, idx] = vals
        return X

    def positive_fraction(self):
        if self.N == 0:
            return 0.0
        return float(np.count_nonzero(self.labels > 0)) / self.N


def parse_libsvm(path, name=None):
    """Parse a LIBSVM text file: each line is `label idx:val idx:val ...`
    with strictly increasing 1-based indices.  Nonpositive labels map to -1,
    positive to +1.  Malformed lines raise LibsvmFormatError with the line
    number."""
    labels = []
    indptr = [0]
    indices = []
    values = []
    n_features = 0
    with open(path, "r") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            try:
                lab = float(toks[0])
            except ValueError:
                raise LibsvmFormatError(f"bad label token {toks[0]!r}", line_no)
            labels.append(1.0 if lab > 0 else -1.0)
            prev = 0
            for tok in toks[1:]:
                parts = tok.split(":")
                if len(parts) != 2:
                    raise LibsvmFormatError(f"bad feature token {tok!r}", line_no)
                try:
                    idx = int(parts[0])
                    val = float(parts[1])
                except ValueError:
                    raise LibsvmFormatError(f"bad feature token {tok!r}", line_no)
                if idx < 1:
                    raise LibsvmFormatError(f"feature index {idx} < 1", line_no)
                if idx <= prev:
                    raise LibsvmFormatError(
                        f"feature index {idx} not increasing", line_no
                    )
                prev = idx
                indices.append(idx - 1)
                values.append(val)
                n_features = max(n_features, idx)
            indptr.append(len(indices))
    return LibsvmDataset(
        name=name or str(path),
        n_features=n_features,
        labels=np.asarray(labels, dtype=np.float64),
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        values=np.asarray(values, dtype=np.float64),
    )


def write_libsvm(ds, path):
    """Serialize back to LIBSVM text (1-based indices, full float precision)."""
    with open(path, "w") as fh:
        for i in range(ds.N):
            idx, vals = ds.row(i)
            toks = ["%+d" % int(ds.labels[i])]
            toks += ["%d:%.17g" % (j + 1, v) for j, v in zip(idx, vals)]
            fh.write(" ".join(toks) + "\n")


@dataclass
class FeatureScaling:
    """Sidecar metadata for a min-max scaled dataset."""

    mins: np.ndarray
    maxs: np.ndarray
    p_hat: float
    N: int
    n_features: int

    def to_json(self):
        return json.dumps(
            {
                "mins": self.mins.tolist(),
                "maxs": self.maxs.tolist(),
                "p_hat": self.p_hat,
                "N": self.N,
                "n_features": self.n_features,
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            mins=np.asarray(d["mins"], dtype=np.float64),
            maxs=np.asarray(d["maxs"], dtype=np.float64),
            p_hat=float(d["p_hat"]),
            N=int(d["N"]),
            n_features=int(d["n_features"]),
        )


def scale_features(ds):
    """Min-max scale every feature column into [0, 1]; constant columns map
    to 0.  Implicit zeros count toward the column ranges.  Returns the scaled
    dataset and the scaling metadata."""
    if ds.N < 1:
        raise ValueError("cannot scale an empty dataset")
    p = ds.n_features
    counts = np.zeros(p, dtype=np.int64)
    mins = np.full(p, np.inf)
    maxs = np.full(p, -np.inf)
    for i in range(ds.N):
        idx, vals = ds.row(i)
        counts[idx] += 1
        np.minimum.at(mins, idx, vals)
        np.maximum.at(maxs, idx, vals)
    absent = counts == 0
    mins[absent] = 0.0
    maxs[absent] = 0.0
    has_implicit_zero = counts < ds.N
    mins = np.where(has_implicit_zero, np.minimum(mins, 0.0), mins)
    maxs = np.where(has_implicit_zero, np.maximum(maxs, 0.0), maxs)
    span = maxs - mins
    ok = span > 0
    fill = np.zeros(p)
    fill[ok] = (0.0 - mins[ok]) / span[ok]
    fill[~has_implicit_zero] = 0.0
    fill_cols = np.where(fill != 0.0)[0]

    indptr = [0]
    indices = []
    values = []
    for i in range(ds.N):
        idx, vals = ds.row(i)
        scaled = np.zeros_like(vals)
        okr = ok[idx]
        scaled[okr] = (vals[okr] - mins[idx][okr]) / span[idx][okr]
        if fill_cols.size:
            extra = np.setdiff1d(fill_cols, idx, assume_unique=False)
            all_idx = np.concatenate((idx, extra))
            all_val = np.concatenate((scaled, fill[extra]))
            order = np.argsort(all_idx)
            all_idx, all_val = all_idx[order], all_val[order]
        else:
            all_idx, all_val = idx, scaled
        keep = all_val != 0.0
        indices.extend(all_idx[keep].tolist())
        values.extend(all_val[keep].tolist())
        indptr.append(len(indices))

    scaled_ds = LibsvmDataset(
        name=ds.name + ":scaled",
        n_features=p,
        labels=ds.labels.copy(),
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        values=np.asarray(values, dtype=np.float64),
    )
    meta = FeatureScaling(
        mins=mins, maxs=maxs, p_hat=ds.positive_fraction(), N=ds.N, n_features=p
    )
    return scaled_ds, meta


def save_scaled(ds, meta, path):
    write_libsvm(ds, path)
    with open(str(path) + ".meta.json", "w") as fh:
        fh.write(meta.to_json())


def subset_dataset(ds, k, seed=0):
    """Seeded subsample of k rows (without replacement, original order kept)."""
    if k >= ds.N:
        return ds
    rng = np.random.default_rng(np.random.PCG64(seed))
    keep = np.sort(rng.choice(ds.N, size=k, replace=False))
    indptr = [0]
    indices = []
    values = []
    for i in keep:
        idx, vals = ds.row(i)
        indices.extend(idx.tolist())
        values.extend(vals.tolist())
        indptr.append(len(indices))
    return LibsvmDataset(
        name=f"{ds.name}:subset{k}",
        n_features=ds.n_features,
        labels=ds.labels[keep].copy(),
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        values=np.asarray(values, dtype=np.float64),
    )


def synthetic_binary_dataset(n_rows, n_features=123, seed=0, pos_fraction=0.24,
                             density=(0.005, 0.06), boost=0.12):
    """Deterministic stand-in for an imbalanced binary LIBSVM dataset: sparse
    0/1 features with class-dependent activation rates.

    The default density keeps the objective gradient at the origin moderate,
    which is the regime where gradient-scaled sampling rules prescribe
    near-full batches; raise it to exercise small-sample behavior.
    """
    rng = np.random.default_rng(np.random.PCG64(seed))
    labels = np.where(rng.uniform(size=n_rows) < pos_fraction, 1.0, -1.0)
    base = rng.uniform(density[0], density[1], size=n_features)
    boost = rng.uniform(0.0, boost, size=n_features) * (
        rng.uniform(size=n_features) < 0.25
    )
    indptr = [0]
    indices = []
    values = []
    for i in range(n_rows):
        prob = base + (boost if labels[i] > 0 else 0.0)
        active = np.where(rng.uniform(size=n_features) < prob)[0]
        if i == 0 and (active.size == 0 or active[-1] != n_features - 1):
            active = np.unique(np.append(active, n_features - 1))
        indices.extend(active.tolist())
        values.extend([1.0] * active.size)
        indptr.append(len(indices))
    return LibsvmDataset(
        name=f"synthetic:{n_rows}x{n_features}",
        n_features=n_features,
        labels=labels,
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        values=np.asarray(values, dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# finite-sum problems
# ---------------------------------------------------------------------------

class FiniteSumProblem(SaddleProblem):
    """f(z) = (1/N) sum_i f_i(z) + deterministic_part(z).

    Subclasses provide the per-component evaluators; vectorized subset hooks
    may be overridden for speed.  The deterministic part is never sampled.
    """

    N = 0
    glm_data = None

    def component_value(self, z, i):
        raise NotImplementedError

    def component_gradient(self, z, i):
        raise NotImplementedError

    def component_hessian(self, z, i):
        raise NotImplementedError

    def deterministic_value(self, z):
        return 0.0

    def deterministic_gradient(self, z):
        return np.zeros(self.m + self.n)

    def deterministic_hessian(self, z):
        d = self.m + self.n
        return np.zeros((d, d))

    def component_hessian_bounds(self):
        """Per-component upper bounds B_i on ||hess f_i|| (None if unknown)."""
        return None

    def sum_hessian_subset(self, z, idx, coeff):
        """sum_j coeff[j] * hess f_{idx[j]}(z); generic loop implementation."""
        d = self.m + self.n
        H = np.zeros((d, d))
        for j, i in enumerate(idx):
            H += coeff[j] * self.component_hessian(z, int(i))
        return H

    def sum_gradient_subset(self, z, idx):
        """Mean component gradient over idx (uniform minibatch estimate)."""
        g = np.zeros(self.m + self.n)
        for i in idx:
            g += self.component_gradient(z, int(i))
        return g / len(idx)

    def value(self, z):
        total = sum(self.component_value(z, i) for i in range(self.N))
        return total / self.N + self.deterministic_value(z)

    def gradient(self, z):
        g = np.zeros(self.m + self.n)
        for i in range(self.N):
            g += self.component_gradient(z, i)
        return g / self.N + self.deterministic_gradient(z)

    def hessian(self, z):
        d = self.m + self.n
        H = np.zeros((d, d))
        for i in range(self.N):
            H += self.component_hessian(z, i)
        return H / self.N + self.deterministic_hessian(z)


@dataclass
class GlmData:
    """Per-component data (a_i, b_i) and the scalar-function second
    derivative for finite sums of the form f_i(a_i^T x, b_i^T y)."""

    a: np.ndarray  # (N, m)
    b: np.ndarray  # (N, n)
    phi2: object   # callable (s, t) -> (N, 2, 2) second derivatives

    def sq_norms(self):
        return (self.a * self.a).sum(axis=1) + (self.b * self.b).sum(axis=1)


class SyntheticGLMSum(FiniteSumProblem):
    """Seeded finite sum of scalar convex-concave quadratics
    phi_i(s, t) = 0.5 alpha_i s^2 + gamma_i s t - 0.5 beta_i t^2 composed
    with (a_i^T x, b_i^T y); heterogeneous component scales make nonuniform
    sampling informative."""

    def __init__(self, N, m, n, seed, scale_spread=3.0, scale=1.0):
        self.N = int(N)
        self.m, self.n = int(m), int(n)
        rng = np.random.default_rng(np.random.PCG64(seed))
        a = scale * rng.standard_normal((N, m))
        b = scale * rng.standard_normal((N, n))
        mags = np.exp(rng.uniform(-scale_spread, 0.0, size=N))
        a *= mags[:, None]
        self.alpha = rng.uniform(0.2, 1.0, size=N)
        self.beta = rng.uniform(0.2, 1.0, size=N)
        self.gamma = rng.uniform(-0.5, 0.5, size=N)

        def phi2(s, t):
            out = np.empty((self.N, 2, 2))
            out[:, 0, 0] = self.alpha
            out[:, 0, 1] = self.gamma
            out[:, 1, 0] = self.gamma
            out[:, 1, 1] = -self.beta
            return out

        self.glm_data = GlmData(a=a, b=b, phi2=phi2)

    def _st(self, z):
        return self.glm_data.a @ z[: self.m], self.glm_data.b @ z[self.m :]

    def component_value(self, z, i):
        s = self.glm_data.a[i] @ z[: self.m]
        t = self.glm_data.b[i] @ z[self.m :]
        return 0.5 * self.alpha[i] * s * s + self.gamma[i] * s * t - 0.5 * self.beta[i] * t * t

    def component_gradient(self, z, i):
        a, b = self.glm_data.a[i], self.glm_data.b[i]
        s = a @ z[: self.m]
        t = b @ z[self.m :]
        gs = self.alpha[i] * s + self.gamma[i] * t
        gt = self.gamma[i] * s - self.beta[i] * t
        return np.concatenate((gs * a, gt * b))

    def component_hessian(self, z, i):
        a, b = self.glm_data.a[i], self.glm_data.b[i]
        d = self.m + self.n
        H = np.zeros((d, d))
        H[: self.m, : self.m] = self.alpha[i] * np.outer(a, a)
        H[: self.m, self.m :] = self.gamma[i] * np.outer(a, b)
        H[self.m :, : self.m] = self.gamma[i] * np.outer(b, a)
        H[self.m :, self.m :] = -self.beta[i] * np.outer(b, b)
        return H

    def component_hessian_bounds(self):
        # ||D_i phi'' D_i^T|| <= ||phi''|| (||a_i||^2 + ||b_i||^2); the 2x2
        # norm has a closed form.
        half_tr = 0.5 * (self.alpha - self.beta)
        rad = np.sqrt(0.25 * (self.alpha + self.beta) ** 2 + self.gamma**2)
        phi_norm = np.abs(half_tr) + rad
        return phi_norm * self.glm_data.sq_norms()

    def sum_hessian_subset(self, z, idx, coeff):
        a = self.glm_data.a[idx]
        b = self.glm_data.b[idx]
        ca = coeff * self.alpha[idx]
        cg = coeff * self.gamma[idx]
        cb = coeff * self.beta[idx]
        d = self.m + self.n
        H = np.zeros((d, d))
        H[: self.m, : self.m] = (a * ca[:, None]).T @ a
        H[: self.m, self.m :] = (a * cg[:, None]).T @ b
        H[self.m :, : self.m] = H[: self.m, self.m :].T
        H[self.m :, self.m :] = -(b * cb[:, None]).T @ b
        return H

    def value(self, z):
        s, t = self._st(z)
        return float(
            np.mean(0.5 * self.alpha * s * s + self.gamma * s * t - 0.5 * self.beta * t * t)
        )

    def gradient(self, z):
        s, t = self._st(z)
        gs = self.alpha * s + self.gamma * t
        gt = self.gamma * s - self.beta * t
        return np.concatenate(
            (self.glm_data.a.T @ gs / self.N, self.glm_data.b.T @ gt / self.N)
        )

    def hessian(self, z):
        return self.sum_hessian_subset(z, np.arange(self.N), np.full(self.N, 1.0 / self.N))

    def saddle(self):
        # no linear term: the unique saddle sits at the origin
        return np.zeros(self.m + self.n)


class QuadraticFiniteSum(FiniteSumProblem):
    """Small seeded finite sum of dense convex-concave quadratics; used for
    Monte-Carlo unbiasedness checks where component Hessians differ freely."""

    def __init__(self, N, m, n, seed):
        self.N = int(N)
        self.m, self.n = int(m), int(n)
        rng = np.random.default_rng(np.random.PCG64(seed))
        self._H = []
        d = m + n
        for _ in range(N):
            Gp = rng.standard_normal((m, m)) / np.sqrt(m)
            Gr = rng.standard_normal((n, n)) / np.sqrt(n)
            Q = rng.standard_normal((m, n)) / np.sqrt(d)
            H = np.zeros((d, d))
            H[:m, :m] = Gp.T @ Gp
            H[m:, m:] = -Gr.T @ Gr
            H[:m, m:] = Q
            H[m:, :m] = Q.T
            self._H.append(H)
        self._c = rng.standard_normal((N, d))

    def component_value(self, z, i):
        return 0.5 * z @ self._H[i] @ z + self._c[i] @ z

    def component_gradient(self, z, i):
        return self._H[i] @ z + self._c[i]

    def component_hessian(self, z, i):
        return self._H[i].copy()

    def component_hessian_bounds(self):
        return np.array([np.linalg.norm(H, 2) for H in self._H])

    def saddle(self):
        Hbar = sum(self._H) / self.N
        cbar = self._c.mean(axis=0)
        return np.linalg.solve(Hbar, -cbar)


# ---------------------------------------------------------------------------
# AUC maximization
# ---------------------------------------------------------------------------

class AUCProblem(FiniteSumProblem):
    """Min-max AUC surrogate over x = (theta, u, v) and scalar y.

    The sampled components carry the per-row quadratic losses and the y
    coupling; the cubic term (rho/6)||x||^3 and the -p(1-p) y^2 term live in
    the deterministic part so subsampling never touches them.
    """

    def __init__(self, ds, rho):
        if ds.N < 1:
            raise ValueError("dataset must contain at least one row")
        self.dataset = ds
        self.rho = float(rho)
        self.N = ds.N
        self.p = ds.n_features
        self.m = self.p + 2  # theta, u, v
        self.n = 1
        self.feat = ds.to_dense()
        self.lab = ds.labels.copy()
        self.pos = self.lab > 0
        self.p_hat = ds.positive_fraction()
        self.degenerate = self.p_hat in (0.0, 1.0)
        if self.degenerate:
            warnings.warn("single-class dataset: AUC problem is degenerate")
        # per-row loss weight and y-coupling coefficient
        self.w = np.where(self.pos, 1.0 - self.p_hat, self.p_hat)
        self.c = np.where(self.pos, -(1.0 - self.p_hat), self.p_hat)
        self._sum_hess = None

    def _split(self, z):
        theta = z[: self.p]
        u = z[self.p]
        v = z[self.p + 1]
        y = z[self.p + 2]
        return theta, u, v, y

    def _r(self, u, v):
        return np.where(self.pos, u, v)

    def value(self, z):
        theta, u, v, y = self._split(z)
        s = self.feat @ theta
        resid = s - self._r(u, v)
        total = np.mean(self.w * resid * resid + 2.0 * (1.0 + y) * s * self.c)
        return float(total + self.deterministic_value(z))

    def gradient(self, z):
        theta, u, v, y = self._split(z)
        s = self.feat @ theta
        resid = s - self._r(u, v)
        g = np.zeros(self.m + 1)
        g[: self.p] = 2.0 / self.N * (self.feat.T @ (self.w * resid + (1.0 + y) * self.c))
        g[self.p] = -2.0 / self.N * np.sum((self.w * resid)[self.pos])
        g[self.p + 1] = -2.0 / self.N * np.sum((self.w * resid)[~self.pos])
        g[self.p + 2] = 2.0 / self.N * np.sum(s * self.c)
        return g + self.deterministic_gradient(z)

    def hessian(self, z):
        if self._sum_hess is None:
            self._sum_hess = self.sum_hessian_subset(
                None, np.arange(self.N), np.full(self.N, 1.0 / self.N)
            )
        return self._sum_hess + self.deterministic_hessian(z)

    def deterministic_value(self, z):
        x = z[: self.m]
        y = z[self.m]
        return self.rho / 6.0 * np.linalg.norm(x) ** 3 - self.p_hat * (1 - self.p_hat) * y * y

    def deterministic_gradient(self, z):
        x = z[: self.m]
        y = z[self.m]
        g = np.zeros(self.m + 1)
        g[: self.m] = 0.5 * self.rho * np.linalg.norm(x) * x
        g[self.m] = -2.0 * self.p_hat * (1 - self.p_hat) * y
        return g

    def deterministic_hessian(self, z):
        d = self.m + 1
        H = np.zeros((d, d))
        x = z[: self.m]
        nx = np.linalg.norm(x)
        if nx > 0:
            H[: self.m, : self.m] = 0.5 * self.rho * (nx * np.eye(self.m) + np.outer(x, x) / nx)
        H[self.m, self.m] = -2.0 * self.p_hat * (1 - self.p_hat)
        return H

    def component_value(self, z, i):
        theta, u, v, y = self._split(z)
        s = self.feat[i] @ theta
        r = u if self.pos[i] else v
        return self.w[i] * (s - r) ** 2 + 2.0 * (1.0 + y) * s * self.c[i]

    def component_gradient(self, z, i):
        theta, u, v, y = self._split(z)
        a = self.feat[i]
        s = a @ theta
        r = u if self.pos[i] else v
        g = np.zeros(self.m + 1)
        g[: self.p] = 2.0 * self.w[i] * (s - r) * a + 2.0 * (1.0 + y) * self.c[i] * a
        if self.pos[i]:
            g[self.p] = -2.0 * self.w[i] * (s - r)
        else:
            g[self.p + 1] = -2.0 * self.w[i] * (s - r)
        g[self.p + 2] = 2.0 * s * self.c[i]
        return g

    def component_hessian(self, z, i):
        return self.sum_hessian_subset(z, np.array([i]), np.array([1.0]))

    def sum_hessian_subset(self, z, idx, coeff):
        a = self.feat[idx]
        w = self.w[idx]
        c = self.c[idx]
        pos = self.pos[idx]
        d = self.m + 1
        H = np.zeros((d, d))
        cw = 2.0 * coeff * w
        H[: self.p, : self.p] = (a * cw[:, None]).T @ a
        hu = -(a * (cw * pos)[:, None]).sum(axis=0)
        hv = -(a * (cw * ~pos)[:, None]).sum(axis=0)
        hy = (a * (2.0 * coeff * c)[:, None]).sum(axis=0)
        H[: self.p, self.p] = hu
        H[self.p, : self.p] = hu
        H[: self.p, self.p + 1] = hv
        H[self.p + 1, : self.p] = hv
        H[: self.p, self.p + 2] = hy
        H[self.p + 2, : self.p] = hy
        H[self.p, self.p] = np.sum(cw * pos)
        H[self.p + 1, self.p + 1] = np.sum(cw * ~pos)
        return H

    def sum_gradient_subset(self, z, idx):
        theta, u, v, y = self._split(z)
        a = self.feat[idx]
        s = a @ theta
        r = np.where(self.pos[idx], u, v)
        w = self.w[idx]
        c = self.c[idx]
        k = len(idx)
        g = np.zeros(self.m + 1)
        g[: self.p] = 2.0 / k * (a.T @ (w * (s - r) + (1.0 + y) * c))
        g[self.p] = -2.0 / k * np.sum((w * (s - r))[self.pos[idx]])
        g[self.p + 1] = -2.0 / k * np.sum((w * (s - r))[~self.pos[idx]])
        g[self.p + 2] = 2.0 / k * np.sum(s * c)
        return g

    def component_hessian_bounds(self):
        # Sampled components are quadratic, so the bounds are global
        # constants: 2 w_i (||a_i||^2 + 1) for the loss block plus
        # 2 |c_i| ||a_i|| for the theta-y coupling (|c_i| = w_i).
        sq = (self.feat * self.feat).sum(axis=1)
        return 2.0 * self.w * (sq + 1.0 + np.sqrt(sq))

    def gap_max_y(self, x_hat, y_center, beta):
        # f(x_hat, .) is a concave quadratic in the scalar y.
        s = self.feat @ x_hat[: self.p]
        q1 = 2.0 / self.N * np.sum(s * self.c)
        q2 = self.p_hat * (1 - self.p_hat)
        lo, hi = y_center[0] - beta, y_center[0] + beta
        if q2 > 0:
            y_best = min(max(q1 / (2.0 * q2), lo), hi)
        else:
            y_best = hi if q1 > 0 else (lo if q1 < 0 else y_center[0])
        return self.value(np.concatenate((x_hat, [y_best])))


def make_auc_problem(ds, rho):
    return AUCProblem(ds, rho)
