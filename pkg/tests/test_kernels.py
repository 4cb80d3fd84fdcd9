"""Both kernel backends must agree; the active one follows the env flag."""

import numpy as np
import pytest

from saddlenewton import _kernels as K


rng = np.random.default_rng(42)


def test_backend_reports_a_known_name():
    assert K.kernel_backend() in ("numba", "numpy")


@pytest.mark.skipif(K.BACKEND != "numba", reason="numba backend not active")
class TestBackendAgreement:
    def test_cubic_prox(self):
        for _ in range(50):
            v = rng.standard_normal(rng.integers(1, 9))
            ell = float(rng.uniform(0.1, 5.0))
            rho = float(rng.uniform(0.0, 2.0))
            a = K._cubic_prox_py(v, ell, rho)
            b = K._cubic_prox_nb(np.ascontiguousarray(v), ell, rho)
            np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)

    def test_soc_project_pair(self):
        for _ in range(200):
            m, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            w = rng.standard_normal(m + n + 2) * 3.0
            a = K._soc_project_pair_py(w, m, n)
            b = K._soc_project_pair_nb(np.ascontiguousarray(w), m, n)
            np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)

    def test_gmp_chunk(self):
        for _ in range(20):
            m, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            d = m + n
            g = rng.standard_normal(d)
            A = rng.standard_normal((d, d))
            H = np.ascontiguousarray(0.5 * (A + A.T))
            dz1 = rng.standard_normal(d)
            dz2 = dz1.copy()
            s1 = np.zeros(d)
            s2 = np.zeros(d)
            K._gmp_chunk_py(g, H, 0.3, 2.0, m, dz1, s1, 7)
            K._gmp_chunk_nb(np.ascontiguousarray(g), H, 0.3, 2.0, m,
                            np.ascontiguousarray(dz2), s2, 7)
            np.testing.assert_allclose(dz1, dz2, rtol=1e-12, atol=1e-14)
            np.testing.assert_allclose(s1, s2, rtol=1e-12, atol=1e-14)

    def test_cone_residual(self):
        for _ in range(50):
            m, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            d = m + n
            g = rng.standard_normal(d)
            A = rng.standard_normal((d, d))
            H = np.ascontiguousarray(0.5 * (A + A.T))
            p = rng.standard_normal(d + 2)
            a = K._cone_residual_py(g, H, 0.2, m, n, p)
            b = K._cone_residual_nb(np.ascontiguousarray(g), H, 0.2, m, n,
                                    np.ascontiguousarray(p))
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)

    def test_lu_solve(self):
        for _ in range(30):
            d = int(rng.integers(1, 30))
            A = rng.standard_normal((d, d)) + d * np.eye(d)
            b = rng.standard_normal(d)
            xa, fa = K._lu_solve_py(A, b)
            xb, fb = K._lu_solve_nb(np.ascontiguousarray(A),
                                    np.ascontiguousarray(b))
            assert fa == fb == -1
            np.testing.assert_allclose(xa, xb, rtol=1e-12, atol=1e-13)

    def test_lu_singular_flag_matches(self):
        A = np.array([[1.0, 2.0], [2.0, 4.0]])
        b = np.ones(2)
        _, fa = K._lu_solve_py(A, b)
        _, fb = K._lu_solve_nb(np.ascontiguousarray(A), np.ascontiguousarray(b))
        assert fa == fb == 1
