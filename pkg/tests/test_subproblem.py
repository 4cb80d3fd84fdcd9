import math

import numpy as np
import pytest

import saddlenewton as sn
from saddlenewton.numerics import finite_diff_jacobian
from saddlenewton.subproblem import (
    CubicSubproblem,
    SOCPoint,
    cubic_prox,
    gmp_iterate,
    gmp_solve,
    lift,
    model_gradient,
    residual_E,
    residual_jacobian,
    soc_project,
    soc_projection_jacobian,
    solve_cubic_subproblem,
    ssn_solve,
)

rng = np.random.default_rng(0)


def random_subproblem(m, n, rho=0.3, seed=0, scale=1.0):
    # convex-concave model data: PSD x-block, NSD y-block, free coupling
    r = np.random.default_rng(seed)
    Gp = r.standard_normal((m, m)) / np.sqrt(m)
    Gr = r.standard_normal((n, n)) / np.sqrt(n)
    Q = r.standard_normal((m, n)) / np.sqrt(m + n)
    H = np.zeros((m + n, m + n))
    H[:m, :m] = Gp.T @ Gp
    H[m:, m:] = -Gr.T @ Gr
    H[:m, m:] = Q
    H[m:, :m] = Q.T
    g = scale * r.standard_normal(m + n)
    return CubicSubproblem(g, H, rho, m, n)


def one_d_subproblem():
    # saddle of -dx + dy + (1/3)|dx|^3 - (1/3)|dy|^3 sits at (1, 1)
    return CubicSubproblem(np.array([-1.0, 1.0]), np.zeros((2, 2)), 1.0 / 6.0, 1, 1)


class TestModelGradient:
    def test_at_zero_returns_g(self):
        sp = random_subproblem(2, 3, seed=1)
        np.testing.assert_array_equal(model_gradient(sp, np.zeros(5)), sp.g)

    def test_pure_cubic(self):
        sp = CubicSubproblem(np.zeros(4), np.zeros((4, 4)), 0.5, 2, 2)
        dz = np.array([1.0, 0.0, 0.0, 2.0])
        r = model_gradient(sp, dz)
        np.testing.assert_allclose(r[:2], 6 * 0.5 * 1.0 * np.array([1.0, 0.0]))
        np.testing.assert_allclose(r[2:], -6 * 0.5 * 2.0 * np.array([0.0, 2.0]))

    def test_scalar_root(self):
        sp = one_d_subproblem()
        np.testing.assert_allclose(model_gradient(sp, np.array([1.0, 1.0])),
                                   np.zeros(2), atol=1e-15)


class TestCubicProx:
    def test_zero_input(self):
        np.testing.assert_array_equal(cubic_prox(np.zeros(3), 1.0, 0.5), np.zeros(3))

    def test_golden_ratio_root(self):
        out = cubic_prox(np.array([1.0]), 1.0, 1.0 / 6.0)
        assert out[0] == pytest.approx((math.sqrt(5.0) - 1.0) / 2.0, abs=1e-14)

    def test_rho_zero_is_identity(self):
        v = np.array([0.3, -1.2])
        np.testing.assert_allclose(cubic_prox(v, 2.0, 0.0), v, rtol=1e-15)

    def test_stationarity_residual(self):
        for seed in range(20):
            r = np.random.default_rng(seed)
            v = r.standard_normal(4) * r.uniform(0.1, 10)
            ell = r.uniform(0.1, 5)
            rho = r.uniform(0.01, 2)
            x = cubic_prox(v, ell, rho)
            resid = -ell * v + ell * x + 6 * rho * np.linalg.norm(x) * x
            assert np.linalg.norm(resid) <= 1e-12 * ell * (1 + np.linalg.norm(v))

    def test_rejects_bad_ell(self):
        with pytest.raises(ValueError):
            cubic_prox(np.ones(2), 0.0, 1.0)


class TestGmp:
    def test_fixed_point_at_saddle(self):
        sp = random_subproblem(2, 2, seed=2)
        ref = ssn_solve(sp, lift(np.zeros(4), 2), mode="exact", exact_tol=1e-13)
        dz_star = ref.dz
        half, nxt = gmp_iterate(sp, dz_star)
        assert np.linalg.norm(half - dz_star) <= 1e-10
        assert np.linalg.norm(nxt - dz_star) <= 1e-10

    def test_zero_data_stays_zero(self):
        sp = CubicSubproblem(np.zeros(4), np.zeros((4, 4)), 0.5, 2, 2)
        half, nxt = gmp_iterate(sp, np.zeros(4))
        np.testing.assert_array_equal(half, np.zeros(4))
        np.testing.assert_array_equal(nxt, np.zeros(4))

    def test_one_d_iterates_approach_saddle(self):
        sp = one_d_subproblem()
        res = gmp_solve(sp, np.zeros(2), max_iters=1000, switch_tol=0.0)
        np.testing.assert_allclose(res.dz, [1.0, 1.0], atol=2e-2)
        assert res.iterations == 1000 and not res.hit_switch

    def test_start_at_saddle_returns_in_one_iteration(self):
        sp = random_subproblem(3, 2, seed=3)
        ref = ssn_solve(sp, lift(np.zeros(5), 3), mode="exact", exact_tol=1e-13)
        res = gmp_solve(sp, ref.dz, max_iters=100, switch_tol=1e-8)
        assert res.iterations == 1
        np.testing.assert_allclose(res.dz, ref.dz, atol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_averaged_iterate_error_bound(self, seed):
        # cubed distance of the averaged half-steps to the saddle decays
        # like ell * ||dz* - dz_0||^2 / (2 rho J)
        sp = random_subproblem(2, 2, rho=0.4, seed=seed)
        ref = ssn_solve(sp, lift(np.zeros(4), 2), mode="exact", exact_tol=1e-13)
        J = 500
        res = gmp_solve(sp, np.zeros(4), max_iters=J, switch_tol=0.0)
        lhs = (np.linalg.norm(res.dz[:2] - ref.dz[:2]) ** 3
               + np.linalg.norm(res.dz[2:] - ref.dz[2:]) ** 3)
        rhs = sp.ell() * np.linalg.norm(ref.dz) ** 2 / (2 * sp.rho * J)
        assert lhs <= rhs + 1e-12


class TestSocProjection:
    def test_interior_identity(self):
        w = np.array([0.5, 0.2, 2.0, 0.1, 1.0])  # m=2, n=1; both feasible
        out = soc_project(w, 2, 1).as_array()
        np.testing.assert_array_equal(out, w)

    def test_polar_cone_to_zero(self):
        w = np.array([1.0, 0.0, -2.0, 0.5, -3.0])
        out = soc_project(w, 2, 1)
        np.testing.assert_array_equal(out.as_array(), np.zeros(5))

    def test_middle_case_value(self):
        out = soc_project(np.array([1.0, 0.0, 0.0, 0.0, 1.0]), 2, 1)
        np.testing.assert_allclose(np.concatenate((out.dx, [out.u])),
                                   [0.5, 0.0, 0.5], rtol=1e-15)

    def test_socpoint_roundtrip(self):
        p = SOCPoint.from_array(np.arange(6.0), 2, 2)
        np.testing.assert_array_equal(p.as_array(), np.arange(6.0))

    def _oracle_block(self, wx, wu):
        # 1-D reduction of the nearest-point problem: for a cone height t the
        # best feasible block is wx scaled into radius t, so minimize the
        # convex distance d2(t) = max(||wx|| - t, 0)^2 + (t - wu)^2 over
        # t >= 0 by bisection on its (increasing) derivative
        nx = np.linalg.norm(wx)

        def ddist(t):
            return -2.0 * max(nx - t, 0.0) + 2.0 * (t - wu)

        lo, hi = 0.0, max(nx, abs(wu), 1.0) * 4 + 1.0
        if ddist(lo) >= 0.0:
            t = 0.0
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if ddist(mid) >= 0.0:
                    hi = mid
                else:
                    lo = mid
            t = 0.5 * (lo + hi)
        px = wx * min(1.0, t / nx) if nx > 0 else np.zeros_like(wx)
        return np.concatenate((px, [t]))

    def test_matches_nearest_point_oracle(self):
        r = np.random.default_rng(10)
        for _ in range(300):
            m, n = int(r.integers(1, 4)), int(r.integers(1, 4))
            w = 4.0 * r.standard_normal(m + n + 2)
            out = soc_project(w, m, n).as_array()
            ref = np.concatenate((
                self._oracle_block(w[:m], w[m]),
                self._oracle_block(w[m + 1 : m + 1 + n], w[m + 1 + n]),
            ))
            assert np.linalg.norm(out - ref) <= 1e-8

    def test_idempotent_and_feasible(self):
        r = np.random.default_rng(11)
        for _ in range(100):
            w = 3.0 * r.standard_normal(6)
            p = soc_project(w, 2, 2)
            assert p.feasible(tol=1e-12)
            again = soc_project(p.as_array(), 2, 2).as_array()
            assert np.linalg.norm(again - p.as_array()) <= 1e-14 * (
                1 + np.linalg.norm(p.as_array()))

    def test_nonexpansive(self):
        r = np.random.default_rng(12)
        for _ in range(100):
            w1, w2 = 3 * r.standard_normal(7), 3 * r.standard_normal(7)
            p1 = soc_project(w1, 3, 2).as_array()
            p2 = soc_project(w2, 3, 2).as_array()
            assert np.linalg.norm(p1 - p2) <= np.linalg.norm(w1 - w2) + 1e-12

    def test_obtuse_angle_property(self):
        r = np.random.default_rng(13)
        for _ in range(100):
            w = 3 * r.standard_normal(6)
            p = soc_project(w, 2, 2).as_array()
            # random feasible q: scale a point into each cone
            qx = r.standard_normal(2)
            qy = r.standard_normal(2)
            q = np.concatenate((qx, [np.linalg.norm(qx) * (1 + r.uniform())],
                                qy, [np.linalg.norm(qy) * (1 + r.uniform())]))
            assert (w - p) @ (q - p) <= 1e-12


class TestSocJacobian:
    def test_interior_identity_block(self):
        J = soc_projection_jacobian(np.array([0.1, 0.0, 5.0, 0.2, 9.0]), 2, 1)
        np.testing.assert_array_equal(J, np.eye(5))

    def test_polar_zero_block(self):
        J = soc_projection_jacobian(np.array([0.1, 0.0, -5.0, 0.2, -9.0]), 2, 1)
        np.testing.assert_array_equal(J, np.zeros((5, 5)))

    def test_middle_case_value(self):
        J = soc_projection_jacobian(np.array([1.0, 0.0, 0.0, 0.0, 2.0]), 2, 1)
        np.testing.assert_allclose(
            J[:3, :3], 0.5 * np.array([[1, 0, 1], [0, 1, 0], [1, 0, 1]]))
        np.testing.assert_array_equal(J[3:, 3:], np.eye(2))

    def test_matches_finite_differences_off_boundaries(self):
        r = np.random.default_rng(14)
        checked = 0
        while checked < 60:
            m, n = int(r.integers(1, 4)), int(r.integers(1, 4))
            w = 3.0 * r.standard_normal(m + n + 2)
            # skip points near a case boundary where the projection kinks
            nx = np.linalg.norm(w[:m])
            ny = np.linalg.norm(w[m + 1 : m + 1 + n])
            if min(abs(abs(w[m]) - nx), abs(abs(w[m + 1 + n]) - ny)) < 1e-2:
                continue
            J = soc_projection_jacobian(w, m, n)
            Jfd = finite_diff_jacobian(
                lambda q: soc_project(q, m, n).as_array(), w, h=1e-7)
            assert np.abs(J - Jfd).max() <= 1e-5
            checked += 1


class TestResidualSystem:
    def test_zero_at_lifted_solution(self):
        sp = random_subproblem(3, 2, seed=4)
        ref = ssn_solve(sp, lift(np.zeros(5), 3), mode="exact", exact_tol=1e-13)
        E = residual_E(sp, lift(ref.dz, 3))
        assert np.linalg.norm(E) <= 1e-10

    def test_zero_data_fixed_point(self):
        sp = CubicSubproblem(np.zeros(4), np.zeros((4, 4)), 0.3, 2, 2)
        np.testing.assert_array_equal(residual_E(sp, np.zeros(6)), np.zeros(6))

    def test_deep_infeasible_returns_identity(self):
        sp = CubicSubproblem(np.zeros(4), np.zeros((4, 4)), 0.3, 2, 2)
        p = np.array([0.1, 0.0, -50.0, 0.1, 0.0, -50.0])
        np.testing.assert_allclose(residual_E(sp, p), p, rtol=1e-15)

    def test_jacobian_identity_region_algebra(self):
        # H = 0, rho = 0 and w in the identity-projection region: J collapses
        # to zero
        sp = CubicSubproblem(np.zeros(2), np.zeros((2, 2)), 0.0, 1, 1)
        p = np.array([0.1, 5.0, 0.1, 5.0])
        np.testing.assert_array_equal(residual_jacobian(sp, p), np.zeros((4, 4)))

    def test_jacobian_zero_projection_region(self):
        sp = CubicSubproblem(np.zeros(2), np.zeros((2, 2)), 0.1, 1, 1)
        p = np.array([0.1, -40.0, 0.1, -40.0])
        np.testing.assert_array_equal(residual_jacobian(sp, p), np.eye(4))

    def test_jacobian_matches_finite_differences(self):
        from saddlenewton.subproblem import _cone_map

        r = np.random.default_rng(15)
        checked = 0
        while checked < 25:
            sp = random_subproblem(2, 2, rho=0.4, seed=int(r.integers(1e6)))
            p = r.standard_normal(6)
            w = p - _cone_map(sp, p)
            nx = np.linalg.norm(w[:2])
            ny = np.linalg.norm(w[3:5])
            if min(abs(abs(w[2]) - nx), abs(abs(w[5]) - ny)) < 1e-2:
                continue  # too close to a projection-case boundary
            J = residual_jacobian(sp, p)
            Jfd = finite_diff_jacobian(lambda q: residual_E(sp, q), p, h=1e-7)
            assert np.abs(J - Jfd).max() <= 1e-5
            checked += 1


class TestSsn:
    def test_immediate_return_at_solution(self):
        sp = random_subproblem(2, 2, seed=6)
        ref = ssn_solve(sp, lift(np.zeros(4), 2), mode="exact", exact_tol=1e-13)
        again = ssn_solve(sp, lift(ref.dz, 2), mode="exact")
        assert again.ssn_iters == 0
        assert again.status == "exact"

    def test_one_d_instance(self):
        sp = one_d_subproblem()
        sol = ssn_solve(sp, lift(np.array([0.5, 0.5]), 1), mode="exact")
        np.testing.assert_allclose(sol.dz, [1.0, 1.0], atol=1e-9)
        assert sol.model_grad_norm <= 1e-10 * 2

    def test_condition2_certificate_exact_inequality(self):
        for seed in range(10):
            sp = random_subproblem(5, 5, rho=0.7, seed=seed + 100)
            ref_norm = np.linalg.norm(sp.g)
            sol = solve_cubic_subproblem(sp, mode="condition2", kappa_m=0.1,
                                         grad_norm_ref=ref_norm)
            assert sol.status == "condition2"
            dz = sol.dz
            target = 0.1 * min(float(dz @ dz), ref_norm)
            assert sol.model_grad_norm <= target
            assert np.linalg.norm(model_gradient(sp, dz)) <= target

    def test_budget_exhaustion_flagged(self):
        sp = random_subproblem(3, 3, rho=0.2, seed=7, scale=5.0)
        sol = ssn_solve(sp, lift(np.zeros(6), 3), mode="exact", budget=1)
        assert sol.status == "budget_exhausted"


class TestSolvePipeline:
    def test_zero_gradient_short_circuit(self):
        sp = CubicSubproblem(np.zeros(5), np.eye(5), 0.4, 3, 2)
        sol = solve_cubic_subproblem(sp, mode="exact")
        np.testing.assert_array_equal(sol.dz, np.zeros(5))
        assert sol.gmp_iters == 0 and sol.ssn_iters == 0

    def test_exact_mode_residual_on_benchmark_first_iteration(self, cubic50):
        prob = cubic50["problem"]
        zhat = cubic50["z0"]
        g = prob.gradient(zhat)
        sp = CubicSubproblem(g, prob.hessian(zhat), cubic50["rho"], prob.m, prob.n)
        sol = solve_cubic_subproblem(sp, mode="exact")
        assert sol.status == "exact"
        assert sol.optimality_residual <= 1e-8 * (1 + np.linalg.norm(g))
        # the stationarity residual in operator form has the same norm as the
        # model gradient
        assert sol.optimality_residual == pytest.approx(sol.model_grad_norm)

    def test_condition2_budget_containment_on_auc(self, auc500):
        rng_l = np.random.default_rng(3)
        z = 0.3 * rng_l.standard_normal(auc500.m + 1)
        g = auc500.gradient(z)
        sp = CubicSubproblem(g, auc500.hessian(z), auc500.rho, auc500.m, 1)
        sol = solve_cubic_subproblem(sp, mode="condition2", kappa_m=0.1,
                                     grad_norm_ref=np.linalg.norm(g))
        assert sol.status == "condition2"
        assert sol.ssn_iters <= 200

    def test_unique_saddle_from_two_starts(self):
        sp = random_subproblem(3, 3, rho=0.5, seed=8)
        a = ssn_solve(sp, lift(np.zeros(6), 3), mode="exact")
        r = np.random.default_rng(4)
        b = ssn_solve(sp, lift(r.standard_normal(6), 3), mode="exact")
        assert np.linalg.norm(a.dz - b.dz) <= 1e-8

    def test_symmetrizes_hessian_input(self):
        A = np.array([[1.0, 2.0], [0.0, 1.0]])
        sp = CubicSubproblem(np.ones(2), A, 0.5, 1, 1)
        np.testing.assert_array_equal(sp.H, 0.5 * (A + A.T))

    def test_cone_residual_small_at_exact_solutions(self):
        # the projection-equation residual at an exact-mode solution stays
        # within 10x the mode tolerance
        for seed in range(8):
            sp = random_subproblem(3, 3, rho=0.4, seed=seed + 300)
            sol = solve_cubic_subproblem(sp, mode="exact")
            tol = 1e-10 * (1 + np.linalg.norm(sp.g))
            e = np.linalg.norm(residual_E(sp, lift(sol.dz, 3)))
            assert e <= 10.0 * tol
