import json
import math

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from neurofem.costs import CostSpec
from neurofem.meshing import build_uniform_mesh_1d
from neurofem.network import random_net
from neurofem.problems import ProblemSpec, boundary_layer_1d, sine_advection_1d, trial_space_for
from neurofem.solvers import build_system
from neurofem.verify import (
    VerificationReport,
    build_report,
    check_apriori,
    check_pg_equivalence,
    dual_norm,
    estimate_infsup,
    norm_equivalence_constants,
    probe_convexity,
)
from neurofem.weights import bounded_logistic, constant, logistic_offset


def random_spd(rng, n):
    Q = rng.standard_normal((n, n))
    return Q @ Q.T + n * np.eye(n)


def section412_system():
    problem = boundary_layer_1d(sigma=160.0)
    mesh = build_uniform_mesh_1d(16)
    return build_system("ddminres", problem, mesh, logistic_offset(100.0))


class TestEstimateInfsup:
    def test_matches_dense_eigendecomposition(self):
        # oracle on small systems: beta^2 is the smallest generalized
        # eigenvalue of (B^T Gv^-1 B, Gu); alpha is the smallest
        # generalized Rayleigh quotient of sym(A) against Gv over the
        # kernel of B^T
        rng = np.random.default_rng(7)
        for _ in range(10):
            Gv, Gu = random_spd(rng, 3), random_spd(rng, 2)
            A = rng.standard_normal((3, 3))
            B = rng.standard_normal((3, 2))
            alpha_h, beta_h = estimate_infsup(A, B, Gu, Gv)

            evals = scipy.linalg.eigh(
                B.T @ np.linalg.solve(Gv, B), Gu, eigvals_only=True
            )
            assert_allclose(beta_h, np.sqrt(evals[0]), atol=1e-12)

            K = scipy.linalg.null_space(B.T)
            Asym = 0.5 * (A + A.T)
            kevals = scipy.linalg.eigh(
                K.T @ Asym @ K, K.T @ Gv @ K, eigvals_only=True
            )
            assert_allclose(alpha_h, kevals[0], atol=1e-12)

    def test_identity_blocks(self):
        B = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        alpha_h, beta_h = estimate_infsup(np.eye(3), B, np.eye(2), np.eye(3))
        assert_allclose(beta_h, 1.0, atol=1e-14)
        assert_allclose(alpha_h, 1.0, atol=1e-14)

    def test_empty_kernel_reports_infinite_coercivity(self):
        alpha_h, beta_h = estimate_infsup(np.eye(3), np.eye(3), np.eye(3), np.eye(3))
        assert_allclose(beta_h, 1.0, atol=1e-14)
        assert math.isinf(alpha_h)

    def test_indefinite_gram_raises(self):
        G_bad = np.diag([1.0, -1.0, 1.0])
        with pytest.raises(ValueError):
            estimate_infsup(np.eye(3), np.eye(3)[:, :2], np.eye(2), G_bad)
        with pytest.raises(ValueError):
            estimate_infsup(np.eye(3), np.eye(3)[:, :2], -np.eye(2), np.eye(3))

    def test_ddminres_beta_does_not_depend_on_the_weight(self):
        system = section412_system()
        Gu, Gv = system.gram_trial(), system.gram_test()
        betas = []
        for seed in range(5):
            A, _ = system.assemble_a(random_net(6, seed=seed))
            alpha_h, beta_h = estimate_infsup(A, system.B, Gu, Gv)
            assert alpha_h > 0
            betas.append(beta_h)
        assert_allclose(betas, betas[0], rtol=1e-12)
        assert betas[0] > 0
        assert_allclose(betas[0], system.beta_h, rtol=1e-10)


class TestApriori:
    def test_zero_forcing_gives_zero_margin_and_state(self):
        problem = ProblemSpec(
            dim=1,
            beta=(1.0,),
            sigma=1.0,
            f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            bc=(True, False),
            name="homogeneous",
        )
        mesh = build_uniform_mesh_1d(8)
        system = build_system("ddminres", problem, mesh, bounded_logistic())
        net = random_net(4, seed=0)
        sol = system.solve(net)
        assert_allclose(sol.u.coeffs, 0.0, atol=1e-12)
        A, _ = system.assemble_a(net)
        alpha_h, beta_h = estimate_infsup(A, system.B, system.gram_trial(), system.gram_test())
        C1, C2 = norm_equivalence_constants(A, system.gram_test())
        report = VerificationReport(alpha_h, beta_h, C1, C2)
        f_norm = dual_norm(system.F, system.gram_test())
        assert_allclose(check_apriori(sol, f_norm, report), 0.0, atol=1e-10)

    @pytest.mark.parametrize("kind", ["mixed_lsq", "ddminres"])
    def test_margin_nonnegative_over_random_nets(self, kind):
        problem = boundary_layer_1d(sigma=160.0)
        mesh = build_uniform_mesh_1d(16)
        system = build_system(kind, problem, mesh, logistic_offset(100.0))
        f_norm = dual_norm(system.F, system.gram_test())
        for seed in range(20):
            net = random_net(6, seed=seed)
            sol = system.solve(net)
            A, _ = system.assemble_a(net)
            alpha_h, beta_h = estimate_infsup(
                A, system.B, system.gram_trial(), system.gram_test()
            )
            C1, C2 = norm_equivalence_constants(A, system.gram_test())
            report = VerificationReport(alpha_h, beta_h, C1, C2)
            assert check_apriori(sol, f_norm, report) >= 0.0

    def test_constant_weight_collapses_the_equivalence_constants(self):
        problem = boundary_layer_1d(sigma=160.0)
        mesh = build_uniform_mesh_1d(16)
        system = build_system("ddminres", problem, mesh, constant(2.0))
        A, _ = system.assemble_a(random_net(4, seed=1))
        C1, C2 = norm_equivalence_constants(A, system.gram_test())
        assert_allclose(C1, C2, rtol=1e-10)
        assert_allclose(C1, np.sqrt(2.0), rtol=1e-10)


class TestPgEquivalence:
    def test_defect_small_over_random_nets(self):
        system = section412_system()
        for seed in range(20):
            sol = system.solve(random_net(6, seed=seed))
            assert check_pg_equivalence(sol) <= 1e-9

    def test_defect_scales_linearly_with_the_forcing(self):
        def scaled_problem(s):
            return ProblemSpec(
                dim=1,
                beta=(1.0,),
                sigma=160.0,
                f=lambda x: np.full_like(np.asarray(x, dtype=float), s * 160.0),
                bc=(True, False),
                name=f"scaled_{s}",
            )

        mesh = build_uniform_mesh_1d(16)
        net = random_net(6, seed=3)
        base = build_system("ddminres", scaled_problem(1.0), mesh, logistic_offset(100.0))
        big = build_system("ddminres", scaled_problem(1e6), mesh, logistic_offset(100.0))
        d_base = check_pg_equivalence(base.solve(net))
        d_big = check_pg_equivalence(big.solve(net))
        # the defect is rounding noise in exact arithmetic; scaling f by
        # 1e6 may scale that noise but must not break the relative bound
        assert d_big <= 1e-9 * 1e6
        assert d_big <= 1e3 * max(d_base, 1e-15) * 1e6


class TestProbeConvexity:
    def setup_method(self):
        problem = sine_advection_1d()
        mesh = build_uniform_mesh_1d(16)
        self.system = build_system("lsq", problem, mesh, bounded_logistic())

    def cost(self, alpha):
        return CostSpec(
            kind="weighted_residual_l2", omega_bar="one_plus_sine", alpha=alpha
        )

    def test_requires_positive_alpha(self):
        with pytest.raises(ValueError):
            probe_convexity(self.system, self.cost(0.0))

    def test_deterministic_under_seed(self):
        a = probe_convexity(self.system, self.cost(0.5), n_pairs=10, seed=4)
        b = probe_convexity(self.system, self.cost(0.5), n_pairs=10, seed=4)
        assert a == b

    def test_lipschitz_estimate_finite_over_many_pairs(self):
        gamma_hat, L_hat = probe_convexity(
            self.system, self.cost(0.1), n_pairs=100, seed=0
        )
        assert math.isfinite(L_hat) and L_hat > 0
        assert math.isfinite(gamma_hat)
        # secant curvature is bounded by the secant Lipschitz constant
        assert gamma_hat <= L_hat


class TestReport:
    def test_full_report_on_the_dd_minres_instance(self):
        system = section412_system()
        cost = CostSpec(kind="point_value", x0=1.0 / 16, target="exact", alpha=1.0)
        report = build_report(system, cost, random_net(6, seed=3))
        payload = json.loads(report.to_json())
        for key in ("alpha_h", "beta_h", "C1", "C2", "apriori_margin",
                    "pg_residual", "gamma_hat", "L_hat"):
            assert math.isfinite(payload[key]), key
        assert payload["checks"] == {
            "alpha_h_positive": True,
            "beta_h_positive": True,
            "apriori_margin_nonnegative": True,
            "pg_defect_small": True,
        }
        assert "gamma_hat_positive" in payload["evidence"]
        assert payload["passed"] is True
