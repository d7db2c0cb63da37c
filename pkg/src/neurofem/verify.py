"""Numerical certification of the solver theory on assembled instances.

The checks here turn the structural assumptions behind the weighted
solvers into concrete numbers for one assembled system:

* ``estimate_infsup`` -- discrete inf-sup constant of the constraint
  block and coercivity of the weighted form on its kernel, both measured
  in the system's own trial/test norms.
* ``check_apriori`` -- slack in the a-priori stability bound
  ``||u_h||_U <= (C2/C1) (1/beta_h) ||f||_V*``.
* ``check_pg_equivalence`` -- residual of the Petrov-Galerkin
  reformulation through the optimal test functions ``A* v = B w``.
* ``probe_convexity`` -- sampled strong-convexity and Lipschitz
  estimates of the reduced cost in parameter space.
* ``build_report`` -- runs everything and collects a
  :class:`VerificationReport` that serializes to JSON.

The convexity probe is a parameter-space surrogate for a statement that
lives on L2: a positive ``gamma_hat`` is reported as evidence, never as
proof.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import range_complement, spd_inverse_sqrt
from .network import ShallowNet, to_vector
from .optimize import reduced_cost_and_gradient

PG_DEFECT_TOL = 1e-9


@dataclass
class VerificationReport:
    """Estimated constants and bound slacks for one assembled system."""

    alpha_h: float
    beta_h: float
    C1: float
    C2: float
    apriori_margin: float = math.nan
    pg_residual: float = math.nan
    gamma_hat: float = math.nan
    L_hat: float = math.nan

    def checks(self):
        return {
            "alpha_h_positive": bool(self.alpha_h > 0),
            "beta_h_positive": bool(self.beta_h > 0),
            "apriori_margin_nonnegative": bool(self.apriori_margin >= 0),
            "pg_defect_small": bool(self.pg_residual <= PG_DEFECT_TOL),
        }

    @property
    def passed(self):
        return all(self.checks().values())

    def to_json(self, indent=2):
        # The convexity numbers are sampled in parameter space, where the
        # network's scaling symmetries rule out convexity no matter the
        # regularization; a positive gamma_hat is extra evidence, never a
        # pass/fail gate.
        payload = {
            "alpha_h": self.alpha_h,
            "beta_h": self.beta_h,
            "C1": self.C1,
            "C2": self.C2,
            "apriori_margin": self.apriori_margin,
            "pg_residual": self.pg_residual,
            "gamma_hat": self.gamma_hat,
            "L_hat": self.L_hat,
            "checks": self.checks(),
            "evidence": {"gamma_hat_positive": bool(self.gamma_hat > 0)},
            "passed": self.passed,
        }
        return json.dumps(payload, indent=indent, sort_keys=True)


def estimate_infsup(A, B, gram_trial, gram_test, tol=1e-12):
    """Inf-sup constant of B and kernel coercivity of A.

    ``beta_h`` is the smallest singular value of the Gram-whitened
    constraint block, i.e. the discrete inf-sup constant of b(w, v) in
    the norms induced by the two Gram matrices.  ``alpha_h`` is the
    smallest eigenvalue of the whitened symmetric part of A restricted
    to the kernel of B^T; the kernel basis comes from a rank-revealing
    QR.  An empty kernel makes the restriction vacuous and returns
    ``alpha_h = inf``.

    Raises ``ValueError`` when either Gram matrix is not positive
    definite.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Wv = spd_inverse_sqrt(gram_test, tol=tol)
    Wu = spd_inverse_sqrt(gram_trial, tol=tol)
    svals = scipy.linalg.svdvals(Wv @ B @ Wu)
    beta_h = float(svals[-1]) if svals.size else 0.0
    kernel = range_complement(Wv @ B, tol=tol)
    if kernel.shape[1] == 0:
        return math.inf, beta_h
    Asym = 0.5 * (A + A.T)
    Ak = kernel.T @ (Wv @ Asym @ Wv) @ kernel
    alpha_h = float(scipy.linalg.eigh(Ak, eigvals_only=True)[0])
    return alpha_h, beta_h


def dual_norm(F, gram):
    """Norm of a linear functional in the dual of the Gram's space."""
    F = np.asarray(F, dtype=float)
    W = spd_inverse_sqrt(gram)
    return float(np.linalg.norm(W @ F))


def norm_equivalence_constants(A, gram_test):
    """Constants C1 <= C2 with C1 ||v|| <= ||v||_A <= C2 ||v||.

    Computed as the square roots of the extreme generalized eigenvalues
    of the symmetric part of A against the test Gram.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Asym = 0.5 * (A + A.T)
    evals = scipy.linalg.eigh(Asym, np.asarray(gram_test, dtype=float), eigvals_only=True)
    return float(np.sqrt(max(evals[0], 0.0))), float(np.sqrt(evals[-1]))


def check_apriori(sol, f_norm, report):
    """Slack of ||u_h||_U <= (C2/C1)(1/beta_h) ||f||_V*.

    Returns the margin (bound minus actual norm); a negative value is a
    reported failure, not an exception.
    """
    system = sol.system
    u = sol.u.coeffs
    u_norm = float(np.sqrt(u @ system.gram_trial() @ u))
    bound = (report.C2 / report.C1) * f_norm / report.beta_h
    return float(bound - u_norm)


def check_pg_equivalence(sol):
    """Max Petrov-Galerkin defect through the optimal test functions.

    For every trial basis vector e_j the optimal test function solves
    A(xi)* v_j = B e_j; the defect is |b(u_h, v_j) - f(v_j)|.  For an
    exact saddle-point solve this is an algebraic identity, so the
    defect sits at rounding level.
    """
    system = sol.system
    A, _ = system.assemble_a(sol.ctx["net"])
    V = scipy.linalg.solve(A.T, system.B)
    defects = V.T @ (system.B @ sol.u.coeffs - system.F)
    return float(np.max(np.abs(defects))) if defects.size else 0.0


def _probe_net(rng, n_neurons, input_dim):
    return ShallowNet(
        W=rng.uniform(-2.0, 2.0, (n_neurons, input_dim)),
        b=rng.uniform(-2.0, 2.0, n_neurons),
        c=rng.uniform(-2.0, 2.0, n_neurons),
    )


def probe_convexity(system, cost, n_pairs=50, n_neurons=6, seed=0):
    """Sampled strong-convexity and Lipschitz constants of the reduced cost.

    Over seeded pairs of networks with parameters uniform in [-2, 2],
    returns ``gamma_hat`` (the smallest secant curvature
    <grad j(a) - grad j(b), a - b> / ||a - b||^2) and ``L_hat`` (the
    largest gradient difference ratio).  Requires a regularized cost;
    without the alpha-term the reduced cost has flat directions and a
    curvature probe is meaningless.
    """
    if cost.alpha <= 0:
        raise ValueError("the convexity probe requires a cost with alpha > 0")
    rng = np.random.default_rng(seed)
    dim = system.problem.dim
    gamma_hat, L_hat = math.inf, 0.0
    for _ in range(n_pairs):
        na, nb = _probe_net(rng, n_neurons, dim), _probe_net(rng, n_neurons, dim)
        _, ga = reduced_cost_and_gradient(system, cost, na)
        _, gb = reduced_cost_and_gradient(system, cost, nb)
        dtheta = to_vector(na) - to_vector(nb)
        dg = ga - gb
        nsq = float(dtheta @ dtheta)
        if nsq == 0.0:
            continue
        gamma_hat = min(gamma_hat, float(dg @ dtheta) / nsq)
        L_hat = max(L_hat, float(np.linalg.norm(dg)) / math.sqrt(nsq))
    return float(gamma_hat), float(L_hat)


def build_report(system, cost, net, n_pairs=25, seed=0):
    """Run every check on one assembled system and collect the report.

    The system must expose the saddle structure (``B``, ``F``,
    ``assemble_a``, ``gram_trial``, ``gram_test``), which the mixed
    least-squares and dd-minres solvers do.
    """
    sol = system.solve(net)
    A, _ = system.assemble_a(net)
    alpha_h, beta_h = estimate_infsup(A, system.B, system.gram_trial(), system.gram_test())
    C1, C2 = norm_equivalence_constants(A, system.gram_test())
    report = VerificationReport(alpha_h=alpha_h, beta_h=beta_h, C1=C1, C2=C2)
    f_norm = dual_norm(system.F, system.gram_test())
    report.apriori_margin = check_apriori(sol, f_norm, report)
    report.pg_residual = check_pg_equivalence(sol)
    report.gamma_hat, report.L_hat = probe_convexity(
        system, cost, n_pairs=n_pairs, seed=seed
    )
    return report
