"""State solvers for the neural-network-weighted weak formulations.

Four formulations share one pattern: the network ``xi`` enters the
assembled operators only through pointwise weight values at quadrature
points, so each solver caches its geometry/basis tables once and
re-assembles only the weight-dependent blocks per solve.

* :class:`WeightedLsqSystem` -- normal equations of the weighted least
  squares method, (omega(xi) (f - Bu), Bw) = 0.
* :class:`MixedLsqSystem` -- the equivalent saddle form with the residual
  representative r in a discrete residual space, (varpi(xi) r, v) + (Bu, v)
  = (f, v), (Bw, r) = 0.
* :class:`GalerkinSystem` -- weighted Galerkin, b(u, omega(xi) v) =
  f(omega(xi) v), with a kernel-coercivity estimate guarding stability.
* :class:`DdMinresSystem` -- discrete-dual minimal residual with a weighted
  test-space inner product and piecewise-constant trial functions.

Every solve returns a :class:`StateSolution` carrying both the primal
``u`` and the residual representative ``r``, plus the solve context reused
by derivative and adjoint computations.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import (
    default_quadrature,
    h1_gram,
    mass_matrix,
    scatter_matrix,
    scatter_vector,
    stiffness_matrix,
    tabulate,
)
from .errors import KernelCoercivityError, SolverFailureError
from .linalg import DenseLU, spd_inverse_sqrt, nullspace
from .meshing import refine_uniform_1d
from .network import (
    nn_forward,
    nn_forward_dx,
    nn_param_gradient_batch,
    nn_param_gradient_dx_batch,
)
from .problems import forcing_values, trial_space_for
from .quadrature import gauss_quadrature_1d
from .spaces import (
    FEFunction,
    dp1_space,
    eval_fe,
    eval_fe_grad,
    p0_space,
    p1_space,
)
from .weights import (
    weight_deriv,
    weight_eval,
    weight_inv,
    weight_inv_deriv,
    weight_inv_deriv2,
)


@dataclass
class StateSolution:
    """Solution of one weighted state problem.

    ``constraint_residual`` reports how well the second (constraint) block
    of the mixed system is satisfied by the returned residual
    representative; see each solver for the exact quantity.
    """

    r: FEFunction
    u: FEFunction
    solver_kind: str
    weight: object
    constraint_residual: float
    diagnostics: dict = field(default_factory=dict)
    system: object = field(default=None, repr=False, compare=False)
    ctx: dict = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class CostGrid:
    """Dense per-point basis data of the trial space on the cost grid."""

    x: np.ndarray
    w: np.ndarray
    value: np.ndarray  # (m, dim)
    deriv: np.ndarray  # (m, dim) in 1D, None in 2D
    bop: np.ndarray  # (m, dim): values of B(basis)
    jumps: np.ndarray  # (n_interfaces, dim) for P0 trial, else None


def _local_coeffs(dofs, coeffs):
    """Gather (n_elements, n_loc) local coefficients, 0 at constrained dofs."""
    padded = np.concatenate([coeffs, [0.0]])
    return padded[np.where(dofs >= 0, dofs, len(coeffs))]


def _b_factor(problem, tab):
    """Pointwise values of B(basis) = beta . grad + sigma * value."""
    if problem.dim == 2:
        bx, by = problem.beta
        return bx * tab.grad[..., 0] + by * tab.grad[..., 1] + problem.sigma * tab.value
    return problem.beta[0] * tab.grad + problem.sigma * tab.value


def _flatten_points(tab):
    return tab.x.reshape(-1, 2) if tab.x.ndim == 3 else tab.x.ravel()


def _densify(local, dofs, dim):
    """(n_elements, n_q, n_loc) local table -> (n_elements*n_q, dim) matrix."""
    nel, nq, nloc = local.shape
    m = nel * nq
    out = np.zeros((m, dim + 1))
    rows = np.arange(m)
    for loc in range(nloc):
        cols = np.repeat(np.where(dofs[:, loc] >= 0, dofs[:, loc], dim), nq)
        np.add.at(out, (rows, cols), local[:, :, loc].ravel())
    return out[:, :dim]


def _eval_b(problem, u, x):
    """Evaluate B u = beta . grad u + sigma u at points."""
    if problem.dim == 2:
        g = eval_fe_grad(u, x)
        bx, by = problem.beta
        return bx * g[:, 0] + by * g[:, 1] + problem.sigma * eval_fe(u, x)
    return problem.beta[0] * eval_fe_grad(u, x) + problem.sigma * eval_fe(u, x)


class _SystemBase:
    """Shared machinery: xi-evaluation grids, cost grids, gradients."""

    kind = None

    def __init__(self, problem, trial, weight):
        self.problem = problem
        self.trial = trial
        self.weight = weight
        self._cost_grid = None
        self._xi_quad = None

    # ---- grids ----------------------------------------------------------

    def xi_quadrature(self):
        """Order-3 grid on the trial mesh for all network L2 quantities."""
        if self._xi_quad is None:
            if self.problem.dim == 2:
                tab = tabulate(self.trial)
                self._xi_quad = (_flatten_points(tab), tab.w.ravel())
            else:
                mesh = self.trial.mesh
                quad = gauss_quadrature_1d(3)
                x = mesh.nodes[:-1, None] + mesh.h[:, None] * quad.points[None, :]
                w = mesh.h[:, None] * quad.weights[None, :]
                self._xi_quad = (x.ravel(), w.ravel())
        return self._xi_quad

    def cost_grid(self):
        """High-order grid on the trial mesh with dense basis matrices."""
        if self._cost_grid is not None:
            return self._cost_grid
        quad = None if self.problem.dim == 2 else gauss_quadrature_1d(5)
        tab = tabulate(self.trial, quad)
        dim = self.trial.dim
        value = _densify(tab.value, tab.dofs, dim)
        bop_local = _b_factor(self.problem, tab)
        bop = _densify(bop_local, tab.dofs, dim)
        deriv = None
        if self.problem.dim == 1:
            deriv = _densify(tab.grad, tab.dofs, dim)
        jumps = None
        if self.trial.kind == "P0":
            nel = self.trial.mesh.n_elements
            jumps = np.zeros((nel - 1, dim))
            for k in range(1, nel):
                jumps[k - 1, k] = 1.0
                jumps[k - 1, k - 1] = -1.0
        self._cost_grid = CostGrid(
            x=_flatten_points(tab),
            w=tab.w.ravel(),
            value=value,
            deriv=deriv,
            bop=bop,
            jumps=jumps,
        )
        return self._cost_grid

    # ---- network fields -------------------------------------------------

    def _xi_values(self, xi):
        return nn_forward(xi, self._xflat)

    def _direction_field(self, sol, eta):
        """Pointwise values of the parameter-direction derivative of xi."""
        return self._param_grad_matrix(sol) @ eta

    def _param_grad_matrix(self, sol):
        if "pgmat" not in sol.ctx:
            sol.ctx["pgmat"] = nn_param_gradient_batch(sol.ctx["net"], self._xflat)
        return sol.ctx["pgmat"]

    def _collect_gradient(self, sol, pointfactor):
        """Contract a per-quad-point factor with the network's parameter
        gradients: d/dtheta_k = sum_q pointfactor_q * (dxi/dtheta_k)(x_q)."""
        return self._param_grad_matrix(sol).T @ pointfactor.ravel()


# =========================================================================
# weighted least squares, normal form
# =========================================================================


class WeightedLsqSystem(_SystemBase):
    """Normal equations (omega(xi) (f - Bu), Bw) = 0 on the graph space."""

    kind = "lsq"

    def __init__(self, problem, trial, weight, residual_refine=4):
        super().__init__(problem, trial, weight)
        self.tab = tabulate(trial)
        self.BU = _b_factor(problem, self.tab)
        self._xflat = _flatten_points(self.tab)
        self.fq = forcing_values(problem, self._xflat).reshape(self.tab.w.shape)
        if problem.dim == 1:
            rmesh = refine_uniform_1d(trial.mesh, residual_refine)
            self.residual_space = p0_space(rmesh)
            self._rpoints = 0.5 * (rmesh.nodes[:-1] + rmesh.nodes[1:])
        else:
            self.residual_space = p0_space(trial.mesh)
            verts = trial.mesh.vertices[trial.mesh.triangles]
            self._rpoints = verts.mean(axis=1)

    def solve(self, xi):
        shape = self.tab.w.shape
        s = self._xi_values(xi).reshape(shape)
        om = np.asarray(weight_eval(self.weight, s))
        wq = self.tab.w * om
        local = np.einsum("eq,eqi,eqj->eij", wq, self.BU, self.BU)
        N = scatter_matrix(local, self.tab.dofs, self.tab.dofs, self.trial.dim, self.trial.dim)
        F = scatter_vector(
            np.einsum("eq,eqi->ei", wq * self.fq, self.BU), self.tab.dofs, self.trial.dim
        )
        lu = DenseLU(N)
        ucoef = lu.solve(F)
        u = FEFunction(self.trial, ucoef)
        uloc = _local_coeffs(self.tab.dofs, ucoef)
        res = self.fq - np.einsum("eqi,ei->eq", self.BU, uloc)

        s_r = nn_forward(xi, self._rpoints)
        om_r = np.asarray(weight_eval(self.weight, s_r))
        fr = forcing_values(self.problem, self._rpoints)
        r = FEFunction(self.residual_space, om_r * (fr - _eval_b(self.problem, u, self._rpoints)))

        sol = StateSolution(
            r=r,
            u=u,
            solver_kind=self.kind,
            weight=self.weight,
            constraint_residual=float(np.max(np.abs(N @ ucoef - F))),
            diagnostics={"omega_range": (float(om.min()), float(om.max()))},
            system=self,
            ctx={"net": xi, "s": s, "lu": lu, "res": res, "om": om},
        )
        return sol

    def state_derivative(self, sol, eta):
        ctx = sol.ctx
        shape = self.tab.w.shape
        etaq = self._direction_field(sol, eta).reshape(shape)
        dom = np.asarray(weight_deriv(self.weight, ctx["s"])) * etaq
        rhs = scatter_vector(
            np.einsum("eq,eqi->ei", self.tab.w * dom * ctx["res"], self.BU),
            self.tab.dofs,
            self.trial.dim,
        )
        du = FEFunction(self.trial, ctx["lu"].solve(rhs))

        s_r = nn_forward(ctx["net"], self._rpoints)
        eta_r = nn_param_gradient_batch(ctx["net"], self._rpoints) @ eta
        fr = forcing_values(self.problem, self._rpoints)
        res_r = fr - _eval_b(self.problem, sol.u, self._rpoints)
        dr_vals = np.asarray(weight_deriv(self.weight, s_r)) * eta_r * res_r - np.asarray(
            weight_eval(self.weight, s_r)
        ) * _eval_b(self.problem, du, self._rpoints)
        return FEFunction(self.residual_space, dr_vals), du

    def adjoint_gradient(self, sol, grad_u):
        ctx = sol.ctx
        lam = ctx["lu"].solve(np.asarray(grad_u, dtype=float))
        lamloc = _local_coeffs(self.tab.dofs, lam)
        Blam = np.einsum("eqi,ei->eq", self.BU, lamloc)
        dom = np.asarray(weight_deriv(self.weight, ctx["s"]))
        pf = self.tab.w * dom * ctx["res"] * Blam
        return self._collect_gradient(sol, pf)


# =========================================================================
# weighted least squares, mixed (saddle) form
# =========================================================================


class MixedLsqSystem(_SystemBase):
    """Saddle form with the residual representative in a discrete space.

    The residual space defaults to piecewise constants on a 4x refined
    mesh; ``residual_kind="DP1"`` selects broken linears instead, which
    represent f - Bu exactly for piecewise-linear trial functions and
    constant data, reproducing the normal equations to round-off.
    """

    kind = "mixed_lsq"

    def __init__(self, problem, trial, weight, refine=4, residual_kind="P0"):
        if problem.dim != 1:
            raise ValueError("the mixed least-squares form is provided in 1D")
        super().__init__(problem, trial, weight)
        rmesh = refine_uniform_1d(trial.mesh, refine)
        if residual_kind == "P0":
            self.residual_space = p0_space(rmesh)
        elif residual_kind == "DP1":
            self.residual_space = dp1_space(rmesh)
        else:
            raise ValueError(f"unknown residual space kind {residual_kind!r}")
        self.tabR = tabulate(self.residual_space)
        self.tabU = tabulate(trial, imesh=rmesh)
        self.BU = _b_factor(problem, self.tabU)
        self._xflat = _flatten_points(self.tabR)
        self.fq = forcing_values(problem, self._xflat).reshape(self.tabR.w.shape)
        self.dimR, self.dimU = self.residual_space.dim, trial.dim
        self.B = scatter_matrix(
            np.einsum("eq,eqi,eqj->eij", self.tabR.w, self.tabR.value, self.BU),
            self.tabR.dofs,
            self.tabU.dofs,
            self.dimR,
            self.dimU,
        )
        self.F = scatter_vector(
            np.einsum("eq,eqi->ei", self.tabR.w * self.fq, self.tabR.value),
            self.tabR.dofs,
            self.dimR,
        )

    def assemble_a(self, xi):
        s = self._xi_values(xi).reshape(self.tabR.w.shape)
        varpi = np.asarray(weight_inv(self.weight, s))
        A = scatter_matrix(
            np.einsum("eq,eqi,eqj->eij", self.tabR.w * varpi, self.tabR.value, self.tabR.value),
            self.tabR.dofs,
            self.tabR.dofs,
            self.dimR,
            self.dimR,
        )
        return A, s

    def _saddle(self, A):
        n = self.dimR + self.dimU
        M = np.zeros((n, n))
        M[: self.dimR, : self.dimR] = A
        M[: self.dimR, self.dimR :] = self.B
        M[self.dimR :, : self.dimR] = self.B.T
        return M

    def solve(self, xi):
        A, s = self.assemble_a(xi)
        lu = DenseLU(self._saddle(A))
        z = lu.solve(np.concatenate([self.F, np.zeros(self.dimU)]))
        rcoef, ucoef = z[: self.dimR], z[self.dimR :]
        rloc = _local_coeffs(self.tabR.dofs, rcoef)
        rq = np.einsum("eqi,ei->eq", self.tabR.value, rloc)
        return StateSolution(
            r=FEFunction(self.residual_space, rcoef),
            u=FEFunction(self.trial, ucoef),
            solver_kind=self.kind,
            weight=self.weight,
            constraint_residual=float(np.max(np.abs(self.B.T @ rcoef))),
            diagnostics={},
            system=self,
            ctx={"net": xi, "s": s, "lu": lu, "rq": rq},
        )

    def _delta_a_times_r(self, sol, etaq):
        """Vector (dA(eta) r)_i for the direction field eta."""
        dvarpi = np.asarray(weight_inv_deriv(self.weight, sol.ctx["s"])) * etaq
        return scatter_vector(
            np.einsum("eq,eqi->ei", self.tabR.w * dvarpi * sol.ctx["rq"], self.tabR.value),
            self.tabR.dofs,
            self.dimR,
        )

    def state_derivative(self, sol, eta):
        etaq = self._direction_field(sol, eta).reshape(self.tabR.w.shape)
        rhs = np.concatenate([-self._delta_a_times_r(sol, etaq), np.zeros(self.dimU)])
        dz = sol.ctx["lu"].solve(rhs)
        return (
            FEFunction(self.residual_space, dz[: self.dimR]),
            FEFunction(self.trial, dz[self.dimR :]),
        )

    def adjoint_gradient(self, sol, grad_u):
        rhs = np.concatenate([np.zeros(self.dimR), np.asarray(grad_u, dtype=float)])
        lam = sol.ctx["lu"].solve(rhs)[: self.dimR]
        lamloc = _local_coeffs(self.tabR.dofs, lam)
        lamq = np.einsum("eqi,ei->eq", self.tabR.value, lamloc)
        dvarpi = np.asarray(weight_inv_deriv(self.weight, sol.ctx["s"]))
        pf = -self.tabR.w * dvarpi * sol.ctx["rq"] * lamq
        return self._collect_gradient(sol, pf)

    # ---- verification hooks ---------------------------------------------

    def gram_trial(self):
        """Graph-norm Gram of the trial space: (w, w) + (Bw, Bw)."""
        local = np.einsum(
            "eq,eqi,eqj->eij", self.tabU.w, self.tabU.value, self.tabU.value
        ) + np.einsum("eq,eqi,eqj->eij", self.tabU.w, self.BU, self.BU)
        return scatter_matrix(local, self.tabU.dofs, self.tabU.dofs, self.dimU, self.dimU)

    def gram_test(self):
        """L2 mass of the residual space."""
        return mass_matrix(self.residual_space)


# =========================================================================
# weighted Galerkin
# =========================================================================


class GalerkinSystem(_SystemBase):
    """Weighted Galerkin: b(u, omega(xi) v) = f(omega(xi) v) on one space.

    Stability rests on coercivity of the inverse-weighted form on the
    discrete kernel, which can genuinely fail for steep weights on pure
    advection; an eigenvalue estimate on a refined mesh guards each solve
    unless explicitly waived.
    """

    kind = "galerkin"

    def __init__(self, problem, space, weight, check_coercivity=True, refine=2):
        if problem.dim != 1:
            raise ValueError("the weighted Galerkin solver is provided in 1D")
        super().__init__(problem, space, weight)
        self.space = space
        self.check_coercivity = check_coercivity
        self.tab = tabulate(space)
        self.BU = _b_factor(problem, self.tab)
        self._xflat = _flatten_points(self.tab)
        self.fq = forcing_values(problem, self._xflat).reshape(self.tab.w.shape)

        left, right = problem.bc
        fmesh = refine_uniform_1d(space.mesh, refine)
        self.fine = p1_space(fmesh, left=left, right=right)
        self.tabF = tabulate(self.fine)
        self.tabUF = tabulate(space, imesh=fmesh)
        self.BUf_coarse = _b_factor(problem, self.tabUF)
        self.BUf_fine = _b_factor(problem, self.tabF)
        self._xflat_fine = _flatten_points(self.tabF)
        self.fq_fine = forcing_values(problem, self._xflat_fine).reshape(self.tabF.w.shape)
        # constraint matrix C[j, i] = (B phi_j, psi_i) over the fine grid
        self.C = scatter_matrix(
            np.einsum("eq,eqi,eqj->eij", self.tabF.w, self.BUf_coarse, self.tabF.value),
            self.tabUF.dofs,
            self.tabF.dofs,
            self.space.dim,
            self.fine.dim,
        )
        self.Ff = scatter_vector(
            np.einsum("eq,eqi->ei", self.tabF.w * self.fq_fine, self.tabF.value),
            self.tabF.dofs,
            self.fine.dim,
        )
        self._kernel_basis = nullspace(self.C)
        self._gram_fine = h1_gram(self.fine)

    def _fine_weight_fields(self, xi):
        s = nn_forward(xi, self._xflat_fine).reshape(self.tabF.w.shape)
        xi_dx = nn_forward_dx(xi, self._xflat_fine).reshape(self.tabF.w.shape)
        varpi = np.asarray(weight_inv(self.weight, s))
        varpi_dx = np.asarray(weight_inv_deriv(self.weight, s)) * xi_dx
        return s, varpi, varpi_dx

    def _assemble_s(self, varpi, varpi_dx):
        """S[i, j] = integral of psi_i * B(varpi psi_j) on the fine space."""
        beta = self.problem.beta[0]
        col = beta * varpi_dx[:, :, None] * self.tabF.value + varpi[:, :, None] * self.BUf_fine
        local = np.einsum("eq,eqi,eqj->eij", self.tabF.w, self.tabF.value, col)
        return scatter_matrix(local, self.tabF.dofs, self.tabF.dofs, self.fine.dim, self.fine.dim)

    def kernel_coercivity_estimate(self, xi):
        """Smallest Rayleigh quotient of sym(a) over the discrete kernel,
        measured in the H1 norm of the refined test space."""
        _, varpi, varpi_dx = self._fine_weight_fields(xi)
        S = self._assemble_s(varpi, varpi_dx)
        Z = self._kernel_basis
        sym = 0.5 * (S + S.T)
        evals = scipy.linalg.eigh(
            Z.T @ sym @ Z, Z.T @ self._gram_fine @ Z, eigvals_only=True
        )
        return float(evals[0])

    def solve(self, xi):
        alpha_h = self.kernel_coercivity_estimate(xi)
        if self.check_coercivity and alpha_h <= 1e-10:
            raise KernelCoercivityError(
                f"kernel-coercivity violated: estimate {alpha_h:.3e} <= 1e-10"
            )
        shape = self.tab.w.shape
        s = self._xi_values(xi).reshape(shape)
        om = np.asarray(weight_eval(self.weight, s))
        wq = self.tab.w * om
        local = np.einsum("eq,eqi,eqj->eij", wq, self.tab.value, self.BU)
        M = scatter_matrix(local, self.tab.dofs, self.tab.dofs, self.space.dim, self.space.dim)
        F = scatter_vector(np.einsum("eq,eqi->ei", wq * self.fq, self.tab.value), self.tab.dofs, self.space.dim)
        lu = DenseLU(M)
        ucoef = lu.solve(F)
        uloc = _local_coeffs(self.tab.dofs, ucoef)
        res = self.fq - np.einsum("eqi,ei->eq", self.BU, uloc)

        # residual representative surrogate on the refined space: first
        # mixed equation given u, a(r, v) = f(v) - b(u, v) for fine v
        s_f, varpi, varpi_dx = self._fine_weight_fields(xi)
        S = self._assemble_s(varpi, varpi_dx)
        lu_fine = DenseLU(S.T)
        rcoef = lu_fine.solve(self.Ff - self.C.T @ ucoef)

        return StateSolution(
            r=FEFunction(self.fine, rcoef),
            u=FEFunction(self.space, ucoef),
            solver_kind=self.kind,
            weight=self.weight,
            constraint_residual=float(np.max(np.abs(self.C @ rcoef))),
            diagnostics={"alpha_h": alpha_h},
            system=self,
            ctx={
                "net": xi,
                "s": s,
                "lu": lu,
                "res": res,
                "uloc": uloc,
                "s_fine": s_f,
                "lu_fine": lu_fine,
                "rcoef": rcoef,
            },
        )

    def state_derivative(self, sol, eta):
        ctx = sol.ctx
        shape = self.tab.w.shape
        etaq = self._direction_field(sol, eta).reshape(shape)
        dom = np.asarray(weight_deriv(self.weight, ctx["s"])) * etaq
        rhs = scatter_vector(
            np.einsum("eq,eqi->ei", self.tab.w * dom * ctx["res"], self.tab.value),
            self.tab.dofs,
            self.space.dim,
        )
        du_coef = ctx["lu"].solve(rhs)

        # differentiate S(xi)^T r = Ff - C^T u
        net = ctx["net"]
        fshape = self.tabF.w.shape
        s_f = ctx["s_fine"]
        eta_f = (nn_param_gradient_batch(net, self._xflat_fine) @ eta).reshape(fshape)
        eta_dx_f = (nn_param_gradient_dx_batch(net, self._xflat_fine) @ eta).reshape(fshape)
        xi_dx = nn_forward_dx(net, self._xflat_fine).reshape(fshape)
        dvarpi = np.asarray(weight_inv_deriv(self.weight, s_f)) * eta_f
        dvarpi_dx = (
            np.asarray(weight_inv_deriv2(self.weight, s_f)) * eta_f * xi_dx
            + np.asarray(weight_inv_deriv(self.weight, s_f)) * eta_dx_f
        )
        dS = self._assemble_s(dvarpi, dvarpi_dx)
        dr_rhs = -dS.T @ ctx["rcoef"] - self.C.T @ du_coef
        dr_coef = ctx["lu_fine"].solve(dr_rhs)
        return FEFunction(self.fine, dr_coef), FEFunction(self.space, du_coef)

    def adjoint_gradient(self, sol, grad_u):
        ctx = sol.ctx
        lam = ctx["lu"].solve(np.asarray(grad_u, dtype=float), transpose=True)
        lamloc = _local_coeffs(self.tab.dofs, lam)
        lamq = np.einsum("eqi,ei->eq", self.tab.value, lamloc)
        dom = np.asarray(weight_deriv(self.weight, ctx["s"]))
        pf = self.tab.w * dom * ctx["res"] * lamq
        return self._collect_gradient(sol, pf)


# =========================================================================
# weighted discrete-dual minimal residual
# =========================================================================


class DdMinresSystem(_SystemBase):
    """Minimal residual in a weighted discrete-dual norm.

    Trial functions live in L2 (no essential conditions; piecewise
    constants by default), the inflow condition is carried weakly by the
    adjoint-form b(w, v) = (w, sigma v - beta v'), and the test space is a
    refined P1 space vanishing on the outflow boundary.
    """

    kind = "ddminres"

    def __init__(self, problem, trial, weight, test=None, inner_product="h1_semi", refine=2):
        if problem.dim != 1:
            raise ValueError("the dd-minres solver is provided in 1D")
        if inner_product not in ("h1_semi", "h1"):
            raise ValueError(f"unknown inner product {inner_product!r}")
        super().__init__(problem, trial, weight)
        self.inner_product = inner_product
        if test is None:
            fmesh = refine_uniform_1d(trial.mesh, refine)
            beta = problem.beta[0]
            test = p1_space(fmesh, left=beta < 0, right=beta > 0)
        if test.dim <= trial.dim:
            raise ValueError(
                f"test space must be strictly richer than the trial space "
                f"(dim {test.dim} <= {trial.dim})"
            )
        self.test = test
        self.tabV = tabulate(test)
        self.tabU = tabulate(trial, imesh=test.mesh)
        self._xflat = _flatten_points(self.tabV)
        self.fq = forcing_values(problem, self._xflat).reshape(self.tabV.w.shape)
        self.dimV, self.dimU = test.dim, trial.dim

        beta, sigma = problem.beta[0], problem.sigma
        badj = sigma * self.tabV.value - beta * self.tabV.grad
        self.B = scatter_matrix(
            np.einsum("eq,eqi,eqj->eij", self.tabV.w, badj, self.tabU.value),
            self.tabV.dofs,
            self.tabU.dofs,
            self.dimV,
            self.dimU,
        )
        self.F = scatter_vector(
            np.einsum("eq,eqi->ei", self.tabV.w * self.fq, self.tabV.value),
            self.tabV.dofs,
            self.dimV,
        )
        self.beta_h = self._estimate_infsup()

    # ---- verification hooks ---------------------------------------------

    def gram_trial(self):
        return mass_matrix(self.trial)

    def gram_test(self):
        G = stiffness_matrix(self.test)
        if self.inner_product == "h1":
            G = G + mass_matrix(self.test)
        return G

    def _estimate_infsup(self):
        Wv = spd_inverse_sqrt(self.gram_test())
        Wu = spd_inverse_sqrt(self.gram_trial())
        svals = scipy.linalg.svdvals(Wv @ self.B @ Wu)
        return float(svals[-1]) if len(svals) else 0.0

    def assemble_a(self, xi):
        s = self._xi_values(xi).reshape(self.tabV.w.shape)
        om = np.asarray(weight_eval(self.weight, s))
        local = np.einsum(
            "eq,eqi,eqj->eij", self.tabV.w * om, self.tabV.grad, self.tabV.grad
        )
        if self.inner_product == "h1":
            local = local + np.einsum(
                "eq,eqi,eqj->eij", self.tabV.w * om, self.tabV.value, self.tabV.value
            )
        A = scatter_matrix(local, self.tabV.dofs, self.tabV.dofs, self.dimV, self.dimV)
        return A, s

    def _saddle(self, A):
        n = self.dimV + self.dimU
        M = np.zeros((n, n))
        M[: self.dimV, : self.dimV] = A
        M[: self.dimV, self.dimV :] = self.B
        M[self.dimV :, : self.dimV] = self.B.T
        return M

    def solve(self, xi):
        if self.beta_h < 1e-10:
            raise SolverFailureError(
                f"discrete inf-sup estimate {self.beta_h:.3e} below 1e-10"
            )
        A, s = self.assemble_a(xi)
        lu = DenseLU(self._saddle(A))
        z = lu.solve(np.concatenate([self.F, np.zeros(self.dimU)]))
        rcoef, ucoef = z[: self.dimV], z[self.dimV :]
        rloc = _local_coeffs(self.tabV.dofs, rcoef)
        rq_dx = np.einsum("eqi,ei->eq", self.tabV.grad, rloc)
        rq = np.einsum("eqi,ei->eq", self.tabV.value, rloc)
        return StateSolution(
            r=FEFunction(self.test, rcoef),
            u=FEFunction(self.trial, ucoef),
            solver_kind=self.kind,
            weight=self.weight,
            constraint_residual=float(np.max(np.abs(self.B.T @ rcoef))),
            diagnostics={"beta_h": self.beta_h},
            system=self,
            ctx={"net": xi, "s": s, "lu": lu, "rq_dx": rq_dx, "rq": rq},
        )

    def _delta_a_times_r(self, sol, etaq):
        dom = np.asarray(weight_deriv(self.weight, sol.ctx["s"])) * etaq
        local = np.einsum("eq,eqi->ei", self.tabV.w * dom * sol.ctx["rq_dx"], self.tabV.grad)
        if self.inner_product == "h1":
            local = local + np.einsum(
                "eq,eqi->ei", self.tabV.w * dom * sol.ctx["rq"], self.tabV.value
            )
        return scatter_vector(local, self.tabV.dofs, self.dimV)

    def state_derivative(self, sol, eta):
        etaq = self._direction_field(sol, eta).reshape(self.tabV.w.shape)
        rhs = np.concatenate([-self._delta_a_times_r(sol, etaq), np.zeros(self.dimU)])
        dz = sol.ctx["lu"].solve(rhs)
        return (
            FEFunction(self.test, dz[: self.dimV]),
            FEFunction(self.trial, dz[self.dimV :]),
        )

    def adjoint_gradient(self, sol, grad_u):
        rhs = np.concatenate([np.zeros(self.dimV), np.asarray(grad_u, dtype=float)])
        lam = sol.ctx["lu"].solve(rhs)[: self.dimV]
        lamloc = _local_coeffs(self.tabV.dofs, lam)
        lam_dx = np.einsum("eqi,ei->eq", self.tabV.grad, lamloc)
        dom = np.asarray(weight_deriv(self.weight, sol.ctx["s"]))
        pf = -self.tabV.w * dom * sol.ctx["rq_dx"] * lam_dx
        if self.inner_product == "h1":
            lamq = np.einsum("eqi,ei->eq", self.tabV.value, lamloc)
            pf = pf - self.tabV.w * dom * sol.ctx["rq"] * lamq
        return self._collect_gradient(sol, pf)


# =========================================================================
# functional wrappers
# =========================================================================


def solve_weighted_lsq(problem, trial, weight, xi):
    return WeightedLsqSystem(problem, trial, weight).solve(xi)


def solve_mixed_lsq(problem, trial, weight, xi, refine=4, residual_kind="P0"):
    return MixedLsqSystem(problem, trial, weight, refine, residual_kind).solve(xi)


def solve_weighted_galerkin(problem, space, weight, xi, check_coercivity=True):
    return GalerkinSystem(problem, space, weight, check_coercivity).solve(xi)


def solve_dd_minres(problem, trial, weight, xi, test=None, inner_product="h1_semi", refine=2):
    return DdMinresSystem(problem, trial, weight, test, inner_product, refine).solve(xi)


def state_derivative(sol, eta):
    """Directional derivative of (r, u) with respect to network parameters.

    Re-solves the factored state system with the differentiated operator
    applied to the stored solution; the factorization from the state solve
    is reused.
    """
    return sol.system.state_derivative(sol, np.asarray(eta, dtype=float))


def build_system(kind, problem, mesh, weight, n_elements=None, **opts):
    """Construct a solver system from a mesh (or element count) by kind."""
    from .meshing import build_uniform_mesh_1d

    if mesh is None:
        mesh = build_uniform_mesh_1d(n_elements)
    if kind == "lsq":
        return WeightedLsqSystem(problem, trial_space_for(problem, mesh), weight, **opts)
    if kind == "mixed_lsq":
        return MixedLsqSystem(problem, trial_space_for(problem, mesh), weight, **opts)
    if kind == "galerkin":
        return GalerkinSystem(problem, trial_space_for(problem, mesh), weight, **opts)
    if kind == "ddminres":
        return DdMinresSystem(problem, p0_space(mesh), weight, **opts)
    raise ValueError(f"unknown solver kind {kind!r}")
