"""Cost functionals over state solutions: J = J1(u_h) + (alpha/2) ||xi||^2.

Four J1 variants cover the control studies: a point-value misfit, a
weighted L2 residual misfit, and two smoothed L1 terms (total variation of
u_h, and the strong-form residual).  The L1 terms use the smoothed absolute
value |t|_eps = sqrt(t^2 + eps^2) so the whole family stays differentiable
for the adjoint machinery.

All u_h-dependent quantities are evaluated through the solver system's
dense cost grid, so gradients with respect to the trial coefficients are
plain matrix-vector products.
"""

from dataclasses import dataclass

import numpy as np

from .network import nn_forward, nn_param_gradient_batch
from .problems import exact_values, forcing_values
from .spaces import basis_row

COST_KINDS = ("point_value", "weighted_residual_l2", "total_variation", "residual_l1")

OMEGA_BAR_FIELDS = {
    "one": lambda x: np.ones_like(np.asarray(x, dtype=float)),
    "one_plus_sine": lambda x: 1.0 + np.sin(0.5 * np.pi * np.asarray(x, dtype=float)),
}


@dataclass(frozen=True)
class CostSpec:
    """One cost functional.

    Parameters
    ----------
    kind : str
        One of :data:`COST_KINDS`.
    x0 : float, optional
        Evaluation point for the point-value misfit.
    target : float or "exact", optional
        Datum for the point-value misfit; ``"exact"`` pulls the problem's
        exact solution value at ``x0``.
    omega_bar : callable or str, optional
        Pointwise weight of the L2 residual misfit (name from
        :data:`OMEGA_BAR_FIELDS` or a vectorized callable); defaults to 1.
    alpha : float
        Regularization strength of (alpha/2) ||xi||^2_L2.
    eps : float
        L1 smoothing parameter.
    """

    kind: str
    x0: float = None
    target: object = None
    omega_bar: object = None
    alpha: float = 0.0
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.eps <= 0:
            raise ValueError("smoothing eps must be positive")
        if self.kind == "point_value" and self.x0 is None:
            raise ValueError("point_value cost needs x0")
        if isinstance(self.omega_bar, str) and self.omega_bar not in OMEGA_BAR_FIELDS:
            raise ValueError(f"unknown omega_bar field {self.omega_bar!r}")


def smooth_abs(t, eps):
    return np.sqrt(t * t + eps * eps)


def _omega_bar_values(spec, x):
    if spec.omega_bar is None:
        return np.ones_like(np.asarray(x, dtype=float))
    field = OMEGA_BAR_FIELDS[spec.omega_bar] if isinstance(spec.omega_bar, str) else spec.omega_bar
    return np.asarray(field(x), dtype=float)


def _point_datum(spec, system):
    if spec.target == "exact":
        problem = system.problem
        if problem.exact_solution is None:
            raise ValueError("problem has no exact solution to target")
        return float(exact_values(problem, np.atleast_1d(spec.x0))[0])
    if spec.target is None:
        raise ValueError("point_value cost needs a target")
    return float(spec.target)


def _point_row(spec, system):
    mesh = system.trial.mesh
    a, b = mesh.domain
    if not (a - 1e-14 <= spec.x0 <= b + 1e-14):
        raise ValueError(f"x0={spec.x0} outside the domain [{a}, {b}]")
    # Half-open element convention: an interior x0 on an element boundary
    # belongs to the element on its right; only the domain endpoint falls
    # back to the left limit.  For continuous trial spaces the side is
    # irrelevant, for piecewise constants it decides which cell the cost
    # observes.
    side = "left" if spec.x0 >= b - 1e-14 else "right"
    return basis_row(system.trial, spec.x0, side=side)


def _grid_residual(system, grid, u_coeffs):
    return forcing_values(system.problem, grid.x) - grid.bop @ u_coeffs


def cost_j1(spec, sol):
    """The state-dependent part J1(u_h)."""
    system = sol.system
    grid = system.cost_grid()
    u = sol.u.coeffs
    if spec.kind == "point_value":
        q = _point_row(spec, system) @ u
        return 0.5 * (q - _point_datum(spec, system)) ** 2
    if spec.kind == "weighted_residual_l2":
        res = _grid_residual(system, grid, u)
        return 0.5 * float(np.sum(grid.w * _omega_bar_values(spec, grid.x) * res**2))
    if spec.kind == "total_variation":
        if grid.jumps is not None:
            return float(np.sum(smooth_abs(grid.jumps @ u, spec.eps)))
        if grid.deriv is None:
            raise ValueError("total variation cost is one-dimensional")
        return float(np.sum(grid.w * smooth_abs(grid.deriv @ u, spec.eps)))
    res = _grid_residual(system, grid, u)
    return float(np.sum(grid.w * smooth_abs(res, spec.eps)))


def cost_grad_u(spec, sol):
    """Gradient of J1 with respect to the trial coefficients of u_h."""
    system = sol.system
    grid = system.cost_grid()
    u = sol.u.coeffs
    if spec.kind == "point_value":
        row = _point_row(spec, system)
        return (row @ u - _point_datum(spec, system)) * row
    if spec.kind == "weighted_residual_l2":
        res = _grid_residual(system, grid, u)
        return -grid.bop.T @ (grid.w * _omega_bar_values(spec, grid.x) * res)
    if spec.kind == "total_variation":
        if grid.jumps is not None:
            j = grid.jumps @ u
            return grid.jumps.T @ (j / smooth_abs(j, spec.eps))
        if grid.deriv is None:
            raise ValueError("total variation cost is one-dimensional")
        d = grid.deriv @ u
        return grid.deriv.T @ (grid.w * d / smooth_abs(d, spec.eps))
    res = _grid_residual(system, grid, u)
    return -grid.bop.T @ (grid.w * res / smooth_abs(res, spec.eps))


def xi_l2_norm(system, xi):
    """||xi||_L2 over the domain, by per-element quadrature of the network."""
    pts, wts = system.xi_quadrature()
    vals = nn_forward(xi, pts)
    return float(np.sqrt(np.sum(wts * vals**2)))


def cost_reg(spec, system, xi):
    """(alpha/2) ||xi||^2_L2."""
    if spec.alpha == 0.0:
        return 0.0
    return 0.5 * spec.alpha * xi_l2_norm(system, xi) ** 2


def cost_grad_xi_reg(spec, xi, system):
    """Parameter gradient of the regularizer, alpha * int xi (dxi/dtheta)."""
    if spec.alpha == 0.0:
        return np.zeros(xi.n_params)
    pts, wts = system.xi_quadrature()
    vals = nn_forward(xi, pts)
    return spec.alpha * (nn_param_gradient_batch(xi, pts).T @ (wts * vals))


def cost_eval(spec, sol, xi):
    """Full cost J1(u_h) + (alpha/2) ||xi||^2_L2."""
    return cost_j1(spec, sol) + cost_reg(spec, sol.system, xi)


def cost_from_config(section):
    """Build a CostSpec from a config mapping.

    Recognized keys: ``cost`` (kind), ``x0``, ``target`` (number or
    "exact"), ``omega_bar`` (field name), ``alpha``, ``eps``.
    """
    known = {"cost", "x0", "target", "omega_bar", "alpha", "eps"}
    extra = set(section) - known
    if extra:
        raise ValueError(f"unknown cost config keys {sorted(extra)}")
    if "cost" not in section:
        raise ValueError("cost section needs a 'cost' kind")
    return CostSpec(
        kind=section["cost"],
        x0=section.get("x0"),
        target=section.get("target"),
        omega_bar=section.get("omega_bar"),
        alpha=float(section.get("alpha", 0.0)),
        eps=float(section.get("eps", 1e-8)),
    )
