"""Advection-reaction model problems: B u = beta . grad u + sigma u = f.

Each factory returns a :class:`ProblemSpec` describing the operator data,
the essential boundary conditions of the trial space, and (when known) the
exact solution used by supervised costs and error reports.
"""

from dataclasses import dataclass

import numpy as np

from .meshing import Mesh2DTri
from .spaces import p1_space, p1_space_2d


@dataclass(frozen=True)
class ProblemSpec:
    """First-order advection-reaction problem data.

    Attributes
    ----------
    dim : int
    beta : tuple
        Constant advection velocity, length ``dim``.
    sigma : float
        Nonnegative reaction coefficient.
    f : callable
        Forcing; vectorized over points (``f(x)`` in 1D, ``f(x, y)`` in 2D).
    bc : tuple or str
        1D: (left, right) flags for essential conditions on the trial
        space.  2D: a selector understood by ``p1_space_2d``.
    exact_solution : callable, optional
        Known exact (or reference) solution.
    name : str
    """

    dim: int
    beta: tuple
    sigma: float
    f: object
    bc: object
    exact_solution: object = None
    name: str = ""

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if len(self.beta) != self.dim:
            raise ValueError("advection vector length must match dimension")
        if self.sigma < 0:
            raise ValueError("reaction coefficient must be nonnegative")
        if all(b == 0 for b in self.beta) and self.sigma == 0:
            raise ValueError("operator is identically zero")


def boundary_layer_1d(sigma=160.0):
    """u' + sigma*u = sigma on (0,1), u(0)=0; exact 1 - exp(-sigma*x).

    The exact solution develops a left boundary layer as sigma grows.
    """
    sigma = float(sigma)
    return ProblemSpec(
        dim=1,
        beta=(1.0,),
        sigma=sigma,
        f=lambda x: np.full_like(np.asarray(x, dtype=float), sigma),
        bc=(True, False),
        exact_solution=lambda x: 1.0 - np.exp(-sigma * np.asarray(x, dtype=float)),
        name=f"boundary_layer_sigma{sigma:g}",
    )


def sine_advection_1d():
    """u' = pi*sin(pi*x) on (0,1), u(0)=0; exact 1 - cos(pi*x)."""
    return ProblemSpec(
        dim=1,
        beta=(1.0,),
        sigma=0.0,
        f=lambda x: np.pi * np.sin(np.pi * np.asarray(x, dtype=float)),
        bc=(True, False),
        exact_solution=lambda x: 1.0 - np.cos(np.pi * np.asarray(x, dtype=float)),
        name="sine_advection",
    )


def pure_advection_1d():
    """u' = 1 on (0,1), u(0)=0; exact u(x) = x."""
    return ProblemSpec(
        dim=1,
        beta=(1.0,),
        sigma=0.0,
        f=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        bc=(True, False),
        exact_solution=lambda x: np.asarray(x, dtype=float),
        name="pure_advection",
    )


def overconstrained_1d():
    """u' + u = 1 with both u(0)=0 and u(1)=0 imposed on the trial space.

    The reference solution 1 - exp(-x) (vanishing viscosity limit)
    satisfies only the inflow condition; discrete solutions conforming to
    both constraints can at best approximate it away from x=1.
    """
    return ProblemSpec(
        dim=1,
        beta=(1.0,),
        sigma=1.0,
        f=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        bc=(True, True),
        exact_solution=lambda x: 1.0 - np.exp(-np.asarray(x, dtype=float)),
        name="overconstrained_1d",
    )


def overconstrained_2d():
    """beta=(1,0): u_x + u = 1 on the unit square, u=0 on both faces x=0, x=1.

    Reference solution 1 - exp(-x), constant in y, satisfies the inflow
    face only.
    """
    return ProblemSpec(
        dim=2,
        beta=(1.0, 0.0),
        sigma=1.0,
        f=lambda x, y: np.ones_like(np.asarray(x, dtype=float)),
        bc="x_faces",
        exact_solution=lambda x, y: 1.0 - np.exp(-np.asarray(x, dtype=float)),
        name="overconstrained_2d",
    )


def trial_space_for(problem, mesh):
    """The conforming graph-space discretization: P1 with essential BCs."""
    if problem.dim == 2:
        if not isinstance(mesh, Mesh2DTri):
            raise TypeError("2D problem needs a triangle mesh")
        return p1_space_2d(mesh, dirichlet=problem.bc)
    left, right = problem.bc
    return p1_space(mesh, left=left, right=right)


def forcing_values(problem, x):
    """Evaluate the forcing at points shaped (m,) in 1D or (m, 2) in 2D."""
    x = np.asarray(x, dtype=float)
    if problem.dim == 2:
        return np.asarray(problem.f(x[..., 0], x[..., 1]), dtype=float)
    return np.asarray(problem.f(x), dtype=float)


def exact_values(problem, x):
    """Evaluate the exact/reference solution at points; None if unknown."""
    if problem.exact_solution is None:
        return None
    x = np.asarray(x, dtype=float)
    if problem.dim == 2:
        return np.asarray(problem.exact_solution(x[..., 0], x[..., 1]), dtype=float)
    return np.asarray(problem.exact_solution(x), dtype=float)
