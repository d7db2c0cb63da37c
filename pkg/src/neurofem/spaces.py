"""Finite element spaces and functions.

Supported families:

* ``P0`` -- piecewise constants (1D), one dof per element.
* ``P1`` -- continuous piecewise linears (1D intervals or 2D triangles),
  with optional homogeneous Dirichlet constraints removed from the dof set.
* ``DP1`` -- discontinuous piecewise linears (1D), two dofs per element.

Evaluation at points follows a right-continuity convention for the
discontinuous families: at a shared node the value comes from the element
on the right.
"""

from dataclasses import dataclass, field

import numpy as np

from .meshing import Mesh1D, Mesh2DTri


@dataclass(frozen=True)
class FunctionSpace:
    """A scalar finite element space over a mesh.

    Attributes
    ----------
    kind : str
        One of ``"P0"``, ``"P1"``, ``"DP1"``.
    mesh : Mesh1D or Mesh2DTri
    node_dofs : ndarray or None
        For P1: per-node global dof index, -1 at constrained nodes.
    dim : int
        Number of unconstrained degrees of freedom.
    """

    kind: str
    mesh: object
    dim: int
    node_dofs: np.ndarray = field(default=None, repr=False)

    @property
    def is_2d(self):
        return isinstance(self.mesh, Mesh2DTri)


def p0_space(mesh):
    """Piecewise constants: one dof per interval (1D) or triangle (2D)."""
    if isinstance(mesh, Mesh2DTri):
        return FunctionSpace(kind="P0", mesh=mesh, dim=mesh.n_triangles)
    if not isinstance(mesh, Mesh1D):
        raise TypeError("expected an interval or triangle mesh")
    return FunctionSpace(kind="P0", mesh=mesh, dim=mesh.n_elements)


def dp1_space(mesh):
    """Discontinuous piecewise linears on a 1D mesh (two dofs per element)."""
    if not isinstance(mesh, Mesh1D):
        raise TypeError("DP1 spaces are only provided on interval meshes")
    return FunctionSpace(kind="DP1", mesh=mesh, dim=2 * mesh.n_elements)


def p1_space(mesh, left=False, right=False):
    """Continuous piecewise linears on a 1D mesh.

    Parameters
    ----------
    left, right : bool
        Impose a homogeneous Dirichlet condition at the corresponding
        endpoint by removing its dof.
    """
    if not isinstance(mesh, Mesh1D):
        raise TypeError("use p1_space_2d for triangle meshes")
    constrained = np.zeros(mesh.n_nodes, dtype=bool)
    if left:
        constrained[0] = True
    if right:
        constrained[-1] = True
    node_dofs = np.full(mesh.n_nodes, -1, dtype=int)
    free = ~constrained
    node_dofs[free] = np.arange(free.sum())
    return FunctionSpace(kind="P1", mesh=mesh, dim=int(free.sum()), node_dofs=node_dofs)


def p1_space_2d(mesh, dirichlet="boundary"):
    """Continuous piecewise linears on a triangle mesh.

    ``dirichlet`` selects the essentially constrained vertices: the whole
    boundary (``"boundary"``), only the faces x=0 and x=1 (``"x_faces"``),
    nothing (``None``), or a predicate ``p(x, y) -> bool mask``.
    """
    if not isinstance(mesh, Mesh2DTri):
        raise TypeError("expected a triangle mesh")
    constrained = np.zeros(mesh.n_vertices, dtype=bool)
    if dirichlet == "boundary":
        constrained[mesh.boundary_vertices] = True
    elif dirichlet == "x_faces":
        constrained = np.isclose(mesh.vertices[:, 0], 0.0) | np.isclose(
            mesh.vertices[:, 0], 1.0
        )
    elif callable(dirichlet):
        constrained = np.asarray(
            dirichlet(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=bool
        )
    elif dirichlet is not None:
        raise ValueError(f"unknown dirichlet selector {dirichlet!r}")
    node_dofs = np.full(mesh.n_vertices, -1, dtype=int)
    free = ~constrained
    node_dofs[free] = np.arange(free.sum())
    return FunctionSpace(kind="P1", mesh=mesh, dim=int(free.sum()), node_dofs=node_dofs)


@dataclass
class FEFunction:
    """A finite element function: a space plus a coefficient vector."""

    space: FunctionSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.dim,):
            raise ValueError(
                f"coefficient vector has shape {self.coeffs.shape}, "
                f"expected ({self.space.dim},)"
            )

    def __call__(self, x):
        return eval_fe(self, x)


def full_node_values(fn):
    """Nodal values of a P1 function including zeros at constrained nodes."""
    if fn.space.kind != "P1":
        raise ValueError("only P1 functions carry nodal values")
    vals = np.zeros(len(fn.space.node_dofs))
    free = fn.space.node_dofs >= 0
    vals[free] = fn.coeffs[fn.space.node_dofs[free]]
    return vals


def interpolate(space, f):
    """Interpolate a callable into a space (nodal/midpoint interpolation)."""
    mesh = space.mesh
    if space.kind == "P0":
        if space.is_2d:
            cent = mesh.vertices[mesh.triangles].mean(axis=1)
            return FEFunction(space, np.asarray([f(p[0], p[1]) for p in cent], dtype=float))
        mid = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
        return FEFunction(space, np.asarray([f(x) for x in mid], dtype=float))
    if space.kind == "DP1":
        vals = np.empty(space.dim)
        vals[0::2] = [f(x) for x in mesh.nodes[:-1]]
        vals[1::2] = [f(x) for x in mesh.nodes[1:]]
        return FEFunction(space, vals)
    if space.kind == "P1":
        pts = mesh.nodes if not space.is_2d else mesh.vertices
        free = space.node_dofs >= 0
        if space.is_2d:
            nodal = np.asarray([f(p[0], p[1]) for p in pts[free]], dtype=float)
        else:
            nodal = np.asarray([f(x) for x in pts[free]], dtype=float)
        return FEFunction(space, nodal)
    raise ValueError(f"unknown space kind {space.kind!r}")


# =========================================================================
# point evaluation
# =========================================================================


def _eval_1d(fn, x):
    space, mesh = fn.space, fn.space.mesh
    x = np.atleast_1d(np.asarray(x, dtype=float))
    elems = mesh.element_of(x)
    a = mesh.nodes[elems]
    h = mesh.h[elems]
    t = (x - a) / h
    if space.kind == "P0":
        vals = fn.coeffs[elems]
        grads = np.zeros_like(vals)
    elif space.kind == "DP1":
        vl = fn.coeffs[2 * elems]
        vr = fn.coeffs[2 * elems + 1]
        vals = (1.0 - t) * vl + t * vr
        grads = (vr - vl) / h
    elif space.kind == "P1":
        nodal = full_node_values(fn)
        vl = nodal[elems]
        vr = nodal[elems + 1]
        vals = (1.0 - t) * vl + t * vr
        grads = (vr - vl) / h
    else:
        raise ValueError(f"unknown space kind {space.kind!r}")
    return vals, grads


def _locate_triangles(mesh, pts):
    """Containing triangle index and barycentric coordinates for each point."""
    verts = mesh.vertices[mesh.triangles]  # (ntri, 3, 2)
    p0 = verts[:, 0]
    d1 = verts[:, 1] - p0
    d2 = verts[:, 2] - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    tri_idx = np.full(len(pts), -1, dtype=int)
    bary = np.zeros((len(pts), 3))
    for k, p in enumerate(pts):
        r = p[None, :] - p0
        l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
        l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
        l0 = 1.0 - l1 - l2
        inside = (l0 >= -1e-12) & (l1 >= -1e-12) & (l2 >= -1e-12)
        hits = np.flatnonzero(inside)
        if len(hits) == 0:
            raise ValueError(f"point {tuple(p)} lies outside the mesh")
        t = hits[0]
        tri_idx[k] = t
        bary[k] = [l0[t], l1[t], l2[t]]
    return tri_idx, bary


def _eval_2d(fn, pts):
    space, mesh = fn.space, fn.space.mesh
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if space.kind == "P0":
        tri_idx, _ = _locate_triangles(mesh, pts)
        return fn.coeffs[tri_idx], np.zeros((len(pts), 2))
    nodal = full_node_values(fn)
    tri_idx, bary = _locate_triangles(mesh, pts)
    tv = nodal[mesh.triangles[tri_idx]]  # (m, 3)
    vals = np.einsum("mk,mk->m", bary, tv)
    verts = mesh.vertices[mesh.triangles[tri_idx]]
    grads = np.empty((len(pts), 2))
    for k in range(len(pts)):
        p0, p1, p2 = verts[k]
        J = np.column_stack([p1 - p0, p2 - p0])
        # gradients of the three barycentric coordinates, columns of dlam
        dlam = np.linalg.solve(J.T, np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]).T)
        grads[k] = (dlam * tv[k][None, :]).sum(axis=1)
    return vals, grads


def eval_fe(fn, x):
    """Evaluate a finite element function at one or many points.

    Raises ``ValueError`` for points outside the mesh domain.  Scalars in,
    scalar out; arrays in, arrays out.
    """
    scalar = np.isscalar(x) or (np.asarray(x).ndim == (1 if fn.space.is_2d else 0))
    if fn.space.is_2d:
        vals, _ = _eval_2d(fn, x)
    else:
        vals, _ = _eval_1d(fn, x)
    return float(vals[0]) if scalar else vals


def eval_fe_grad(fn, x):
    """Evaluate the (elementwise) derivative of a finite element function.

    For P0 functions the derivative is zero inside every element.  In 2D the
    result has a trailing axis of length 2.
    """
    scalar = np.isscalar(x) or (np.asarray(x).ndim == (1 if fn.space.is_2d else 0))
    if fn.space.is_2d:
        _, grads = _eval_2d(fn, x)
        return grads[0] if scalar else grads
    _, grads = _eval_1d(fn, x)
    return float(grads[0]) if scalar else grads


def basis_row(space, x, side="right"):
    """Values of every global basis function at a single point, shape (dim,).

    Constrained dofs do not appear; the row is ready to pair with a
    coefficient vector.  When ``x`` is a shared node of a 1D mesh, ``side``
    picks the element supplying the values ("right" by default, "left" for
    the left-continuous convention); continuous spaces are unaffected.
    """
    row = np.zeros(space.dim)
    if space.is_2d:
        tri_idx, bary = _locate_triangles(space.mesh, np.atleast_2d(np.asarray(x, float)))
        if space.kind == "P0":
            row[tri_idx[0]] = 1.0
            return row
        for loc, v in enumerate(space.mesh.triangles[tri_idx[0]]):
            d = space.node_dofs[v]
            if d >= 0:
                row[d] += bary[0, loc]
        return row
    mesh = space.mesh
    if side == "left":
        a, b = mesh.domain
        xf = float(x)
        if xf < a - 1e-14 or xf > b + 1e-14:
            raise ValueError(f"point outside mesh domain [{a}, {b}]")
        e = int(np.clip(np.searchsorted(mesh.nodes, xf, side="left") - 1, 0, mesh.n_elements - 1))
    else:
        e = int(mesh.element_of(float(x)))
    t = (float(x) - mesh.nodes[e]) / mesh.h[e]
    if space.kind == "P0":
        row[e] = 1.0
    elif space.kind == "DP1":
        row[2 * e] = 1.0 - t
        row[2 * e + 1] = t
    elif space.kind == "P1":
        for node, shape in ((e, 1.0 - t), (e + 1, t)):
            d = space.node_dofs[node]
            if d >= 0:
                row[d] += shape
    else:
        raise ValueError(f"unknown space kind {space.kind!r}")
    return row
