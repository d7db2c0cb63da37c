"""Element tabulation and dense assembly of forms.

The workhorse is :func:`tabulate`, which evaluates a space's local basis on
an integration mesh (the space's own mesh or a nested uniform refinement of
it).  Assembly contracts all local contributions with ``einsum`` and
scatters them into dense matrices; at the problem sizes this package
targets, dense linear algebra is both simpler and faster than sparse.

Bilinear kernels receive two basis views ``u`` (trial) and ``v`` (test)
whose ``.value`` and ``.grad`` arrays broadcast against each other to shape
``(n_elements, n_qpoints, n_loc_test, n_loc_trial)``; in 2D, gradients
carry a trailing component axis that kernels contract themselves.
"""

from dataclasses import dataclass

import numpy as np

from .meshing import Mesh1D, Mesh2DTri
from .quadrature import gauss_quadrature_1d, triangle_midedge_rule

DEFAULT_GAUSS_ORDER = 3


@dataclass(frozen=True)
class ElementTable:
    """Basis data of one space tabulated on an integration mesh.

    Attributes
    ----------
    dofs : ndarray, (n_elements, n_loc)
        Global dof per local basis function, -1 where constrained.
    value : ndarray, (n_elements, n_q, n_loc)
    grad : ndarray, (n_elements, n_q, n_loc) in 1D, (..., 2) in 2D
    x : ndarray, (n_elements, n_q) in 1D, (..., 2) in 2D
        Physical quadrature points.
    w : ndarray, (n_elements, n_q)
        Physical quadrature weights (element measure included).
    dim : int
        Global dimension of the tabulated space.
    """

    dofs: np.ndarray
    value: np.ndarray
    grad: np.ndarray
    x: np.ndarray
    w: np.ndarray
    dim: int


def default_quadrature(mesh):
    if isinstance(mesh, Mesh2DTri):
        return triangle_midedge_rule()
    return gauss_quadrature_1d(DEFAULT_GAUSS_ORDER)


def _nesting_ratio(coarse, fine):
    ratio = fine.n_elements // coarse.n_elements
    if (
        ratio * coarse.n_elements != fine.n_elements
        or not np.allclose(fine.nodes[::ratio], coarse.nodes)
    ):
        raise ValueError("integration mesh is not a nested uniform refinement")
    return ratio


def _tabulate_1d(space, imesh, quad):
    ratio = _nesting_ratio(space.mesh, imesh)
    nel, nq = imesh.n_elements, quad.n_points
    a = imesh.nodes[:-1]
    h = imesh.h
    x = a[:, None] + h[:, None] * quad.points[None, :]
    w = h[:, None] * quad.weights[None, :]

    owner = np.arange(nel) // ratio
    if space.kind == "P0":
        dofs = owner[:, None]
        value = np.ones((nel, nq, 1))
        grad = np.zeros((nel, nq, 1))
        return ElementTable(dofs, value, grad, x, w, space.dim)

    # P1 and DP1 share linear shape functions on the owner element
    H = space.mesh.h[owner]
    xl = space.mesh.nodes[owner]
    t = (x - xl[:, None]) / H[:, None]
    value = np.stack([1.0 - t, t], axis=2)
    grad = np.broadcast_to(
        np.stack([-1.0 / H, 1.0 / H], axis=1)[:, None, :], (nel, nq, 2)
    ).copy()
    if space.kind == "DP1":
        dofs = np.column_stack([2 * owner, 2 * owner + 1])
    elif space.kind == "P1":
        dofs = space.node_dofs[np.column_stack([owner, owner + 1])]
    else:
        raise ValueError(f"unknown space kind {space.kind!r}")
    return ElementTable(dofs, value, grad, x, w, space.dim)


def _tabulate_2d(space, quad):
    mesh = space.mesh
    nel, nq = mesh.n_triangles, quad.n_points
    if space.kind == "P0":
        verts = mesh.vertices[mesh.triangles]
        p0 = verts[:, 0]
        d1 = verts[:, 1] - p0
        d2 = verts[:, 2] - p0
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        ref = quad.points
        x = (
            p0[:, None, :]
            + ref[None, :, 0, None] * d1[:, None, :]
            + ref[None, :, 1, None] * d2[:, None, :]
        )
        w = det[:, None] * quad.weights[None, :]
        return ElementTable(
            dofs=np.arange(nel)[:, None],
            value=np.ones((nel, nq, 1)),
            grad=np.zeros((nel, nq, 1, 2)),
            x=x,
            w=w,
            dim=space.dim,
        )
    verts = mesh.vertices[mesh.triangles]  # (nel, 3, 2)
    p0 = verts[:, 0]
    d1 = verts[:, 1] - p0
    d2 = verts[:, 2] - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]

    ref = quad.points  # (nq, 2)
    shp = np.column_stack([1.0 - ref[:, 0] - ref[:, 1], ref[:, 0], ref[:, 1]])
    value = np.broadcast_to(shp[None, :, :], (nel, nq, 3)).copy()
    x = p0[:, None, :] + ref[None, :, 0, None] * d1[:, None, :] + ref[None, :, 1, None] * d2[:, None, :]
    w = det[:, None] * quad.weights[None, :]

    # constant barycentric gradients per triangle
    grad = np.empty((nel, 3, 2))
    grad[:, 1, 0] = d2[:, 1] / det
    grad[:, 1, 1] = -d2[:, 0] / det
    grad[:, 2, 0] = -d1[:, 1] / det
    grad[:, 2, 1] = d1[:, 0] / det
    grad[:, 0] = -grad[:, 1] - grad[:, 2]
    grad = np.broadcast_to(grad[:, None, :, :], (nel, nq, 3, 2)).copy()

    dofs = space.node_dofs[mesh.triangles]
    return ElementTable(dofs, value, grad, x, w, space.dim)


def tabulate(space, quad=None, imesh=None):
    """Tabulate a space's basis on an integration mesh.

    ``imesh`` defaults to the space's own mesh; a 1D space may also be
    tabulated on any nested uniform refinement, which is how forms pairing
    spaces on different meshes are assembled.
    """
    if space.is_2d:
        if imesh is not None and imesh is not space.mesh:
            raise ValueError("2D tabulation only supports the space's own mesh")
        return _tabulate_2d(space, quad or default_quadrature(space.mesh))
    imesh = imesh or space.mesh
    return _tabulate_1d(space, imesh, quad or default_quadrature(imesh))


def integration_mesh(*spaces):
    """The finest of the spaces' meshes; raises if they are not nested."""
    meshes = [s.mesh for s in spaces]
    if any(isinstance(m, Mesh2DTri) for m in meshes):
        if not all(m is meshes[0] for m in meshes):
            raise ValueError("2D spaces must share one mesh")
        return meshes[0]
    fine = max(meshes, key=lambda m: m.n_elements)
    for m in meshes:
        _nesting_ratio(m, fine)
    return fine


@dataclass(frozen=True)
class BasisView:
    """Broadcast-ready basis arrays handed to assembly kernels."""

    value: np.ndarray
    grad: np.ndarray


def _field_values(weight, x):
    if weight is None:
        return 1.0
    if callable(weight):
        return np.asarray(weight(x), dtype=float)
    return np.asarray(weight, dtype=float)


def scatter_matrix(local, test_dofs, trial_dofs, dim_test, dim_trial):
    """Accumulate (n_elements, n_loc_test, n_loc_trial) blocks into a dense matrix."""
    out = np.zeros((dim_test + 1, dim_trial + 1))
    dv = np.where(test_dofs >= 0, test_dofs, dim_test)
    du = np.where(trial_dofs >= 0, trial_dofs, dim_trial)
    np.add.at(out, (dv[:, :, None], du[:, None, :]), local)
    return out[:dim_test, :dim_trial]


def scatter_vector(local, test_dofs, dim_test):
    """Accumulate (n_elements, n_loc_test) blocks into a dense vector."""
    out = np.zeros(dim_test + 1)
    dv = np.where(test_dofs >= 0, test_dofs, dim_test)
    np.add.at(out, dv, local)
    return out[:dim_test]


def assemble_form(trial, test, kernel, weight=None, quad=None, imesh=None):
    """Assemble a bilinear form into a dense (test.dim, trial.dim) matrix.

    Parameters
    ----------
    kernel : callable
        ``kernel(u, v, x) -> (n_elements, n_q, n_loc_test, n_loc_trial)``
        built from the views' broadcastable ``value``/``grad`` arrays.
    weight : callable or ndarray, optional
        Scalar field multiplying the integrand pointwise; a callable is
        evaluated at the physical quadrature points.
    """
    imesh = imesh or integration_mesh(trial, test)
    quad = quad or default_quadrature(imesh)
    tu = tabulate(trial, quad, imesh)
    tv = tabulate(test, quad, imesh)

    if trial.is_2d:
        u = BasisView(tu.value[:, :, None, :], tu.grad[:, :, None, :, :])
        v = BasisView(tv.value[:, :, :, None], tv.grad[:, :, :, None, :])
        x = tu.x[:, :, None, None, :]
    else:
        u = BasisView(tu.value[:, :, None, :], tu.grad[:, :, None, :])
        v = BasisView(tv.value[:, :, :, None], tv.grad[:, :, :, None])
        x = tu.x[:, :, None, None]
    integrand = kernel(u, v, x)
    wq = tu.w * _field_values(weight, tu.x)
    local = np.einsum("eq,eqij->eij", wq, integrand)
    return scatter_matrix(local, tv.dofs, tu.dofs, test.dim, trial.dim)


def assemble_functional(test, kernel, weight=None, quad=None, imesh=None):
    """Assemble a linear functional into a dense (test.dim,) vector.

    ``kernel(v, x) -> (n_elements, n_q, n_loc_test)`` where ``x`` carries a
    trailing singleton local axis so pointwise data broadcasts against the
    basis arrays.
    """
    imesh = imesh or integration_mesh(test)
    quad = quad or default_quadrature(imesh)
    tv = tabulate(test, quad, imesh)
    if test.is_2d:
        x = tv.x[:, :, None, :]
    else:
        x = tv.x[:, :, None]
    integrand = kernel(BasisView(tv.value, tv.grad), x)
    wq = tv.w * _field_values(weight, tv.x)
    local = np.einsum("eq,eqi->ei", wq, integrand)
    return scatter_vector(local, tv.dofs, test.dim)


# =========================================================================
# common matrices
# =========================================================================


def mass_matrix(space, quad=None):
    return assemble_form(space, space, lambda u, v, x: u.value * v.value, quad=quad)


def stiffness_matrix(space, quad=None):
    if space.is_2d:
        kern = lambda u, v, x: (u.grad * v.grad).sum(-1)
    else:
        kern = lambda u, v, x: u.grad * v.grad
    return assemble_form(space, space, kern, quad=quad)


def h1_gram(space, quad=None):
    return mass_matrix(space, quad) + stiffness_matrix(space, quad)
