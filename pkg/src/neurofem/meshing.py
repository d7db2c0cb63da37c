"""Meshes: uniform 1D intervals and criss-cross triangulations of the unit square."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh1D:
    """Partition of an interval into elements.

    Attributes
    ----------
    nodes : ndarray, shape (n_nodes,)
        Vertex coordinates in increasing order.
    """

    nodes: np.ndarray

    @property
    def n_elements(self):
        return len(self.nodes) - 1

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def h(self):
        """Element sizes, shape (n_elements,)."""
        return np.diff(self.nodes)

    @property
    def domain(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    def element_of(self, x):
        """Index of the element containing x (right-open, last element closed)."""
        a, b = self.domain
        x = np.asarray(x, dtype=float)
        if np.any(x < a - 1e-14) or np.any(x > b + 1e-14):
            raise ValueError(f"point outside mesh domain [{a}, {b}]")
        idx = np.searchsorted(self.nodes, x, side="right") - 1
        return np.clip(idx, 0, self.n_elements - 1)


def build_uniform_mesh_1d(n_elements, a=0.0, b=1.0):
    """Uniform partition of [a, b] into n_elements intervals."""
    if n_elements < 1:
        raise ValueError("need at least one element")
    if not b > a:
        raise ValueError("need b > a")
    return Mesh1D(nodes=np.linspace(a, b, n_elements + 1))


def refine_uniform_1d(mesh, factor):
    """Split every element of a uniform mesh into `factor` equal pieces."""
    if factor < 1:
        raise ValueError("refinement factor must be >= 1")
    a, b = mesh.domain
    return build_uniform_mesh_1d(mesh.n_elements * factor, a, b)


@dataclass(frozen=True)
class Mesh2DTri:
    """Triangle mesh of a planar domain.

    Attributes
    ----------
    vertices : ndarray, shape (n_vertices, 2)
    triangles : ndarray, shape (n_triangles, 3)
        Vertex indices, positively oriented.
    boundary_vertices : ndarray of int
        Indices of vertices on the domain boundary.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertices: np.ndarray = field(repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def build_crisscross_mesh(nx, ny=None):
    """Criss-cross triangulation of the unit square.

    Each of the nx-by-ny grid cells is split into four triangles meeting at
    the cell center, so the mesh has (nx+1)(ny+1) + nx*ny vertices and
    4*nx*ny positively oriented triangles.
    """
    if ny is None:
        ny = nx
    if nx < 1 or ny < 1:
        raise ValueError("need at least one cell per direction")
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    grid_pts = np.column_stack([gx.ravel(), gy.ravel()])

    def gid(i, j):
        return i * (ny + 1) + j

    n_grid = (nx + 1) * (ny + 1)
    centers = np.empty((nx * ny, 2))
    tris = []
    for i in range(nx):
        for j in range(ny):
            c = n_grid + i * ny + j
            centers[i * ny + j] = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])]
            sw, se = gid(i, j), gid(i + 1, j)
            nw, ne = gid(i, j + 1), gid(i + 1, j + 1)
            # counter-clockwise fans around the center
            tris.append([sw, se, c])
            tris.append([se, ne, c])
            tris.append([ne, nw, c])
            tris.append([nw, sw, c])
    vertices = np.vstack([grid_pts, centers])

    on_bdry = (
        np.isclose(vertices[:, 0], 0.0)
        | np.isclose(vertices[:, 0], 1.0)
        | np.isclose(vertices[:, 1], 0.0)
        | np.isclose(vertices[:, 1], 1.0)
    )
    return Mesh2DTri(
        vertices=vertices,
        triangles=np.asarray(tris, dtype=int),
        boundary_vertices=np.flatnonzero(on_bdry),
    )
