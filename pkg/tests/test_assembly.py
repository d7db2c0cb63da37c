"""Form assembly against hand-integrated and high-order quadrature oracles."""

import numpy as np
import pytest

from neurofem.assembly import (
    assemble_form,
    assemble_functional,
    h1_gram,
    mass_matrix,
    stiffness_matrix,
    tabulate,
)
from neurofem.meshing import build_crisscross_mesh, build_uniform_mesh_1d, refine_uniform_1d
from neurofem.quadrature import gauss_quadrature_1d
from neurofem.spaces import interpolate, p0_space, p1_space, p1_space_2d


def mass_kernel(u, v, x):
    return u.value * v.value


def stiffness_kernel(u, v, x):
    return u.grad * v.grad


class TestHandIntegratedOracles:
    def test_mass_matrix_two_elements_constrained(self):
        # Hand integration of hat products on two elements of size h = 1/2:
        # the interior hat gives 2h/3 on the diagonal, the boundary half-hat
        # h/3, and neighbours share h/6.
        mesh = build_uniform_mesh_1d(2)
        space = p1_space(mesh, left=True)
        M = assemble_form(space, space, mass_kernel)
        expected = np.array([[1.0 / 3.0, 1.0 / 12.0], [1.0 / 12.0, 1.0 / 6.0]])
        np.testing.assert_allclose(M, expected, atol=1e-15)

    def test_stiffness_single_element(self):
        mesh = build_uniform_mesh_1d(1)
        space = p1_space(mesh, left=True)
        K = assemble_form(space, space, stiffness_kernel)
        np.testing.assert_allclose(K, [[1.0]], atol=1e-15)

    def test_zero_weight_field_kills_matrix(self):
        mesh = build_uniform_mesh_1d(4)
        space = p1_space(mesh)
        M = assemble_form(space, space, mass_kernel, weight=lambda x: np.zeros_like(x))
        np.testing.assert_allclose(M, 0.0)

    def test_constant_forcing_against_hats(self):
        # f = 1 against the N=2 hats with u(0) = 0: interior hat integrates
        # to h = 1/2, the boundary half-hat to h/2 = 1/4.
        mesh = build_uniform_mesh_1d(2)
        space = p1_space(mesh, left=True)
        F = assemble_functional(space, lambda v, x: v.value)
        np.testing.assert_allclose(F, [0.5, 0.25], atol=1e-15)

    def test_zero_functional(self):
        mesh = build_uniform_mesh_1d(3)
        space = p1_space(mesh)
        F = assemble_functional(space, lambda v, x: 0.0 * v.value)
        np.testing.assert_allclose(F, 0.0)

    def test_sine_forcing_matches_order5_oracle(self):
        # Independent oracle: plain per-element 5-point Gauss loop over the
        # hat functions, no assembly machinery involved.
        mesh = build_uniform_mesh_1d(16)
        space = p1_space(mesh)
        f = lambda x: np.pi * np.sin(np.pi * x)
        gp, gw = np.polynomial.legendre.leggauss(5)
        gp, gw = 0.5 * (gp + 1.0), 0.5 * gw
        oracle = np.zeros(space.dim)
        for e in range(mesh.n_elements):
            a, h = mesh.nodes[e], mesh.h[e]
            xq = a + h * gp
            for loc, (node, shape) in enumerate(
                ((e, 1.0 - gp), (e + 1, gp))
            ):
                dof = space.node_dofs[node]
                if dof >= 0:
                    oracle[dof] += h * np.sum(gw * f(xq) * shape)
        kern = lambda v, x: np.pi * np.sin(np.pi * x) * v.value
        F5 = assemble_functional(space, kern, quad=gauss_quadrature_1d(5))
        np.testing.assert_allclose(F5, oracle, atol=1e-10)
        # the order-3 default is a quadrature approximation of the same oracle
        F3 = assemble_functional(space, kern, quad=gauss_quadrature_1d(3))
        np.testing.assert_allclose(F3, oracle, atol=1e-8)


class TestAssemblyProperties:
    def setup_method(self):
        self.mesh = build_uniform_mesh_1d(6)
        self.space = p1_space(self.mesh, left=True)

    def test_linearity_in_kernel(self):
        k1 = mass_kernel
        k2 = stiffness_kernel
        combined = lambda u, v, x: k1(u, v, x) + k2(u, v, x)
        A = assemble_form(self.space, self.space, combined)
        B = assemble_form(self.space, self.space, k1) + assemble_form(
            self.space, self.space, k2
        )
        np.testing.assert_allclose(A, B, atol=1e-13)

    def test_symmetric_kernel_symmetric_matrix(self):
        rng = np.random.default_rng(7)
        field = lambda x: 1.0 + 0.5 * np.sin(5 * x)
        M = assemble_form(self.space, self.space, mass_kernel, weight=field)
        assert np.max(np.abs(M - M.T)) < 1e-13
        K = stiffness_matrix(self.space)
        assert np.max(np.abs(K - K.T)) < 1e-13
        del rng

    def test_refined_interpolation_stays_exact(self):
        coarse = p1_space(build_uniform_mesh_1d(4))
        fine = p1_space(build_uniform_mesh_1d(8))
        f = lambda x: 3.0 * x - 0.2
        for space in (coarse, fine):
            fn = interpolate(space, f)
            xs = np.linspace(0, 1, 33)
            np.testing.assert_allclose(fn(xs), f(xs), atol=1e-13)

    def test_mass_matrix_row_sums_give_hat_integrals(self):
        space = p1_space(build_uniform_mesh_1d(5))
        M = mass_matrix(space)
        F = assemble_functional(space, lambda v, x: v.value)
        np.testing.assert_allclose(M.sum(axis=1), F, atol=1e-14)


class TestCrossMeshTabulation:
    def test_coarse_p1_on_fine_mesh_integrates_exactly(self):
        coarse_mesh = build_uniform_mesh_1d(4)
        fine_mesh = refine_uniform_1d(coarse_mesh, 4)
        space = p1_space(coarse_mesh, left=True)
        M_own = assemble_form(space, space, mass_kernel)
        M_fine = assemble_form(space, space, mass_kernel, imesh=fine_mesh)
        np.testing.assert_allclose(M_own, M_fine, atol=1e-14)

    def test_mixed_spaces_share_fine_mesh(self):
        coarse_mesh = build_uniform_mesh_1d(4)
        fine_mesh = refine_uniform_1d(coarse_mesh, 2)
        trial = p1_space(coarse_mesh, left=True)
        test = p0_space(fine_mesh)
        # b(w, p) = (w', p): integrate the coarse slope over fine elements
        B = assemble_form(trial, test, lambda u, v, x: u.grad * v.value)
        fn = interpolate(trial, lambda x: x)
        bw = B @ fn.coeffs
        np.testing.assert_allclose(bw, np.full(8, 1.0 / 8.0), atol=1e-14)

    def test_non_nested_meshes_rejected(self):
        trial = p1_space(build_uniform_mesh_1d(4))
        test = p0_space(build_uniform_mesh_1d(6))
        with pytest.raises(ValueError):
            assemble_form(trial, test, mass_kernel)

    def test_p0_tabulation_marks_owner(self):
        coarse_mesh = build_uniform_mesh_1d(2)
        fine_mesh = refine_uniform_1d(coarse_mesh, 3)
        tab = tabulate(p0_space(coarse_mesh), imesh=fine_mesh)
        np.testing.assert_array_equal(tab.dofs[:, 0], [0, 0, 0, 1, 1, 1])


class Test2DAssembly:
    def test_total_area_via_mass(self):
        mesh = build_crisscross_mesh(4)
        space = p1_space_2d(mesh, dirichlet=None)
        M = mass_matrix(space)
        ones = np.ones(space.dim)
        assert abs(ones @ M @ ones - 1.0) < 1e-12

    def test_stiffness_annihilates_constants(self):
        mesh = build_crisscross_mesh(3)
        space = p1_space_2d(mesh, dirichlet=None)
        K = stiffness_matrix(space)
        np.testing.assert_allclose(K @ np.ones(space.dim), 0.0, atol=1e-13)

    def test_2d_advection_kernel(self):
        # (beta . grad u, v) with u = x reproduces (1, v)
        mesh = build_crisscross_mesh(4)
        space = p1_space_2d(mesh, dirichlet=None)
        kern = lambda u, v, x: u.grad[..., 0] * v.value
        A = assemble_form(space, space, kern)
        fn = interpolate(space, lambda x, y: x)
        F = assemble_functional(space, lambda v, x: v.value)
        np.testing.assert_allclose(A @ fn.coeffs, F, atol=1e-13)

    def test_h1_gram_spd(self):
        mesh = build_crisscross_mesh(2)
        space = p1_space_2d(mesh, dirichlet="boundary")
        G = h1_gram(space)
        eigs = np.linalg.eigvalsh(G)
        assert eigs.min() > 0
