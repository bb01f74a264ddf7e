import math

import numpy as np
import pytest
from scipy.special import logsumexp

from invflow import geometry as geo
from invflow import variational as var
from invflow.errors import NotInOmega
from invflow.meshes import icosahedron, octahedron, tetrahedron, torus7

from conftest import omega_point

PI = math.pi


def fd_jacobian(surface, I, u, h=1e-5):
    n = surface.vertex_count
    J = np.empty((n, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        J[:, m] = (
            geo.extended_curvature(surface, I, np.exp(u + e))
            - geo.extended_curvature(surface, I, np.exp(u - e))
        ) / (2 * h)
    return J


def test_jacobian_matches_finite_differences(mesh, rng):
    for _ in range(10):
        I, u = omega_point(mesh, rng)
        L = var.curvature_jacobian(mesh, I, np.exp(u))
        J = fd_jacobian(mesh, I, u)
        assert np.linalg.norm(L - J) / np.linalg.norm(J) < 1e-6
        assert np.max(np.abs(L - L.T)) < 1e-12
        assert np.max(np.abs(L @ np.ones(mesh.vertex_count))) < 1e-10
        w = np.linalg.eigvalsh(L)
        assert np.sum(np.abs(w) < 1e-8) == 1
        assert np.all(w[1:] > 1e-8)


def test_tetrahedron_jacobian_structure():
    s = tetrahedron()
    L = var.curvature_jacobian(s, 0.0, np.ones(4))
    J = fd_jacobian(s, np.zeros(6), np.zeros(4))
    a = J[0, 0]
    b = -J[0, 1]
    assert a == pytest.approx(3 * b, rel=1e-8)
    expected = (a + b) * np.eye(4) - b * np.ones((4, 4))
    np.testing.assert_allclose(L, expected, atol=1e-8)


def test_jacobian_refuses_outside_omega():
    s = tetrahedron()
    I = np.zeros(6)
    I[s.edge_index(0, 1)] = 100.0
    with pytest.raises(NotInOmega):
        var.curvature_jacobian(s, I, np.ones(4))
    with pytest.raises(NotInOmega):
        var.spectral_report(s, I, np.ones(4), 0.0)


@pytest.mark.parametrize("alpha", [-2.0, 0.0, 1.0, 3.0])
def test_torus_spectrum_margin_is_lambda1(alpha):
    rep = var.spectral_report(torus7(), 0.5, np.ones(7), alpha)
    assert rep.s_alpha == 0.0
    assert rep.stability_margin == rep.lambda_1 > 0
    assert rep.stable and rep.guaranteed_by_topology


def test_tetrahedron_spectrum_alpha_zero():
    rep = var.spectral_report(tetrahedron(), 0.0, np.ones(4), 0.0)
    L = var.curvature_jacobian(tetrahedron(), 0.0, np.ones(4))
    assert rep.stability_margin == pytest.approx(np.linalg.eigvalsh(L)[1], rel=1e-12)
    assert rep.stable


def test_unit_radii_alpha_laplacian_equals_jacobian(mesh, rng):
    I, _ = omega_point(mesh, rng)
    L = var.curvature_jacobian(mesh, I, np.ones(mesh.vertex_count))
    for alpha in (-1.0, 2.5):
        rep = var.spectral_report(mesh, I, np.ones(mesh.vertex_count), alpha)
        np.testing.assert_allclose(rep.eigenvalues, np.linalg.eigvalsh(L), atol=1e-12)


def test_kernel_vector_parallel_to_r_alpha(mesh, rng):
    I, u = omega_point(mesh, rng)
    for alpha in (-1.0, 0.0, 1.5):
        rep = var.spectral_report(mesh, I, np.exp(u), alpha)
        assert abs(rep.lambda_0) < 1e-8
        target = np.exp(0.5 * alpha * u)
        cos = abs(rep.kernel_vector @ target) / np.linalg.norm(target)
        assert cos > 1 - 1e-8
        assert rep.lambda_1 > 0


def test_sphere_alpha_sweep_finds_unstable_alpha():
    s = icosahedron()
    r = np.ones(12)
    verdicts = []
    for alpha in np.arange(0.0, 10.01, 0.5):
        rep = var.spectral_report(s, 0.0, r, alpha)
        verdicts.append((alpha, rep.stable))
    assert verdicts[0][1]
    unstable = [a for a, ok in verdicts if not ok]
    assert unstable, "no alpha with alpha*s_alpha > lambda_1 in the sweep"
    rep = var.spectral_report(s, 0.0, r, unstable[0])
    assert rep.stability_margin < 0 and not rep.guaranteed_by_topology


def test_lambda1_scale_invariant_at_alpha_zero(mesh, rng):
    I, u = omega_point(mesh, rng)
    a = var.spectral_report(mesh, I, np.exp(u), 0.0).lambda_1
    b = var.spectral_report(mesh, I, 5.0 * np.exp(u), 0.0).lambda_1
    assert b == pytest.approx(a, rel=1e-10)


def test_hessian_examples(mesh, rng):
    I, u = omega_point(mesh, rng)
    L = var.curvature_jacobian(mesh, I, np.exp(u))
    np.testing.assert_array_equal(var.hessian(mesh, I, u, 0.0), L)
    for alpha in (-1.0, 0.7):
        H = var.hessian(mesh, I, u, alpha)
        assert np.max(np.abs(H @ np.ones(mesh.vertex_count))) < 1e-10
        if alpha * mesh.euler_characteristic <= 0:
            w = np.linalg.eigvalsh(H)
            assert np.sum(np.abs(w) < 1e-8) == 1 and np.all(w[1:] > 0)


def test_hessian_is_gradient_jacobian(mesh, rng):
    I, u = omega_point(mesh, rng)
    alpha = 0.8
    h = 1e-6
    n = mesh.vertex_count
    fd = np.empty((n, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        fd[:, m] = (
            var.potential_gradient(mesh, I, u + e, alpha)
            - var.potential_gradient(mesh, I, u - e, alpha)
        ) / (2 * h)
    H = var.hessian(mesh, I, u, alpha)
    assert np.linalg.norm(H - fd) / np.linalg.norm(fd) < 1e-5


def test_potential_vanishes_at_base_and_along_diagonal(mesh, rng):
    I, u0 = omega_point(mesh, rng)
    assert var.potential(mesh, I, u0, 0.5, base_point=u0).value == 0.0
    for t in (0.5, -0.5, 1.0, -1.0):
        for alpha in (0.0, -1.0, 1.0):
            val = var.potential(mesh, I, u0 + t, alpha, base_point=u0).value
            assert abs(val) < 1e-9


def test_potential_gradient_matches_finite_differences(mesh, rng):
    alpha = 0.5
    h = 1e-4
    for _ in range(5):
        I = rng.uniform(0, 3, mesh.edge_count)  # may include non-Omega points
        u = rng.uniform(-1, 1, mesh.vertex_count)
        g = var.potential_gradient(mesh, I, u, alpha)
        fd = np.empty_like(g)
        for m in range(mesh.vertex_count):
            e = np.zeros_like(u)
            e[m] = h
            fp = var.potential(mesh, I, u + e, alpha, atol=1e-13).value
            fm = var.potential(mesh, I, u - e, alpha, atol=1e-13).value
            fd[m] = (fp - fm) / (2 * h)
        assert np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-3) < 1e-5
        assert abs(g.sum()) < 1e-10


def test_path_independence(mesh, rng):
    I = rng.uniform(0, 2, mesh.edge_count)
    a, b, c = (rng.uniform(-1, 1, mesh.vertex_count) for _ in range(3))
    alpha = -0.5
    direct = var.potential(mesh, I, c, alpha, base_point=a).value
    chained = (
        var.potential(mesh, I, b, alpha, base_point=a).value
        + var.potential(mesh, I, c, alpha, base_point=b).value
    )
    assert direct == pytest.approx(chained, abs=1e-9)


def test_b_alpha_limit():
    s = octahedron()
    rng = np.random.default_rng(3)
    u, u0 = rng.normal(size=6), rng.normal(size=6)
    b0 = var._b_alpha(s, u, u0, 0.0)
    for alpha in (1e-4, -1e-4):
        assert var._b_alpha(s, u, u0, alpha) == pytest.approx(b0, abs=1e-3)
    direct = 2 * PI * 2 / 0.3 * (logsumexp(0.3 * u) - logsumexp(0.3 * u0))
    assert var._b_alpha(s, u, u0, 0.3) == pytest.approx(direct, rel=1e-14)


@pytest.mark.parametrize("factory, alpha", [(torus7, 1.0), (torus7, -1.0),
                                           (icosahedron, 0.0), (icosahedron, -1.0)])
def test_midpoint_convexity(factory, alpha):
    s = factory()
    rng = np.random.default_rng(11)
    I = rng.uniform(0, 3, s.edge_count)
    violations = 0
    for _ in range(40):
        a = rng.uniform(-2, 2, s.vertex_count)
        b = rng.uniform(-2, 2, s.vertex_count)
        fa = var.potential(s, I, a, alpha).value
        fb = var.potential(s, I, b, alpha).value
        fm = var.potential(s, I, 0.5 * (a + b), alpha).value
        violations += fm > 0.5 * (fa + fb) + 1e-9
    assert violations == 0


def test_face_potential_concave():
    rng = np.random.default_rng(5)
    for _ in range(100):
        I = rng.uniform(0, 5, 3)
        a = rng.uniform(-2, 2, 3)
        b = rng.uniform(-2, 2, 3)
        fa = var.triangle_potential(a, I)
        fb = var.triangle_potential(b, I)
        fm = var.triangle_potential(0.5 * (a + b), I)
        assert fm >= 0.5 * (fa + fb) - 1e-9


def test_triangle_angles_match_surface_angles():
    s = tetrahedron()
    rng = np.random.default_rng(2)
    I = rng.uniform(0, 4, 6)
    u = rng.normal(size=4)
    ang = geo.face_angles(s, geo.edge_lengths(s, I, np.exp(u)))
    for f, tri in enumerate(s.faces):
        np.testing.assert_allclose(
            var.triangle_angles(u[tri], I[s.face_edges[f]]), ang[f], atol=1e-15
        )


def test_gradient_vanishes_at_fixed_point():
    s = tetrahedron()
    g = var.potential_gradient(s, 0.0, np.zeros(4), 0.0)
    assert np.max(np.abs(g)) < 1e-10
    g = var.potential_gradient(torus7(), 0.5, np.zeros(7), 2.0)
    assert np.max(np.abs(g)) < 1e-10


def test_convexity_flag():
    assert var.convexity_guaranteed(torus7(), 5.0)
    assert var.convexity_guaranteed(icosahedron(), -1.0)
    assert not var.convexity_guaranteed(icosahedron(), 1.0)
