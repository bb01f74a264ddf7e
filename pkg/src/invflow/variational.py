"""Curvature Jacobian, alpha-Laplacian spectrum, and the alpha-potential.

Everything here is in log-radius coordinates ``u = ln r``.  The potential
``F~`` has gradient ``K~ - s_alpha r^alpha`` on all of R^N; its value is only
defined up to the base point, at which it vanishes.  Gradients and Hessians
are analytic; potential values come from quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import geometry as geo
from .errors import NotInOmega, ValidationError
from .quadrature import adaptive_gauss_legendre
from .surface import TriangulatedSurface

TWO_PI = geo.TWO_PI


def _angle_length_derivatives(x: np.ndarray) -> np.ndarray:
    """d(theta_i)/d(x_j) for nondegenerate triangles, shape (F, 3, 3).

    d theta_i = x_i / (2A) * (dx_i - cos(theta_k) dx_j - cos(theta_j) dx_k).
    """
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    s1, s2, s3, p = geo._half_angle_parts(x1, x2, x3)
    two_area = 0.5 * np.sqrt(p * s1 * s2 * s3)
    cos = np.stack(
        [
            (x2 * x2 + x3 * x3 - x1 * x1) / (2 * x2 * x3),
            (x1 * x1 + x3 * x3 - x2 * x2) / (2 * x1 * x3),
            (x1 * x1 + x2 * x2 - x3 * x3) / (2 * x1 * x2),
        ],
        axis=1,
    )
    d = np.empty((len(x), 3, 3))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        scale = x[:, i] / two_area
        d[:, i, i] = scale
        d[:, i, j] = -scale * cos[:, k]
        d[:, i, k] = -scale * cos[:, j]
    return d


def _length_log_radius_derivatives(
    surface: TriangulatedSurface, I: np.ndarray, r: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """d(x_k)/d(u_m) per face, shape (F, 3, 3); side k is opposite corner k."""
    rf = r[surface.faces]
    If = I[surface.face_edges]
    d = np.zeros((surface.face_count, 3, 3))
    for k in range(3):
        m, n = (k + 1) % 3, (k + 2) % 3
        cross = rf[:, m] * rf[:, n] * If[:, k]
        d[:, k, m] = (rf[:, m] ** 2 + cross) / x[:, k]
        d[:, k, n] = (rf[:, n] ** 2 + cross) / x[:, k]
    return d


def curvature_jacobian(surface: TriangulatedSurface, inv_dist, r) -> np.ndarray:
    """L = dK/du, assembled face by face; requires ``r`` in Omega."""
    I = geo.as_inversive_distance(surface, inv_dist)
    r = geo.as_radii(surface, r)
    omega = geo.omega_membership(surface, I, r)
    if not omega.in_omega:
        raise NotInOmega(f"faces {omega.violating_faces} violate the triangle inequality")
    x = geo.face_side_lengths(surface, geo.edge_lengths(surface, I, r))
    dtheta = _angle_length_derivatives(x) @ _length_log_radius_derivatives(
        surface, I, r, x
    )
    n = surface.vertex_count
    L = np.zeros((n, n))
    f = surface.faces
    np.add.at(L, (f[:, :, None], f[:, None, :]), -dtheta)
    return L


@dataclass(frozen=True)
class SpectralReport:
    alpha: float
    s_alpha: float
    eigenvalues: np.ndarray  # of Sigma^{-alpha/2} L Sigma^{-alpha/2}, ascending
    kernel_vector: np.ndarray
    euler_characteristic: int

    @property
    def lambda_0(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_1(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def stability_margin(self) -> float:
        return self.lambda_1 - self.alpha * self.s_alpha

    @property
    def stable(self) -> bool:
        return self.stability_margin > 0

    @property
    def guaranteed_by_topology(self) -> bool:
        """alpha * chi <= 0 makes the margin positive without computation."""
        return self.alpha * self.euler_characteristic <= 0

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "s_alpha": self.s_alpha,
            "eigenvalues": self.eigenvalues.tolist(),
            "lambda_0": self.lambda_0,
            "lambda_1": self.lambda_1,
            "alpha_s_alpha": self.alpha * self.s_alpha,
            "stability_margin": self.stability_margin,
            "stable": self.stable,
            "guaranteed_by_topology": self.guaranteed_by_topology,
        }


def spectral_report(
    surface: TriangulatedSurface, inv_dist, r, alpha: float
) -> SpectralReport:
    r = geo.as_radii(surface, r)
    L = curvature_jacobian(surface, inv_dist, r)
    scale = np.exp(-0.5 * alpha * np.log(r))
    lam = scale[:, None] * L * scale[None, :]
    w, v = np.linalg.eigh(0.5 * (lam + lam.T))
    return SpectralReport(
        alpha=float(alpha),
        s_alpha=float(geo.s_alpha(surface, r, alpha)),
        eigenvalues=w,
        kernel_vector=v[:, 0],
        euler_characteristic=surface.euler_characteristic,
    )


def hessian(surface: TriangulatedSurface, inv_dist, u, alpha: float) -> np.ndarray:
    """Hessian of F~ on ln(Omega): L - alpha s (Sigma^a - r^a r^a^T / |r|_a^a)."""
    u = np.asarray(u, dtype=float)
    r = np.exp(u)
    L = curvature_jacobian(surface, inv_dist, r)
    ra = np.exp(alpha * u)
    norm = ra.sum()
    s = TWO_PI * surface.euler_characteristic / norm
    return L - alpha * s * (np.diag(ra) - np.outer(ra, ra) / norm)


def potential_gradient(surface: TriangulatedSurface, inv_dist, u, alpha: float):
    """K~ - s_alpha r^alpha; broadcasts over leading axes of ``u``."""
    r = np.exp(np.asarray(u, dtype=float))
    return geo.extended_curvature(surface, inv_dist, r) - geo.target_curvature(
        surface, r, alpha
    )


def _b_alpha(surface: TriangulatedSurface, u, u0, alpha: float) -> float:
    """B_alpha(u) - B_alpha(u0), accurate relative to |u - u0|.

    ln sum e^{alpha u} - ln sum e^{alpha u0} = log1p(sum w_i expm1(alpha d_i))
    with w the softmax of alpha u0 and d = u - u0; differencing two logsumexp
    values instead would leave an absolute error of order eps however short
    the step, which swamps line-search decreases near a minimum.
    """
    chi = surface.euler_characteristic
    d = np.asarray(u, dtype=float) - np.asarray(u0, dtype=float)
    if alpha == 0:
        return TWO_PI * chi * float(np.mean(d))
    w = np.exp(alpha * u0 - logsumexp(alpha * u0))
    return TWO_PI * chi / alpha * float(np.log1p(w @ np.expm1(alpha * d)))


@dataclass(frozen=True)
class PotentialValue:
    value: float
    gradient: np.ndarray
    face_values: np.ndarray  # F~_ijk per face
    quadrature_error: float
    intervals: int


def _corner_slacks(uf: np.ndarray, If: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Triangle-inequality slacks and perimeters for corner log-radii ``uf``.

    ``uf`` has shape (..., 3) and ``If`` broadcasts against it; ``If[..., k]``
    is the inversive distance on the side opposite corner ``k``.
    """
    r = np.exp(uf)
    x = []
    for k in range(3):
        m, n = (k + 1) % 3, (k + 2) % 3
        rm, rn = r[..., m], r[..., n]
        x.append(np.sqrt(rm * rm + rn * rn + 2.0 * rm * rn * If[..., k]))
    s1, s2, s3, p = geo._half_angle_parts(*x)
    return np.stack([s1, s2, s3], axis=-1), p


def degeneracy_breakpoints(
    u0f: np.ndarray,
    df: np.ndarray,
    If: np.ndarray,
    grid: int = 33,
    resolution: float = 1e-12,
) -> np.ndarray:
    """Parameters t in (0, 1) where a face of ``u0f + t df`` degenerates.

    Arrays have shape (F, 3).  Along the segment each side satisfies
    |dx/dt| <= D x with D = max|df| on the face, and x^2 is a sum of
    exponentials in t, so its maximum over an interval sits at an endpoint.
    A slack therefore has Lipschitz constant D * (largest endpoint perimeter),
    which certifies root-free intervals; the rest are bisected down to
    ``resolution`` and reported by their midpoints.
    """
    u0f = np.atleast_2d(u0f)
    df = np.atleast_2d(df)
    If = np.broadcast_to(If, u0f.shape)
    D = np.max(np.abs(df), axis=-1)
    t = np.linspace(0.0, 1.0, grid)
    S, P = _corner_slacks(u0f[None] + t[:, None, None] * df[None], If[None])
    # candidate (interval, face, corner) triples
    lo_t = np.broadcast_to(t[:-1, None, None], S[:-1].shape)
    hi_t = np.broadcast_to(t[1:, None, None], S[:-1].shape)
    face = np.broadcast_to(np.arange(len(D))[None, :, None], S[:-1].shape)
    corner = np.broadcast_to(np.arange(3)[None, None, :], S[:-1].shape)
    lip = (D[None, :] * np.maximum(P[:-1], P[1:]))[..., None]
    sa, sb = S[:-1], S[1:]
    pending = _uncertified(sa, sb, lip, hi_t - lo_t)
    a, b = lo_t[pending], hi_t[pending]
    f, k = face[pending], corner[pending]
    sa, sb = sa[pending], sb[pending]
    found = []
    while a.size:
        small = (b - a) <= resolution
        found.append(0.5 * (a[small] + b[small]))
        a, b, f, k, sa, sb = (v[~small] for v in (a, b, f, k, sa, sb))
        if not a.size:
            break
        m = 0.5 * (a + b)
        Sm, Pm = _corner_slacks(u0f[f] + m[:, None] * df[f], If[f])
        sm = Sm[np.arange(len(m)), k]
        Pa = _corner_slacks(u0f[f] + a[:, None] * df[f], If[f])[1]
        Pb = _corner_slacks(u0f[f] + b[:, None] * df[f], If[f])[1]
        lip_l = D[f] * np.maximum(Pa, Pm)
        lip_r = D[f] * np.maximum(Pm, Pb)
        keep_l = _uncertified(sa, sm, lip_l, m - a)
        keep_r = _uncertified(sm, sb, lip_r, b - m)
        a = np.concatenate([a[keep_l], m[keep_r]])
        b = np.concatenate([m[keep_l], b[keep_r]])
        f = np.concatenate([f[keep_l], f[keep_r]])
        k = np.concatenate([k[keep_l], k[keep_r]])
        sa, sb = np.concatenate([sa[keep_l], sm[keep_r]]), np.concatenate(
            [sm[keep_l], sb[keep_r]]
        )
    if not found:
        return np.empty(0)
    pts = np.unique(np.concatenate(found))
    return pts[(pts > 0.0) & (pts < 1.0)]


def _uncertified(sa, sb, lip, width):
    """True where a Lipschitz function with these endpoint values may vanish."""
    mean = 0.5 * (sa + sb)
    reach = 0.5 * lip * width
    return (mean - reach <= 0) & (mean + reach >= 0)


def face_potentials(
    surface: TriangulatedSurface,
    inv_dist,
    u,
    base_point,
    atol: float = 1e-10,
) -> tuple[np.ndarray, float, int]:
    """Per-face integrals of the extended angle 1-form along [base, u]."""
    I = geo.as_inversive_distance(surface, inv_dist)
    u = np.asarray(u, dtype=float)
    u0 = np.asarray(base_point, dtype=float)
    d = u - u0
    d_face = d[surface.faces]  # (F, 3)
    if not np.any(d):
        return np.zeros(surface.face_count), 0.0, 0

    def integrand(s):
        r = np.exp(u0[None, :] + s[:, None] * d[None, :])
        ang = geo.face_angles(surface, geo.edge_lengths(surface, I, r))
        return (ang * d_face[None]).sum(axis=-1)

    kinks = degeneracy_breakpoints(u0[surface.faces], d_face, I[surface.face_edges])
    vals, err, n = adaptive_gauss_legendre(
        integrand, 0.0, 1.0, atol=atol, breakpoints=kinks
    )
    return vals, err, n


def potential(
    surface: TriangulatedSurface,
    inv_dist,
    u,
    alpha: float,
    base_point=None,
    atol: float = 1e-10,
) -> PotentialValue:
    """Extended alpha-potential F~(u) = A(u) - B_alpha(u) - sum F~_ijk(u).

    ``base_point`` defaults to the origin; the potential vanishes there.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (surface.vertex_count,):
        raise ValidationError(f"expected {surface.vertex_count} log-radii")
    u0 = np.zeros_like(u) if base_point is None else np.asarray(base_point, float)
    faces, err, n = face_potentials(surface, inv_dist, u, u0, atol=atol)
    value = (
        TWO_PI * float(np.sum(u - u0))
        - _b_alpha(surface, u, u0, alpha)
        - float(faces.sum())
    )
    return PotentialValue(
        value=value,
        gradient=potential_gradient(surface, inv_dist, u, alpha),
        face_values=faces,
        quadrature_error=err,
        intervals=n,
    )


def triangle_angles(u3, inv3) -> np.ndarray:
    """Extended angles of a lone triangle from corner log-radii.

    ``inv3[k]`` is the inversive distance on the side opposite corner ``k``.
    Broadcasts over leading axes of ``u3``.
    """
    r = np.exp(np.asarray(u3, dtype=float))
    I = np.asarray(inv3, dtype=float)
    x = []
    for k in range(3):
        m, n = (k + 1) % 3, (k + 2) % 3
        rm, rn = r[..., m], r[..., n]
        x.append(np.sqrt(rm * rm + rn * rn + 2 * rm * rn * I[k]))
    return geo.extended_angles(*x)


def triangle_potential(u3, inv3, base3=(0.0, 0.0, 0.0), atol: float = 1e-12) -> float:
    """F~_ijk for a single triangle: integral of sum_k theta_k du_k."""
    u3 = np.asarray(u3, dtype=float)
    b = np.asarray(base3, dtype=float)
    d = u3 - b
    if not np.any(d):
        return 0.0

    def integrand(s):
        return triangle_angles(b[None, :] + s[:, None] * d[None, :], inv3) @ d

    kinks = degeneracy_breakpoints(b[None], d[None], np.asarray(inv3, float)[None])
    val, _, _ = adaptive_gauss_legendre(
        integrand, 0.0, 1.0, atol=atol, breakpoints=kinks
    )
    return float(val)


def convexity_guaranteed(surface: TriangulatedSurface, alpha: float) -> bool:
    return alpha * surface.euler_characteristic <= 0
