"""Edge lengths, extended angles and curvatures of inversive distance packings.

Radii live on vertices, inversive distances on edges (canonical edge order of
:class:`~invflow.surface.TriangulatedSurface`).  Edge lengths are

    l_ij = sqrt(r_i^2 + r_j^2 + 2 r_i r_j I_ij)

and the inner angle of a face at a corner is the clamped arccos of the
cosine-law quotient, so degenerate faces get angles ``(pi, 0, 0)`` and the
curvature is defined for every positive radius vector.

Most functions broadcast over leading axes: a radius array of shape
``(..., N)`` yields lengths ``(..., E)``, angles ``(..., F, 3)`` and
curvatures ``(..., N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveLength, NonPositiveRadius, ValidationError
from .surface import TriangulatedSurface

TWO_PI = 2.0 * math.pi


def as_inversive_distance(surface: TriangulatedSurface, inv_dist) -> np.ndarray:
    """Broadcast a scalar or validate a per-edge array of inversive distances."""
    arr = np.asarray(inv_dist, dtype=float)
    if arr.ndim == 0:
        arr = np.full(surface.edge_count, float(arr))
    if arr.shape != (surface.edge_count,):
        raise ValidationError(
            f"expected {surface.edge_count} inversive distances, got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValidationError("inversive distances must be finite and >= 0")
    return arr


def as_radii(surface: TriangulatedSurface, r) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if arr.shape[-1:] != (surface.vertex_count,):
        raise ValidationError(
            f"expected {surface.vertex_count} radii, got shape {arr.shape}"
        )
    if not np.all(arr > 0) or not np.all(np.isfinite(arr)):
        raise NonPositiveRadius("radii must be finite and strictly positive")
    return arr


def radii_from_log(u) -> np.ndarray:
    return np.exp(np.asarray(u, dtype=float))


def log_radii(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if not np.all(r > 0):
        raise NonPositiveRadius("radii must be strictly positive")
    return np.log(r)


def edge_lengths(surface: TriangulatedSurface, inv_dist, r) -> np.ndarray:
    I = as_inversive_distance(surface, inv_dist)
    r = as_radii(surface, r)
    ri = r[..., surface.edges[:, 0]]
    rj = r[..., surface.edges[:, 1]]
    return np.sqrt(ri * ri + rj * rj + 2.0 * ri * rj * I)


def lambda_clamp(x):
    """pi for x <= -1, arccos(x) on [-1, 1], 0 for x >= 1."""
    return np.arccos(np.clip(x, -1.0, 1.0))


def _half_angle_parts(x1, x2, x3):
    s1 = x2 + x3 - x1
    s2 = x1 + x3 - x2
    s3 = x1 + x2 - x3
    return s1, s2, s3, x1 + x2 + x3


def extended_angles(x1, x2, x3) -> np.ndarray:
    """Angles opposite sides ``x1, x2, x3`` of a generalized triangle.

    Equal to ``lambda_clamp`` of the cosine-law quotient.  We evaluate it
    through the half-angle identities

        1 - cos(t1) = s2 s3 / (2 x2 x3),   1 + cos(t1) = s1 p / (2 x2 x3)

    with ``s_i`` the triangle-inequality slacks and ``p`` the perimeter, so
    ``t1 = 2 atan2(sqrt(s2 s3), sqrt(s1 p))`` once negative slacks are clamped
    to zero.  Sharing the slacks makes the three angles sum to pi to within a
    few ulps, including the degenerate case where they are ``(pi, 0, 0)``.
    Returns an array of shape ``(..., 3)``.
    """
    x1, x2, x3 = np.broadcast_arrays(
        np.asarray(x1, float), np.asarray(x2, float), np.asarray(x3, float)
    )
    if np.any(x1 <= 0) or np.any(x2 <= 0) or np.any(x3 <= 0):
        raise NonPositiveLength("edge lengths must be strictly positive")
    s1, s2, s3, p = _half_angle_parts(x1, x2, x3)
    s1, s2, s3 = (np.maximum(s, 0.0) for s in (s1, s2, s3))
    t1 = 2.0 * np.arctan2(np.sqrt(s2 * s3), np.sqrt(s1 * p))
    t2 = 2.0 * np.arctan2(np.sqrt(s1 * s3), np.sqrt(s2 * p))
    t3 = 2.0 * np.arctan2(np.sqrt(s1 * s2), np.sqrt(s3 * p))
    return np.stack([t1, t2, t3], axis=-1)


def face_side_lengths(surface: TriangulatedSurface, lengths) -> np.ndarray:
    """(..., F, 3) length of the side opposite each face corner."""
    return np.asarray(lengths)[..., surface.face_edges]


def face_angles(surface: TriangulatedSurface, lengths) -> np.ndarray:
    x = face_side_lengths(surface, lengths)
    return extended_angles(x[..., 0], x[..., 1], x[..., 2])


def _sum_corners(surface: TriangulatedSurface, corner_values) -> np.ndarray:
    flat = np.asarray(corner_values).reshape(
        corner_values.shape[:-2] + (3 * surface.face_count,)
    )
    if flat.ndim == 1:
        return surface.corner_to_vertex @ flat
    lead = flat.shape[:-1]
    out = surface.corner_to_vertex @ flat.reshape(-1, flat.shape[-1]).T
    return np.asarray(out.T).reshape(lead + (surface.vertex_count,))


def extended_curvature(surface: TriangulatedSurface, inv_dist, r) -> np.ndarray:
    """K~_i = 2 pi - (sum of extended angles at i); shape ``(..., N)``."""
    angles = face_angles(surface, edge_lengths(surface, inv_dist, r))
    return TWO_PI - _sum_corners(surface, angles)


def alpha_norm(r, alpha: float) -> np.ndarray:
    """sum_i r_i^alpha, computed as sum exp(alpha ln r_i)."""
    return np.exp(alpha * np.log(r)).sum(axis=-1)


def s_alpha(surface: TriangulatedSurface, r, alpha: float):
    return TWO_PI * surface.euler_characteristic / alpha_norm(r, alpha)


def target_curvature(surface: TriangulatedSurface, r, alpha: float) -> np.ndarray:
    """s_alpha r^alpha: the curvature a constant alpha-curvature metric has."""
    ra = np.exp(alpha * np.log(r))
    s = TWO_PI * surface.euler_characteristic / ra.sum(axis=-1, keepdims=True)
    return s * ra


def face_slacks(surface: TriangulatedSurface, lengths) -> np.ndarray:
    """(..., F, 3) triangle-inequality slack ``x_j + x_k - x_i`` per corner."""
    x = face_side_lengths(surface, lengths)
    s1, s2, s3, _ = _half_angle_parts(x[..., 0], x[..., 1], x[..., 2])
    return np.stack([s1, s2, s3], axis=-1)


def relative_face_slack(surface: TriangulatedSurface, lengths) -> np.ndarray:
    """(..., F) smallest slack of each face divided by its longest side."""
    x = face_side_lengths(surface, lengths)
    return face_slacks(surface, lengths).min(axis=-1) / x.max(axis=-1)


@dataclass(frozen=True)
class OmegaDiagnostics:
    in_omega: bool
    face_admissible: np.ndarray  # (F,) bool
    slacks: np.ndarray  # (F, 3)
    relative_slack: np.ndarray  # (F,)
    violating_faces: tuple[int, ...]
    near_boundary_faces: tuple[int, ...]

    def __bool__(self) -> bool:
        return self.in_omega


def omega_membership(
    surface: TriangulatedSurface, inv_dist, r, belt: float = 0.0
) -> OmegaDiagnostics:
    """Check strict triangle inequalities on every face.

    ``belt`` only widens the ``near_boundary_faces`` diagnostic (faces whose
    relative slack is at most ``belt``); membership itself is exact.
    """
    lengths = edge_lengths(surface, inv_dist, r)
    slacks = face_slacks(surface, lengths)
    admissible = np.all(slacks > 0, axis=-1)
    rel = slacks.min(axis=-1) / face_side_lengths(surface, lengths).max(axis=-1)
    return OmegaDiagnostics(
        in_omega=bool(admissible.all()),
        face_admissible=admissible,
        slacks=slacks,
        relative_slack=rel,
        violating_faces=tuple(int(f) for f in np.flatnonzero(~admissible)),
        near_boundary_faces=tuple(
            int(f) for f in np.flatnonzero(admissible & (rel <= belt))
        ),
    )


@dataclass(frozen=True)
class CurvatureReport:
    edge_lengths: np.ndarray
    face_admissible: np.ndarray
    in_omega: bool
    classical_curvature: np.ndarray
    alpha: float
    alpha_curvature: np.ndarray
    s_alpha: float
    euler_characteristic: int
    radii: np.ndarray

    @property
    def gauss_bonnet_sum(self) -> float:
        return float(self.classical_curvature.sum())

    @property
    def residual(self) -> np.ndarray:
        """K~ - s_alpha r^alpha, the negated flow field."""
        return self.classical_curvature - self.s_alpha * self.radii**self.alpha

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "in_omega": self.in_omega,
            "edge_lengths": self.edge_lengths.tolist(),
            "face_admissible": self.face_admissible.tolist(),
            "curvature": self.classical_curvature.tolist(),
            "alpha_curvature": self.alpha_curvature.tolist(),
            "s_alpha": self.s_alpha,
            "residual_inf": float(np.max(np.abs(self.residual))),
            "gauss_bonnet": self.gauss_bonnet_sum,
            "two_pi_chi": TWO_PI * self.euler_characteristic,
            "max_alpha_curvature_deviation": float(
                np.max(np.abs(self.alpha_curvature - self.s_alpha))
            ),
        }


def curvature_report(
    surface: TriangulatedSurface, inv_dist, r, alpha: float
) -> CurvatureReport:
    r = as_radii(surface, r)
    if r.ndim != 1:
        raise ValidationError("curvature_report takes a single radius vector")
    lengths = edge_lengths(surface, inv_dist, r)
    slacks = face_slacks(surface, lengths)
    admissible = np.all(slacks > 0, axis=-1)
    k = TWO_PI - _sum_corners(surface, face_angles(surface, lengths))
    ra = np.exp(alpha * np.log(r))
    return CurvatureReport(
        edge_lengths=lengths,
        face_admissible=admissible,
        in_omega=bool(admissible.all()),
        classical_curvature=k,
        alpha=float(alpha),
        alpha_curvature=k / ra,
        s_alpha=float(TWO_PI * surface.euler_characteristic / ra.sum()),
        euler_characteristic=surface.euler_characteristic,
        radii=r,
    )
