"""Combinatorial-topological constraints on achievable curvature vectors.

For a nonempty proper vertex subset ``A`` the half-space ``Y_A`` asks

    sum_{i in A} x_i  >  -sum_{(e, v) in Lk(A)} (pi - Lambda(I_e)) + 2 pi chi(F_A)

where ``F_A`` is the full subcomplex on ``A`` and ``Lk(A)`` pairs a vertex of
``A`` with the opposite edge of a face whose other two vertices avoid ``A``.
Curvatures of admissible metrics lie in ``Y`` (all ``Y_A`` plus the
Gauss-Bonnet hyperplane); extended curvatures lie in its closure.

Subsets are evaluated in bulk as boolean masks; :func:`subset_rows` is the
slow, explicit path through :func:`~invflow.surface.subcomplex_summary`.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import geometry as geo
from .errors import SubsetBudgetExceeded, ValidationError
from .surface import TriangulatedSurface, subcomplex_summary

PI = math.pi
EXHAUSTIVE_LIMIT = 22
CHUNK = 1 << 15

EXPONENT_NOTE = (
    "candidate lhs is sum_A s_alpha r_i^alpha = 2 pi chi sum_A r_i^alpha / "
    "||r||_alpha^alpha (radii raised to alpha, matching K_i = s_alpha r_i^alpha)"
)


@dataclass(frozen=True)
class SubsetRow:
    subset: tuple[int, ...]
    euler_characteristic: int
    link_count: int
    rhs: float
    lhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    def to_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "chi": self.euler_characteristic,
            "link_count": self.link_count,
            "rhs": self.rhs,
            "lhs": self.lhs,
            "margin": self.margin,
        }


@dataclass
class ObstructionReport:
    verdict: str  # InY | OnBoundary | Violated
    gauss_bonnet_check: float
    subsets_examined: int
    mode: str
    condition: str  # "strict" (Y) or "closure" (closure of Y)
    tolerance: float
    worst: list[SubsetRow]
    violations: list[tuple[int, ...]] = field(default_factory=list)
    rows: list[SubsetRow] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def min_margin(self) -> float:
        return min(r.margin for r in self.worst) if self.worst else math.inf

    @property
    def consistent(self) -> bool:
        """Verdict compatible with the requested condition."""
        if self.condition == "strict":
            return self.verdict == "InY"
        return self.verdict in ("InY", "OnBoundary")

    def to_dict(self, full_table: bool = False) -> dict:
        out = {
            "verdict": self.verdict,
            "condition": self.condition,
            "consistent": self.consistent,
            "gauss_bonnet_check": self.gauss_bonnet_check,
            "subsets_examined": self.subsets_examined,
            "mode": self.mode,
            "tolerance": self.tolerance,
            "min_margin": self.min_margin,
            "worst": [r.to_dict() for r in self.worst],
            "violations": [list(v) for v in self.violations],
            "notes": list(self.notes),
        }
        if full_table and self.rows is not None:
            out["rows"] = [r.to_dict() for r in self.rows]
        return out

    def summary(self) -> str:
        lines = [
            f"verdict: {self.verdict} ({self.condition} condition, "
            f"{self.subsets_examined} subsets, {self.mode})",
            f"gauss-bonnet residual: {self.gauss_bonnet_check:.3e}",
            "smallest margins:",
        ]
        for r in self.worst:
            lines.append(
                f"  A={list(r.subset)} chi={r.euler_characteristic} "
                f"|Lk|={r.link_count} lhs={r.lhs:.6f} rhs={r.rhs:.6f} "
                f"margin={r.margin:.3e}"
            )
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


def link_weight(inv_dist) -> np.ndarray:
    """pi - Lambda(I_e) for each edge."""
    return PI - geo.lambda_clamp(np.asarray(inv_dist, dtype=float))


class SubsetEvaluator:
    """Bulk evaluation of chi(F_A), |Lk(A)| and the Y_A bound over masks."""

    def __init__(self, surface: TriangulatedSurface, inv_dist):
        self.surface = surface
        I = geo.as_inversive_distance(surface, inv_dist)
        self.corner_weight = link_weight(I)[surface.face_edges]  # (F, 3)

    def evaluate(self, masks: np.ndarray):
        s = self.surface
        m = np.asarray(masks, dtype=bool)
        nv = m.sum(axis=1)
        ne = (m[:, s.edges[:, 0]] & m[:, s.edges[:, 1]]).sum(axis=1)
        corner = m[:, s.faces]  # (S, F, 3)
        per_face = corner.sum(axis=2)
        nf = (per_face == 3).sum(axis=1)
        lone = corner & (per_face == 1)[:, :, None]
        link_count = lone.sum(axis=(1, 2))
        link_sum = (lone * self.corner_weight[None]).sum(axis=(1, 2))
        chi = nv - ne + nf
        rhs = -link_sum + 2 * PI * chi
        return chi, link_count, rhs


def _masks_from_ints(codes: np.ndarray, n: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)


def _mask_chunks(n: int, mode: str, samples: int, seed: int):
    if mode == "exhaustive":
        if n > EXHAUSTIVE_LIMIT:
            raise SubsetBudgetExceeded(
                f"exhaustive audit needs N <= {EXHAUSTIVE_LIMIT}, got N={n}"
            )
        top = (1 << n) - 1
        for start in range(1, top, CHUNK):
            codes = np.arange(start, min(start + CHUNK, top), dtype=np.int64)
            yield _masks_from_ints(codes, n)
        return
    eye = np.eye(n, dtype=bool)
    yield eye
    yield ~eye
    rng = np.random.default_rng(seed)
    left = samples
    while left > 0:
        k = min(left, CHUNK)
        m = rng.random((k, n)) < 0.5
        bad = (m.sum(axis=1) == 0) | (m.sum(axis=1) == n)
        while bad.any():
            m[bad] = rng.random((int(bad.sum()), n)) < 0.5
            bad = (m.sum(axis=1) == 0) | (m.sum(axis=1) == n)
        yield m
        left -= k


def audit_curvature_vector(
    surface: TriangulatedSurface,
    inv_dist,
    x,
    mode: str = "exhaustive",
    samples: int = 0,
    tolerance: float = 1e-9,
    condition: str = "strict",
    seed: int = 0,
    keep_rows: bool = False,
    worst_count: int = 10,
) -> ObstructionReport:
    """Check ``x`` against every selected Y_A and the Gauss-Bonnet hyperplane.

    ``mode`` is ``"exhaustive"`` (all 2^N - 2 subsets, N <= 22) or
    ``"sampled"`` (``samples`` random subsets plus every singleton and every
    singleton complement).
    """
    if mode not in ("exhaustive", "sampled"):
        raise ValidationError(f"unknown mode {mode!r}")
    if condition not in ("strict", "closure"):
        raise ValidationError(f"unknown condition {condition!r}")
    x = np.asarray(x, dtype=float)
    n = surface.vertex_count
    if x.shape != (n,):
        raise ValidationError(f"expected {n} curvature values")
    ev = SubsetEvaluator(surface, inv_dist)
    gb = abs(float(x.sum()) - 2 * PI * surface.euler_characteristic)

    heap: list[tuple[float, int, SubsetRow]] = []
    rows: list[SubsetRow] | None = [] if keep_rows else None
    examined = 0
    for masks in _mask_chunks(n, mode, samples, seed):
        chi, lk, rhs = ev.evaluate(masks)
        lhs = masks.astype(float) @ x
        margin = lhs - rhs
        if keep_rows:
            idx = range(len(masks))
        else:
            idx = np.argsort(margin, kind="stable")[:worst_count]
        for k in idx:
            row = SubsetRow(
                subset=tuple(int(v) for v in np.flatnonzero(masks[k])),
                euler_characteristic=int(chi[k]),
                link_count=int(lk[k]),
                rhs=float(rhs[k]),
                lhs=float(lhs[k]),
            )
            if rows is not None:
                rows.append(row)
            item = (-row.margin, examined + int(k), row)
            if len(heap) < worst_count:
                heapq.heappush(heap, item)
            elif item[0] > heap[0][0]:
                heapq.heapreplace(heap, item)
        examined += len(masks)

    worst = [row for _, _, row in sorted(heap, key=lambda t: (-t[0], t[1]))]
    min_margin = worst[0].margin if worst else math.inf
    violations: list[tuple[int, ...]] = []
    if gb >= tolerance:
        verdict = "Violated"
        violations.append(())
    elif min_margin < -tolerance:
        verdict = "Violated"
        violations = [r.subset for r in worst if r.margin < -tolerance]
    elif min_margin <= tolerance:
        verdict = "OnBoundary"
    else:
        verdict = "InY"
    notes = []
    if gb >= tolerance:
        notes.append("sum of x differs from 2 pi chi (hyperplane violated)")
    return ObstructionReport(
        verdict=verdict,
        gauss_bonnet_check=gb,
        subsets_examined=examined,
        mode=mode if mode == "exhaustive" else f"sampled({samples})",
        condition=condition,
        tolerance=tolerance,
        worst=worst,
        violations=violations,
        rows=rows,
        notes=notes,
    )


def audit_constant_curvature_candidate(
    surface: TriangulatedSurface,
    inv_dist,
    r,
    alpha: float,
    **kwargs,
) -> ObstructionReport:
    """Audit x = s_alpha r^alpha, strict if ``r`` is in Omega else closure."""
    r = geo.as_radii(surface, r)
    x = geo.target_curvature(surface, r, alpha)
    strict = geo.omega_membership(surface, inv_dist, r).in_omega
    report = audit_curvature_vector(
        surface, inv_dist, x, condition="strict" if strict else "closure", **kwargs
    )
    report.notes.insert(0, EXPONENT_NOTE)
    return report


def subset_rows(
    surface: TriangulatedSurface, inv_dist, x, subsets: Iterable[Iterable[int]]
) -> list[SubsetRow]:
    """Explicit per-subset evaluation via :func:`subcomplex_summary`."""
    w = link_weight(geo.as_inversive_distance(surface, inv_dist))
    x = np.asarray(x, dtype=float)
    out = []
    for a in subsets:
        summary = subcomplex_summary(surface, a)
        rhs = -sum(w[e] for e, _ in summary.link_pairs) + 2 * PI * summary.euler_characteristic
        out.append(
            SubsetRow(
                subset=summary.subset,
                euler_characteristic=summary.euler_characteristic,
                link_count=len(summary.link_pairs),
                rhs=float(rhs),
                lhs=float(x[list(summary.subset)].sum()),
            )
        )
    return out


@dataclass
class SignFeasibility:
    status: str  # Feasible | Infeasible | Unresolved
    sign: int  # +1, -1 or 0: the orthant probed
    witness: np.ndarray | None
    best_margin: float
    blocking_subsets: list[tuple[int, ...]]
    method: str
    heuristic: bool = True

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "sign": self.sign,
            "witness": None if self.witness is None else self.witness.tolist(),
            "best_margin": self.best_margin,
            "blocking_subsets": [list(a) for a in self.blocking_subsets],
            "method": self.method,
            "heuristic": self.heuristic,
        }


def _all_subsets(surface: TriangulatedSurface, inv_dist):
    n = surface.vertex_count
    if n > EXHAUSTIVE_LIMIT:
        raise SubsetBudgetExceeded(f"sign feasibility needs N <= {EXHAUSTIVE_LIMIT}")
    ev = SubsetEvaluator(surface, inv_dist)
    masks, rhs = [], []
    for m in _mask_chunks(n, "exhaustive", 0, 0):
        masks.append(m)
        rhs.append(ev.evaluate(m)[2])
    return np.concatenate(masks), np.concatenate(rhs)


def _project_shifted_simplex(y: np.ndarray, total: float, floor: float) -> np.ndarray:
    """Euclidean projection onto {z : sum z = total, z >= floor}."""
    n = len(y)
    budget = total - n * floor
    v = y - floor
    mu = np.sort(v)[::-1]
    cssv = np.cumsum(mu) - budget
    ind = np.arange(1, n + 1)
    rho = ind[mu - cssv / ind > 0][-1]
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0) + floor


def sign_feasibility(
    surface: TriangulatedSurface,
    inv_dist,
    iterations: int = 10_000,
    floor: float = 1e-3,
    step: float = 0.5,
    tolerance: float = 1e-9,
) -> SignFeasibility:
    """Probe whether Y meets the orthant matching the sign of chi.

    chi = 0 tests x = 0 exactly.  Otherwise a sum-bound certificate is tried
    first (a subset whose bound no vector of that sign can exceed), then the
    smallest Y_A margin is maximised by projected subgradient ascent over
    ``{sum x = 2 pi chi, sign * x >= floor}``.
    """
    chi = surface.euler_characteristic
    masks, rhs = _all_subsets(surface, inv_dist)
    total = 2 * PI * chi
    n = surface.vertex_count

    if chi == 0:
        margin = -rhs
        bad = np.flatnonzero(margin <= tolerance)
        blocking = [tuple(np.flatnonzero(masks[k]).tolist()) for k in bad[:10]]
        return SignFeasibility(
            status="Feasible" if len(bad) == 0 else "Infeasible",
            sign=0,
            witness=np.zeros(n) if len(bad) == 0 else None,
            best_margin=float(margin.min()),
            blocking_subsets=blocking,
            method="direct",
            heuristic=False,
        )

    sign = 1 if chi > 0 else -1
    # positive orthant: sum over a proper A is < total; negative: < 0
    cap = total if sign > 0 else 0.0
    blocked = np.flatnonzero(rhs >= cap - tolerance)
    if len(blocked):
        return SignFeasibility(
            status="Infeasible",
            sign=sign,
            witness=None,
            best_margin=float(cap - rhs.max()),
            blocking_subsets=[
                tuple(np.flatnonzero(masks[k]).tolist()) for k in blocked[:10]
            ],
            method="sum-bound",
        )

    M = masks.astype(float)
    y_total = sign * total
    y = np.full(n, y_total / n)
    best_y, best = y.copy(), -math.inf
    best_k = 0
    for it in range(iterations):
        margins = sign * (M @ y) - rhs
        k = int(np.argmin(margins))
        if margins[k] > best:
            best, best_y, best_k = float(margins[k]), y.copy(), k
            if best > 0:
                break
        y = _project_shifted_simplex(
            y + step / math.sqrt(it + 1) * sign * M[k], y_total, floor
        )
    witness = sign * best_y
    return SignFeasibility(
        status="Feasible" if best > 0 else "Unresolved",
        sign=sign,
        witness=witness if best > 0 else None,
        best_margin=best,
        blocking_subsets=[] if best > 0 else [
            tuple(np.flatnonzero(masks[best_k]).tolist())
        ],
        method="projected-subgradient",
    )
