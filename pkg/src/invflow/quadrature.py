"""Vectorised adaptive Gauss-Legendre quadrature on an interval."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import QuadratureFailure

_ORDER = 10
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_ORDER)


def _rule(f, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Gauss-Legendre estimate on each interval [lo[k], hi[k]] -> (K, ...)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * _NODES[None, :]).reshape(-1)
    vals = np.asarray(f(x))
    vals = vals.reshape((len(lo), _ORDER) + vals.shape[1:])
    w = _WEIGHTS.reshape((1, _ORDER) + (1,) * (vals.ndim - 2))
    return half.reshape((-1,) + (1,) * (vals.ndim - 2)) * (w * vals).sum(axis=1)


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float = 0.0,
    b: float = 1.0,
    atol: float = 1e-10,
    max_intervals: int = 2**14,
    min_width: float = 2.0**-30,
    breakpoints=None,
) -> tuple[np.ndarray, float, int]:
    """Integrate ``f`` over ``[a, b]``.

    ``f`` takes a 1-D array of nodes and returns values with leading axis
    matching the nodes (extra axes are integrated componentwise).  Intervals
    are bisected until the halves agree with their parent to within the
    parent's share of ``atol`` (max-abs over components).  Intervals narrower
    than ``min_width`` times the range are accepted as they are; this is what
    lets square-root kinks (such as extended angles crossing a degenerate
    triangle) terminate, and their difference still enters the error estimate.
    The floor has to sit well above machine resolution because near such a
    kink the integrand carries rounding noise of order sqrt(eps) from the
    cancelling slack, which no amount of bisection removes.

    ``breakpoints`` (points strictly inside ``(a, b)`` where ``f`` is not
    smooth) seed the initial partition.  The nested-rule error estimate cannot
    see a kink that falls between nodes, so callers that know where the
    integrand is nonsmooth should pass those points.

    Returns ``(integral, error_estimate, interval_count)``.
    """
    edges = [a, b]
    if breakpoints is not None and len(breakpoints):
        inner = np.asarray(breakpoints, dtype=float)
        inner = inner[(inner > min(a, b)) & (inner < max(a, b))]
        edges = np.unique(np.concatenate([[a, b], inner]))
        if b < a:
            edges = edges[::-1]
    lo = np.array(edges[:-1], dtype=float)
    hi = np.array(edges[1:], dtype=float)
    est = _rule(f, lo, hi)
    total = None
    err_total = 0.0
    accepted = 0
    width = abs(b - a) if b != a else 1.0
    while len(lo):
        mid = 0.5 * (lo + hi)
        left = _rule(f, lo, mid)
        right = _rule(f, mid, hi)
        refined = left + right
        diff = np.abs(refined - est).reshape(len(lo), -1).max(axis=1)
        ok = (diff <= atol * np.abs(hi - lo) / width) | (np.abs(hi - lo) <= min_width * width)
        if ok.any():
            part = refined[ok].sum(axis=0)
            total = part if total is None else total + part
            err_total += float(diff[ok].sum())
            accepted += 2 * int(ok.sum())
        keep = ~ok
        if accepted + 2 * int(keep.sum()) > max_intervals:
            raise QuadratureFailure(
                f"tolerance {atol:g} not met with {max_intervals} intervals"
            )
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        est = np.concatenate([left[keep], right[keep]])
    return total, err_total, accepted
