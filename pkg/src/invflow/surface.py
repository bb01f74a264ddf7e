"""Combinatorial closed triangulated surfaces.

A :class:`TriangulatedSurface` stores the face list of a closed simplicial
surface together with the derived edge table.  Edges are indexed canonically:
each edge is the sorted vertex pair ``(i, j)`` with ``i < j`` and the table is
in lexicographic order, so per-edge arrays are reproducible across runs.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    DegenerateFace,
    Disconnected,
    EmptyOrFullSubset,
    NonManifold,
    ValidationError,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriangulatedSurface:
    """Validated closed triangulated surface (use :func:`build_surface`)."""

    vertex_count: int
    faces: np.ndarray  # (F, 3) int, as given
    edges: np.ndarray  # (E, 2) int, sorted pairs in lexicographic order
    face_edges: np.ndarray  # (F, 3) edge index opposite each face corner
    vertex_degrees: np.ndarray  # (N,)
    corner_to_vertex: csr_matrix = field(repr=False)  # (N, 3F) 0/1
    _edge_lookup: dict = field(repr=False)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def euler_characteristic(self) -> int:
        return self.vertex_count - self.edge_count + self.face_count

    @property
    def max_degree(self) -> int:
        return int(self.vertex_degrees.max())

    def edge_index(self, i: int, j: int) -> int:
        """Canonical index of the edge ``{i, j}``; ``KeyError`` if absent."""
        return self._edge_lookup[(min(i, j), max(i, j))]

    def digest(self) -> str:
        """Short sha256 of the canonical face list (orientation-free)."""
        canon = sorted(tuple(sorted(int(v) for v in f)) for f in self.faces)
        payload = f"{self.vertex_count}:{canon}".encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def __repr__(self) -> str:
        return (
            f"TriangulatedSurface(N={self.vertex_count}, E={self.edge_count}, "
            f"F={self.face_count}, chi={self.euler_characteristic})"
        )


def build_surface(
    faces: Iterable[Sequence[int]], vertex_count: int | None = None
) -> TriangulatedSurface:
    """Validate a face list and build the surface.

    Raises :class:`DegenerateFace` for a triangle with a repeated vertex or a
    duplicated vertex set, :class:`NonManifold` when some edge is not shared by
    exactly two faces, and :class:`Disconnected` when the 1-skeleton (over all
    ``vertex_count`` vertices) is not connected.
    """
    face_list = [tuple(int(v) for v in f) for f in faces]
    if not face_list:
        raise ValidationError("face list is empty")
    for f in face_list:
        if len(f) != 3:
            raise ValidationError(f"face {f} is not a triangle")
    arr = np.asarray(face_list, dtype=np.int64)
    if arr.min() < 0:
        raise ValidationError("negative vertex index")
    n = int(arr.max()) + 1 if vertex_count is None else int(vertex_count)
    if arr.max() >= n:
        raise ValidationError(f"vertex index {arr.max()} out of range for N={n}")

    seen: set[frozenset] = set()
    for f in face_list:
        key = frozenset(f)
        if len(key) != 3:
            raise DegenerateFace(f"face {f} repeats a vertex")
        if key in seen:
            raise DegenerateFace(f"vertex set {sorted(key)} appears in two faces")
        seen.add(key)

    counts: Counter = Counter()
    for a, b, c in face_list:
        for i, j in ((b, c), (a, c), (a, b)):
            counts[(min(i, j), max(i, j))] += 1
    bad = {e: k for e, k in counts.items() if k != 2}
    if bad:
        e, k = next(iter(sorted(bad.items())))
        raise NonManifold(f"edge {e} lies in {k} faces (expected 2)")

    edge_list = sorted(counts)
    lookup = {e: k for k, e in enumerate(edge_list)}
    edges = np.asarray(edge_list, dtype=np.int64)
    face_edges = np.array(
        [
            [lookup[(min(b, c), max(b, c))], lookup[(min(a, c), max(a, c))],
             lookup[(min(a, b), max(a, b))]]
            for a, b, c in face_list
        ],
        dtype=np.int64,
    )

    adj = coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise Disconnected(f"1-skeleton has {ncomp} components")

    degrees = np.bincount(edges.reshape(-1), minlength=n)
    corners = arr.reshape(-1)
    corner_to_vertex = csr_matrix(
        (np.ones(len(corners)), (corners, np.arange(len(corners)))),
        shape=(n, len(corners)),
    )
    return TriangulatedSurface(
        vertex_count=n,
        faces=_frozen(arr),
        edges=_frozen(edges),
        face_edges=_frozen(face_edges),
        vertex_degrees=_frozen(degrees),
        corner_to_vertex=corner_to_vertex,
        _edge_lookup=lookup,
    )


@dataclass(frozen=True)
class SubcomplexSummary:
    """Counts for the full subcomplex spanned by a vertex subset ``A``.

    ``link_pairs`` lists ``(edge, vertex)`` with ``vertex`` in ``A``, both
    endpoints of ``edge`` outside ``A``, and the two spanning a face.
    """

    subset: tuple[int, ...]
    induced_vertex_count: int
    induced_edge_count: int
    induced_face_count: int
    link_pairs: tuple[tuple[int, int], ...]

    @property
    def euler_characteristic(self) -> int:
        return (
            self.induced_vertex_count
            - self.induced_edge_count
            + self.induced_face_count
        )


def subcomplex_summary(
    surface: TriangulatedSurface, subset: Iterable[int]
) -> SubcomplexSummary:
    a = sorted({int(v) for v in subset})
    n = surface.vertex_count
    if not a or len(a) >= n:
        raise EmptyOrFullSubset("subset must be nonempty and proper")
    if a[0] < 0 or a[-1] >= n:
        raise ValidationError("subset index out of range")
    mask = np.zeros(n, dtype=bool)
    mask[a] = True

    in_edges = mask[surface.edges].all(axis=1)
    corner_in = mask[surface.faces]
    per_face = corner_in.sum(axis=1)
    pairs = []
    for f in np.flatnonzero(per_face == 1):
        c = int(np.flatnonzero(corner_in[f])[0])
        pairs.append((int(surface.face_edges[f, c]), int(surface.faces[f, c])))
    pairs.sort()
    return SubcomplexSummary(
        subset=tuple(a),
        induced_vertex_count=len(a),
        induced_edge_count=int(in_edges.sum()),
        induced_face_count=int((per_face == 3).sum()),
        link_pairs=tuple(pairs),
    )
