"""Small catalogue of closed triangulations used in examples and tests."""

from __future__ import annotations

from .surface import TriangulatedSurface, build_surface

TETRAHEDRON = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]

OCTAHEDRON = [
    (0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
    (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5),
]

ICOSAHEDRON = [
    (0, 1, 2), (0, 1, 7), (0, 2, 6), (0, 5, 6), (0, 5, 7),
    (1, 2, 8), (1, 3, 7), (1, 3, 8), (2, 4, 6), (2, 4, 8),
    (3, 7, 11), (3, 8, 9), (3, 9, 11), (4, 6, 10), (4, 8, 9),
    (4, 9, 10), (5, 6, 10), (5, 7, 11), (5, 10, 11), (9, 10, 11),
]


def torus7_faces() -> list[tuple[int, int, int]]:
    """Moebius' 7-vertex torus: 14 triangles, 1-skeleton is K7."""
    faces = []
    for i in range(7):
        faces.append((i, (i + 1) % 7, (i + 3) % 7))
        faces.append((i, (i + 2) % 7, (i + 3) % 7))
    return faces


def bipyramid_faces(n: int) -> list[tuple[int, int, int]]:
    """Double cone over an n-gon; N = n + 2 vertices, a sphere."""
    if n < 3:
        raise ValueError("bipyramid needs n >= 3")
    top, bottom = n, n + 1
    faces = []
    for i in range(n):
        j = (i + 1) % n
        faces.append((i, j, top))
        faces.append((j, i, bottom))
    return faces


def kleetope_faces(base: list[tuple[int, int, int]]) -> list[tuple[int, int, int]]:
    """Cone a new degree-3 vertex over every face of ``base``."""
    n = max(max(f) for f in base) + 1
    faces = []
    for k, (a, b, c) in enumerate(base):
        v = n + k
        faces += [(a, b, v), (b, c, v), (c, a, v)]
    return faces


def genus2_faces() -> list[tuple[int, int, int]]:
    """Connected sum of two 7-vertex tori along the face (0, 1, 3).

    11 vertices, 26 faces, Euler characteristic -2.
    """
    t = torus7_faces()
    removed = {0, 1, 3}
    first = [f for f in t if set(f) != removed]
    relabel = {0: 0, 1: 1, 3: 3}
    nxt = 7
    for v in (2, 4, 5, 6):
        relabel[v] = nxt
        nxt += 1
    second = [tuple(relabel[v] for v in f) for f in t if set(f) != removed]
    return first + second


CATALOG = {
    "tetrahedron": lambda: TETRAHEDRON,
    "octahedron": lambda: OCTAHEDRON,
    "icosahedron": lambda: ICOSAHEDRON,
    "torus7": torus7_faces,
    "genus2": genus2_faces,
    "triakis-octahedron": lambda: kleetope_faces(OCTAHEDRON),
}


def named_surface(name: str) -> TriangulatedSurface:
    """Build a catalogue mesh; also accepts ``bipyramid-<n>``."""
    if name.startswith("bipyramid-"):
        return build_surface(bipyramid_faces(int(name.split("-", 1)[1])))
    try:
        return build_surface(CATALOG[name]())
    except KeyError:
        raise KeyError(f"unknown mesh {name!r}; known: {sorted(CATALOG)}") from None


def tetrahedron() -> TriangulatedSurface:
    return named_surface("tetrahedron")


def octahedron() -> TriangulatedSurface:
    return named_surface("octahedron")


def icosahedron() -> TriangulatedSurface:
    return named_surface("icosahedron")


def torus7() -> TriangulatedSurface:
    return named_surface("torus7")
