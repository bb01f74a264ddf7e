import numpy as np
import pytest

from invflow.meshes import icosahedron, octahedron, tetrahedron, torus7

MESH_FACTORIES = {
    "tetrahedron": tetrahedron,
    "octahedron": octahedron,
    "icosahedron": icosahedron,
    "torus7": torus7,
}


@pytest.fixture(params=list(MESH_FACTORIES))
def mesh(request):
    return MESH_FACTORIES[request.param]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def omega_point(surface, rng, spread=1.0):
    """Random (I, u) with I in [0, 1] and u in [-spread, spread].

    For I_e <= 1 every triangle of circle radii is admissible, so the
    point lies in Omega whatever the radii.
    """
    I = rng.uniform(0.0, 1.0, surface.edge_count)
    u = rng.uniform(-spread, spread, surface.vertex_count)
    return I, u
