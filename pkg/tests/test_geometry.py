import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growing_walks.geometry import (
    FrozenLattice,
    GrowingDomain,
    IsolatedVertex,
    StarDomain,
    angles_to_unit,
    contains,
    inward_normal,
    is_connected,
    lattice_neighbors,
    lattice_sites,
    load_radial_table,
    unit_vectors,
)
from growing_walks.scale import ScaleFunction


def frozen(shape, s=1.0, mode="lattice"):
    return GrowingDomain(shape, ScaleFunction.constant(s), mode=mode)


def test_seven_point_fixture(seven_point):
    sites = lattice_sites(frozen(seven_point), 0)
    assert len(sites) == 7
    # radius 1.5 also admits the 12 face diagonals
    assert len(lattice_sites(frozen(StarDomain.ball(1.5)), 0)) == 19


def test_neighbours_in_canonical_order():
    dom = frozen(StarDomain.ball(1.0), 3.0)
    assert lattice_neighbors(dom, 0, (0, 0, 0)) == [tuple(v) for v in unit_vectors(3)]
    nb = lattice_neighbors(dom, 0, (2, 0, 0))
    assert nb == sorted(nb, key=lambda p: [tuple(v) for v in unit_vectors(3)].index(
        tuple(np.subtract(p, (2, 0, 0)))))
    assert (3, 0, 0) not in nb


def test_isolated_vertex_raises():
    dom = frozen(StarDomain.ball(0.5))
    with pytest.raises(IsolatedVertex):
        lattice_neighbors(dom, 0, (0, 0, 0))


def test_neighbour_set_uses_growth():
    dom = GrowingDomain(StarDomain.ball(1.0), ScaleFunction.piecewise([1.5, 2.5], [0.0, 5.0]))
    assert (2, 0, 0) not in lattice_neighbors(dom, 4, (1, 0, 0))
    assert (2, 0, 0) in lattice_neighbors(dom, 5, (1, 0, 0))


def test_contains_rejects_bad_inputs(ball):
    dom = frozen(ball, 3.0)
    with pytest.raises(ValueError):
        contains(dom, -1, (0, 0, 0))
    with pytest.raises(ValueError):
        contains(dom, 0, (0.5, 0, 0))
    assert contains(dom, 0, (2, 0, 0)) and not contains(dom, 0, (3, 0, 0))


def test_enforce_b2_rescales_small_shapes(ball):
    dom = GrowingDomain(ball, ScaleFunction.constant(1.0), enforce_b2=True)
    assert dom.shape.inner * dom.f(0) >= 2 - 1e-12


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: 1e-3 < np.linalg.norm(v)))
@settings(max_examples=50, deadline=None)
def test_ellipsoid_normals_analytic_vs_fd(v):
    shape = StarDomain.ellipsoid([2.0, 1.0, 1.5])
    u = np.asarray(v) / np.linalg.norm(v)
    x = u * shape.radius(u)
    n1 = inward_normal(shape, x, "analytic")
    n2 = inward_normal(shape, x, "fd")
    assert abs(np.linalg.norm(n1) - 1) < 1e-9
    assert np.dot(n1, n2) > 0.999
    assert np.dot(n1, x) < 0


def test_inward_normal_rejects_origin(ball):
    with pytest.raises(ValueError):
        inward_normal(ball, np.zeros(3))


def test_radial_table_of_constant_radius_is_a_ball(tmp_path):
    shape = StarDomain.radial_from_function(lambda u: 1.5, 3)
    for v in ([1, 0, 0], [0, 0, -1], [1, 1, 1]):
        u = np.asarray(v, float) / np.linalg.norm(v)
        assert abs(shape.radius(u) - 1.5) < 1e-9
        assert np.allclose(inward_normal(shape, 1.5 * u), -u, atol=1e-6)
    rows = ["theta1,theta2,r"] + [f"{a},{b},2.0" for a in np.linspace(0, np.pi, 5) for b in np.linspace(-np.pi, np.pi, 8, endpoint=False)]
    p = tmp_path / "k.csv"
    p.write_text("\n".join(rows) + "\n")
    k = load_radial_table(p, 3)
    assert abs(k.radius(angles_to_unit([0.3, 1.0])) - 2.0) < 1e-9


def test_connectivity_and_frozen_lattice(ball):
    lat = FrozenLattice.build(ball, 5)
    assert lat.deg[lat.index((0, 0, 0))] == 6
    assert is_connected(lat.sites, (0, 0, 0))
    assert not is_connected(np.array([[0, 0, 0], [2, 0, 0]]), (0, 0, 0))
    assert (0, 0, 0) in lat and (100, 0, 0) not in lat
    # degrees are symmetric: total number of directed edges is even
    assert lat.deg.sum() % 2 == 0


@given(st.floats(1.0, 4.0), st.floats(0.0, 3.0))
@settings(max_examples=20, deadline=None)
def test_monotone_opportunity(s, ds):
    shape = StarDomain.ellipsoid([1.0, 1.5, 2.0])
    small, big = frozen(shape, s), frozen(shape, s + ds)
    for y in map(tuple, lattice_sites(small, 0)):
        try:
            k_small = len(lattice_neighbors(small, 0, y))
        except IsolatedVertex:
            k_small = 0
        assert len(lattice_neighbors(big, 0, y)) >= k_small
