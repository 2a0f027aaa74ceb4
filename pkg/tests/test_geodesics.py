import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_gasket.gasket import EUCLIDEAN, HARMONIC, EdgeId, VertexId, build_length_graph, edges
from spectral_gasket.geodesics import (
    MAX_REFINEMENT,
    Address,
    Polyline,
    all_pairs_distances,
    dijkstra,
    edge_polyline,
    edge_polyline_euclidean,
    edge_polyline_harmonic,
    geodesic_distance,
    geodesic_path,
    harmonic_side_lengths,
    identity_sampler,
    kusuoka_sampler,
    pairwise_sum,
    path_energy_integral,
    tangent_projection_residual,
)
from spectral_gasket.harmonic import phi

ROOT_B = EdgeId((), "b")
# Regression fixture: boundary edge q_1 -> q_2 at refinement 12 (2**12 chords).
BOUNDARY_LENGTH_K12 = 1.0743519794213598


# -- polylines -----------------------------------------------------------------------


def test_polyline_needs_two_points():
    with pytest.raises(ValueError):
        Polyline.from_points([[0.0, 0.0]])


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=40))
def test_polyline_length_is_chord_sum(points):
    line = Polyline.from_points(points)
    assert line.length == pytest.approx(line.chord_sum(), rel=1e-12, abs=1e-12)


def test_pairwise_sum():
    x = np.arange(11, dtype=float)
    assert pairwise_sum(x) == 55.0
    assert pairwise_sum(np.array([])) == 0.0


def test_refinement_zero_is_the_chord():
    for e in itertools.chain(edges(0), edges(2)):
        a, b = e.endpoints()
        line = edge_polyline_harmonic(e, 0)
        assert np.allclose(line.points, [phi(a), phi(b)], atol=1e-15)


def test_boundary_chord_is_one():
    # |P(e_1 - e_2)| / sqrt2 = sqrt2 / sqrt2
    assert edge_polyline_harmonic(ROOT_B, 0).length == pytest.approx(1.0, abs=1e-15)


def test_boundary_edge_refinement_sequence():
    lengths = [edge_polyline_harmonic(ROOT_B, k).length for k in (4, 8, 12)]
    assert lengths[0] < lengths[1] < lengths[2]
    diffs = np.diff(lengths)
    assert diffs[1] < diffs[0] and diffs[1] < 1e-4
    assert lengths[2] == pytest.approx(BOUNDARY_LENGTH_K12, rel=1e-14)


def test_polyline_points_are_phi_images():
    # points along 12/l at refinement 3 are Φ of the level-5 vertices on that side
    e = EdgeId((1, 2), "l")
    line = edge_polyline_harmonic(e, 3)
    a, b = e.corners
    expected = [phi(VertexId.canonical(e.cell + u, a)) for u in itertools.product((a, b), repeat=3)]
    expected.append(phi(VertexId.canonical(e.cell, b)))
    assert np.allclose(line.points, expected, atol=1e-14)


def test_polyline_carries_addresses():
    line = edge_polyline_harmonic(EdgeId((2,), "r"), 2, addresses=True)
    assert len(line.addresses) == len(line.points) == 5
    assert line.addresses[0] == Address((2, 2, 2), 2)
    assert line.addresses[-1] == Address((2, 3, 3), 3)
    for addr, pt in zip(line.addresses, line.points):
        assert np.allclose(phi(VertexId.canonical(*addr)), pt, atol=1e-15)
    assert Address((1, 2), 3).truncate(5) == (1, 2, 3, 3, 3)
    assert Address((1, 2), 3).truncate(1) == (1,)


def test_euclidean_polyline_is_straight():
    line = edge_polyline_euclidean(EdgeId((1,), "r"), 3)
    assert line.length == pytest.approx(0.5, abs=1e-15)
    assert edge_polyline(EUCLIDEAN, EdgeId((), "l")).length == pytest.approx(1.0)


def test_refinement_bounds():
    with pytest.raises(ValueError):
        edge_polyline_harmonic(ROOT_B, MAX_REFINEMENT + 1)


@pytest.mark.parametrize("k", [0, 3, 7, 11])
def test_coarse_length_additivity_is_exact(k):
    for e in itertools.chain(edges(0), edges(1), edges(2)):
        a, b = e.children()
        parent = edge_polyline_harmonic(e, k + 1).length
        assert parent == edge_polyline_harmonic(a, k).length + edge_polyline_harmonic(b, k).length


def test_bulk_lengths_match_single_edges():
    table = harmonic_side_lengths(3, 6)
    for m in range(4):
        for n, e in enumerate(edges(m)):
            assert table[m].ravel()[n] == edge_polyline_harmonic(e, 6).length


# -- shortest paths ------------------------------------------------------------------


def test_distance_to_self():
    g = build_length_graph(HARMONIC, 2)
    for v in g.vertex_list[:5]:
        assert geodesic_distance(v, v, g) == 0


@pytest.mark.parametrize("m", range(0, 5))
def test_euclidean_boundary_distance_is_one(m):
    g = build_length_graph(EUCLIDEAN, m)
    assert geodesic_distance(VertexId((), 1), VertexId((), 2), g) == pytest.approx(1.0, abs=1e-15)


def test_euclidean_midpoints_level1():
    g = build_length_graph(EUCLIDEAN, 1)
    assert geodesic_distance(VertexId((1,), 2), VertexId((1,), 3), g) == 0.5


def test_path_examples():
    g0 = build_length_graph(EUCLIDEAN, 0)
    p = geodesic_path(VertexId((), 1), VertexId((), 2), g0)
    assert p.edges == (EdgeId((), "b"),) and p.length == 1.0
    g2 = build_length_graph(EUCLIDEAN, 2)
    p = geodesic_path(VertexId((), 1), VertexId((), 2), g2)
    assert [str(e) for e in p.edges] == ["11/b", "12/b", "21/b", "22/b"]
    assert p.length == 1.0
    pts = np.array([g2.vertices[v] for v in p.vertices])
    assert np.allclose(pts[:, 1], 0)


def test_harmonic_level3_boundary_path_matches_distance():
    g = build_length_graph(HARMONIC, 3)
    p = geodesic_path(VertexId((), 1), VertexId((), 2), g)
    assert p.length == geodesic_distance(VertexId((), 1), VertexId((), 2), g)
    assert [str(e) for e in p.edges] == [f"{w}/b" for w in ("111", "112", "121", "122", "211", "212", "221", "222")]


def test_tie_break_is_lexicographic():
    # from the midpoint of p1p2 to p3 two unit-length routes exist; 1/r precedes 2/l
    g = build_length_graph(EUCLIDEAN, 1)
    p = geodesic_path(VertexId((1,), 2), VertexId((), 3), g)
    assert [str(e) for e in p.edges] == ["1/r", "3/l"]
    assert p.length == 1.0


@pytest.mark.parametrize("geometry", [EUCLIDEAN, HARMONIC])
def test_path_structure(geometry):
    g = build_length_graph(geometry, 4)
    rng = np.random.default_rng(3)
    vs = g.vertex_list
    for _ in range(20):
        p, q = (vs[i] for i in rng.choice(len(vs), 2, replace=False))
        path = geodesic_path(p, q, g)
        assert path.vertices[0] == p and path.vertices[-1] == q
        for e, u, v in zip(path.edges, path.vertices, path.vertices[1:]):
            assert set(e.endpoints()) == {u, v}
        for e1, e2 in zip(path.edges, path.edges[1:]):
            assert len(set(e1.endpoints()) & set(e2.endpoints())) == 1
        assert path.length == pytest.approx(sum(g.edge_length(e) for e in path.edges), rel=1e-13)
        assert path.length == pytest.approx(geodesic_distance(p, q, g), rel=1e-12)


def test_non_canonical_names_are_accepted():
    g = build_length_graph(HARMONIC, 2)
    assert geodesic_distance(VertexId((3,), 1), VertexId((1,), 3), g) == 0.0


def _check_metric(D, atol):
    n = len(D)
    assert np.allclose(D, D.T, atol=0)
    assert np.all(np.diag(D) == 0)
    assert np.all(D[~np.eye(n, dtype=bool)] > 0)
    for k in range(n):
        assert np.all(D <= D[:, [k]] + D[[k], :] + atol)


@pytest.mark.parametrize("geometry", [EUCLIDEAN, HARMONIC])
@pytest.mark.parametrize("m", range(0, 4))
def test_metric_axioms_exhaustive(geometry, m, graph):
    _check_metric(all_pairs_distances(graph(geometry, m)), 1e-14)


@pytest.mark.parametrize("geometry", [EUCLIDEAN, HARMONIC])
@pytest.mark.parametrize("m", [4, 5, 6])
def test_metric_axioms_sampled(geometry, m, graph):
    g = graph(geometry, m)
    rng = np.random.default_rng(m)
    vs = g.vertex_list
    for _ in range(20):
        i, j, k = rng.choice(len(vs), 3, replace=False)
        di, dj = dijkstra(g, vs[i]), dijkstra(g, vs[j])
        assert di[j] == pytest.approx(dj[i], rel=1e-13)
        assert di[k] <= di[j] + dj[k] + 1e-14
        assert di[j] > 0


@pytest.mark.parametrize("m", range(0, 6))
def test_level_monotonicity_euclidean(m, graph):
    g0, g1 = graph(EUCLIDEAN, m), graph(EUCLIDEAN, m + 1)
    for v in g0.vertex_list[:30]:
        d0, d1 = dijkstra(g0, v), dijkstra(g1, v)
        for u in g0.vertex_list:
            assert d1[g1.index[u]] <= d0[g0.index[u]] + 1e-15


@pytest.mark.parametrize("m", range(0, 6))
def test_level_monotonicity_harmonic_at_matched_resolution(m, graph):
    # a level-(m+1) edge at refinement k-1 is exactly half of a level-m edge at refinement k
    g0, g1 = graph(HARMONIC, m, 12), graph(HARMONIC, m + 1, 11)
    for v in g0.vertex_list[:30]:
        d0, d1 = dijkstra(g0, v), dijkstra(g1, v)
        for u in g0.vertex_list:
            assert d1[g1.index[u]] <= d0[g0.index[u]] * (1 + 1e-13)


@pytest.mark.parametrize("m", range(0, 4))
def test_level_monotonicity_harmonic_fixed_refinement(m, graph):
    # at a fixed k the finer graph also resolves curves one level deeper; that gain is tiny
    g0, g1 = graph(HARMONIC, m), graph(HARMONIC, m + 1)
    D0 = all_pairs_distances(g0)
    for i, v in enumerate(g0.vertex_list):
        d1 = dijkstra(g1, v)
        for j, u in enumerate(g0.vertex_list):
            assert d1[g1.index[u]] <= D0[i, j] * (1 + 1e-7)


def test_euclidean_distance_exceeds_straight_line(graph):
    g = graph(EUCLIDEAN, 4)
    D = all_pairs_distances(g)
    X = np.array([g.vertices[v] for v in g.vertex_list])
    E = np.linalg.norm(X[:, None] - X[None, :], axis=-1)
    assert np.all(D >= E - 1e-14)


@pytest.mark.parametrize("geometry", [EUCLIDEAN, HARMONIC])
@pytest.mark.parametrize("m", range(0, 5))
def test_every_edge_is_a_geodesic(geometry, m, graph):
    g = graph(geometry, m)
    for e, length, (u, v) in g.edges:
        assert dijkstra(g, u)[g.index[v]] == length


# -- path integrals and tangents -----------------------------------------------------


def test_identity_integral_is_polyline_length():
    line = edge_polyline_harmonic(EdgeId((1, 3), "r"), 8, addresses=True)
    assert path_energy_integral(line, identity_sampler) == pytest.approx(line.length, rel=1e-15)


def test_zero_length_polyline():
    line = Polyline.from_points([[0.2, 0.1], [0.2, 0.1]], addresses=(Address((1,), 2), Address((1,), 2)))
    assert line.length == 0
    assert path_energy_integral(line, kusuoka_sampler(20)) == 0


def test_integral_needs_addresses():
    with pytest.raises(ValueError):
        path_energy_integral(edge_polyline_harmonic(ROOT_B, 2), identity_sampler)


def test_boundary_integral_with_deep_z():
    line = edge_polyline_harmonic(ROOT_B, 12, addresses=True)
    value = path_energy_integral(line, kusuoka_sampler(20))
    assert value <= line.length * (1 + 1e-12)
    assert abs(value - line.length) / line.length < 0.02


def test_tangent_residual_examples():
    assert tangent_projection_residual(ROOT_B, 5, 20, refinement=6, z=identity_sampler) == 0
    with pytest.raises(ValueError):
        tangent_projection_residual(ROOT_B, 0, 20, refinement=6)


@given(st.integers(1, 2**8 - 1), st.integers(1, 24))
@settings(max_examples=40)
def test_tangent_residual_nonnegative(index, depth):
    assert tangent_projection_residual(ROOT_B, index, depth, refinement=8) >= 0


def test_tangent_residual_shrinks_with_depth():
    rng = np.random.default_rng(5)
    idx = rng.choice(np.arange(1, 2**12), 50, replace=False)
    wins = sum(
        tangent_projection_residual(ROOT_B, int(i), 20) < tangent_projection_residual(ROOT_B, int(i), 5) for i in idx
    )
    assert wins >= 45


def test_z_projects_onto_the_tangent_of_a_deep_chord():
    # the chord of the sub-edge u is J_u (q_2 - q_1), which lies in the image of Z(u)
    line = edge_polyline_harmonic(ROOT_B, 10, addresses=True)
    t = 123
    d = line.points[t + 1] - line.points[t]
    Z = kusuoka_sampler(10)(line.addresses[t])
    assert np.linalg.norm(Z @ d - d) / np.linalg.norm(d) < 1e-3
    assert math.isfinite(float(d @ Z @ d))
