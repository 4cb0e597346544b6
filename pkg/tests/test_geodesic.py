import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_length.dirac_lattice import conformal_sine_metric
from spectral_length.geodesic import (
    DisconnectedGraphError, circle_geodesic, graph_shortest_path, shortest_path_lengths,
    torus_geodesic,
)

L = 2 * math.pi


def sine_arc(x):
    # Closed form of the arc length from 0 for sqrt(g) = 1 + 0.5 sin x.
    return x + 0.5 * (1 - math.cos(x))


def test_flat_circle():
    assert circle_geodesic(0.0, 3.0, 10.0, 1.0) == pytest.approx(3.0)
    assert circle_geodesic(1.0, 9.0, 10.0, 1.0) == pytest.approx(2.0)
    assert circle_geodesic(0.0, 5.0, 10.0, 4.0) == pytest.approx(10.0)
    assert circle_geodesic(2.0, 2.0, 10.0, 1.0) == 0.0


@pytest.mark.parametrize("x,y", [(0.0, 1.0), (0.5, 2.5), (1.0, 5.0), (4.0, 6.0)])
def test_conformal_sine_closed_form(x, y):
    g = conformal_sine_metric(0.5, 1, L)
    inner = sine_arc(y) - sine_arc(x)
    expected = min(inner, L - inner)
    assert circle_geodesic(x, y, L, g) == pytest.approx(expected, rel=1e-10)


def test_circle_rejects_bad_input():
    with pytest.raises(ValueError):
        circle_geodesic(-1.0, 1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        circle_geodesic(0.0, 1.0, 2.0, -1.0)


def test_torus():
    assert torus_geodesic((0, 0), (3, 4), 10, 10) == pytest.approx(5.0)
    assert torus_geodesic((0, 0), (9, 9), 10, 10) == pytest.approx(math.sqrt(2))
    assert torus_geodesic((1, 1), (1, 1), 10, 10) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 9.99), st.floats(0, 9.99), st.floats(0, 9.99), st.floats(0, 9.99))
def test_torus_symmetric_and_bounded(a, b, c, d):
    p, q = (a, b), (c, d)
    assert torus_geodesic(p, q, 10, 10) == torus_geodesic(q, p, 10, 10)
    assert torus_geodesic(p, q, 10, 10) <= math.hypot(5, 5) + 1e-12


def test_dijkstra():
    edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0), (2, 3, 0.5)]
    dist = shortest_path_lengths(edges, 0, 5)
    np.testing.assert_allclose(dist[:4], [0, 1, 2, 2.5])
    assert math.isinf(dist[4])
    assert graph_shortest_path(edges, 3, 0) == 2.5
    with pytest.raises(DisconnectedGraphError):
        graph_shortest_path(edges, 0, 4, 5)
    with pytest.raises(ValueError):
        shortest_path_lengths([(0, 1, -1.0)], 0)


def test_dijkstra_matches_networkx():
    nx = pytest.importorskip("networkx")
    rng = np.random.default_rng(5)
    g = nx.gnm_random_graph(30, 80, seed=5)
    edges = [(u, v, float(rng.uniform(0.1, 2.0))) for u, v in g.edges]
    for u, v, w in edges:
        g[u][v]["weight"] = w
    ref = nx.single_source_dijkstra_path_length(g, 0)
    ours = shortest_path_lengths(edges, 0, 30)
    for node, d in ref.items():
        assert ours[node] == pytest.approx(d, rel=1e-14)
