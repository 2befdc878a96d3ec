from __future__ import annotations

import heapq

import numpy as np
import pytest

from urywidth import fixtures
from urywidth.complex import barycentric_subdivide_and_color, kuhn_triangulate, make_periodic
from urywidth.metric import (
    AuxiliaryMetric,
    MetricError,
    ball,
    blowup,
    build_metric_graph,
    components,
    extrinsic_diameter,
    geodesic_distances,
    graph_from_edges,
    sphere_shell,
    write_distance_csv,
)


def heap_dijkstra(n, edges, weights, src):
    """Plain heapq Dijkstra used as an oracle."""
    adj = [[] for _ in range(n)]
    for (a, b), w in zip(edges.tolist(), weights.tolist()):
        adj[a].append((b, w))
        adj[b].append((a, w))
    dist = [float("inf")] * n
    dist[src] = 0.0
    pq = [(0.0, src)]
    while pq:
        d, u = heapq.heappop(pq)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            if d + w < dist[v]:
                dist[v] = d + w
                heapq.heappush(pq, (d + w, v))
    return np.array(dist)


def test_square_cycle():
    G = graph_from_edges([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1], [1, 2], [2, 3], [3, 0]])
    assert geodesic_distances(G, [0])[0].tolist() == [0.0, 1.0, 2.0, 1.0]


def test_matches_heap_oracle(sphere):
    G = build_metric_graph(sphere)
    for s in (0, 17, G.n_nodes - 1):
        ours = geodesic_distances(G, [s])[0]
        ref = heap_dijkstra(G.n_nodes, G.edges, G.weights, s)
        assert np.abs(ours - ref).max() <= 1e-12


def test_distance_dominates_euclidean():
    K = barycentric_subdivide_and_color(kuhn_triangulate(2, 4, 0.5))
    G = build_metric_graph(K)
    d = geodesic_distances(G, [0])[0]
    eu = np.linalg.norm(K.coords - K.coords[0], axis=1)
    assert np.all(d >= eu - 1e-12)


def test_subdivision_refines_distances():
    K = barycentric_subdivide_and_color(kuhn_triangulate(2, 4, 0.5))
    far = int(np.argmax(np.linalg.norm(K.coords - K.coords[0], axis=1)))
    d0 = geodesic_distances(build_metric_graph(K, 0), [0])[0][far]
    d2 = geodesic_distances(build_metric_graph(K, 2), [0])[0][far]
    assert d2 <= d0 + 1e-12
    assert d2 >= np.linalg.norm(K.coords[far] - K.coords[0]) - 1e-12


def test_periodic_wraps():
    K = make_periodic(barycentric_subdivide_and_color(kuhn_triangulate(2, 6, 0.5)), min_period=3.0)
    G = build_metric_graph(K)
    d = geodesic_distances(G, [0])[0]
    assert d.max() <= np.hypot(1.5, 1.5) * 1.2  # no point is farther than the antipode (up to zigzag)


def test_ball_shell_components(sphere):
    G = build_metric_graph(sphere)
    d = geodesic_distances(G, [0])[0]
    B = ball(G, 0, 0.5)
    assert np.array_equal(B, np.flatnonzero(d <= 0.5))
    S = sphere_shell(G, 0, 0.5, 0.2, dist=d)
    assert np.all((d[S] >= 0.5) & (d[S] < 0.7))
    lab = components(G, B)
    assert lab.max() == 0  # a geodesic ball is connected
    with pytest.raises(MetricError):
        ball(G, 0, -1)


def test_extrinsic_diameter_pair(sphere):
    G = build_metric_graph(sphere)
    sub = np.arange(0, G.n_nodes, 7)
    res = extrinsic_diameter(G, sub)
    a, b = res.witnesses
    assert geodesic_distances(G, [a])[0][b] == res.value
    assert res.value == geodesic_distances(G, sub)[:, sub].max()


def test_blowup_monotone(rng):
    K = barycentric_subdivide_and_color(kuhn_triangulate(2, 3, 0.5))
    G = build_metric_graph(K)
    tau = rng.uniform(-1, 1, size=(G.n_nodes, 1))
    aux = AuxiliaryMetric.flat(np.array([[-1.0], [1.0]]), 1.0)
    H = blowup(G, tau, aux)
    assert np.all(H.weights >= G.weights)
    dG = geodesic_distances(G, range(G.n_nodes))
    dH = geodesic_distances(H, range(H.n_nodes))
    assert np.all(dH >= dG)


def test_distance_csv(tmp_path, sphere):
    G = build_metric_graph(sphere)
    table = geodesic_distances(G, [0, 1])
    p = tmp_path / "d.csv"
    write_distance_csv(p, [0, 1], table)
    lines = p.read_text().splitlines()
    assert lines[0] == "source,target,distance"
    assert len(lines) == 1 + 2 * G.n_nodes


def test_flat_torus_fixture_distances():
    K = fixtures.flat_torus(8, 0.5)
    G = build_metric_graph(K)
    d = geodesic_distances(G, [0])[0]
    assert d.min() == 0 and np.isfinite(d).all()
