from __future__ import annotations

import copy

import numpy as np
import pytest

from urywidth.construct import build_ambient, extract_level_set
from urywidth.metric import build_metric_graph, geodesic_distances
from urywidth.width.certificate import verify_certificate
from urywidth.width.fibers import AssignmentError, TargetComplex, set_diameter, uw_upper_from_map
from urywidth.width.local import direct_local_width, join_cells, level_set_class_table, local_width_report


def brute_diameter(G, nodes):
    return geodesic_distances(G, nodes)[:, nodes].max()


def test_set_diameter_matches_brute(sphere, rng):
    G = build_metric_graph(sphere)
    for _ in range(5):
        nodes = np.sort(rng.choice(G.n_nodes, size=40, replace=False))
        val, (a, b) = set_diameter(G.csr, nodes, start=int(rng.integers(40)))
        assert val == pytest.approx(brute_diameter(G, nodes), rel=1e-12)
        assert geodesic_distances(G, [nodes[a]])[0][nodes[b]] == pytest.approx(val, rel=1e-12)


def test_constant_map_gives_diameter(sphere):
    G = build_metric_graph(sphere)
    cert = uw_upper_from_map(G, np.zeros((G.n_nodes, 1), np.int64), TargetComplex.points([0]), space="s")
    assert cert.d == 0
    assert cert.value == pytest.approx(brute_diameter(G, np.arange(G.n_nodes)), rel=1e-12)
    ctx = (G, np.zeros((G.n_nodes, 1), np.int64), TargetComplex.points([0]))
    assert verify_certificate(cert, ctx)
    bad = copy.deepcopy(cert)
    bad.value *= 0.9
    assert not verify_certificate(bad, ctx)


def test_height_map_to_path(sphere):
    """Map to a path by height bands: fibers are closed stars of path vertices."""
    G = build_metric_graph(sphere)
    z = G.points[:, 2]
    bands = np.floor((z - z.min()) / 0.08).astype(np.int64)
    cells = np.stack([bands, -np.ones_like(bands)], axis=1)
    target = TargetComplex.path(int(bands.max()) + 1)
    cert = uw_upper_from_map(G, cells, target)
    assert cert.d == 1
    assert cert.value < brute_diameter(G, np.arange(G.n_nodes))
    assert verify_certificate(cert, (G, cells, target))


def test_assignment_length_checked(sphere):
    G = build_metric_graph(sphere)
    with pytest.raises(AssignmentError):
        uw_upper_from_map(G, np.zeros((3, 1), np.int64), TargetComplex.points([0]))


@pytest.fixture(scope="module")
def coarse_level_set():
    return extract_level_set(build_ambient(2, 0.25, 4.0, tile_cells=4))


def test_direct_local_width(coarse_level_set):
    M = coarse_level_set
    A = M.ambient
    G = build_metric_graph(M.complex)
    ids, w = M.node_barycentrics(G)
    t, cells = join_cells(ids, w, A.join.pair_of_vertex, 2)
    rep = direct_local_width(G, t, cells, A.geometry, A.geometry.point(t), [0, 2000], 1.0, eps=0.25)
    assert rep.certified_fraction == 1.0
    assert rep.d == 1
    for c in rep.certificates:
        assert verify_certificate(c, (G, t, cells))
        bad = copy.deepcopy(c)
        bad.evidence["fibers"][0]["diameter"] += 0.5
        assert not verify_certificate(bad, (G, t, cells))


def test_class_mode_level_set(coarse_level_set):
    M = coarse_level_set
    T = level_set_class_table(M, margin=4)
    K = M.complex
    rng = np.random.default_rng(0)
    ti = rng.integers(len(K.top), size=5)
    lam = rng.dirichlet(np.ones(3), size=5)
    pts = (lam[:, :, None] * K.unwrap(K.coords[K.top[ti]])).sum(axis=1)
    rep = local_width_report(M, pts, 1.0, table=T)
    assert rep.certified_fraction == 1.0
    assert all(verify_certificate(c, T) for c in rep.certificates)
    assert rep.max_value <= T.max_diameter
    d = rep.to_dict()
    assert d["C"] == pytest.approx(rep.max_value / 0.25)


def test_identity_assignment_singletons(sphere):
    G = build_metric_graph(sphere)
    cells = np.arange(G.n_nodes)[:, None]
    cert = uw_upper_from_map(G, cells, TargetComplex.points(np.arange(G.n_nodes)))
    assert cert.d == 0 and cert.value == 0.0


def test_tiny_ball_on_z1(coarse_level_set):
    M = coarse_level_set
    A = M.ambient
    G = build_metric_graph(M.complex)
    ids, w = M.node_barycentrics(G)
    t, cells = join_cells(ids, w, A.join.pair_of_vertex, 2)
    on_z1 = int(np.flatnonzero(t[:, 0] == 1.0)[0])
    rep = direct_local_width(G, t, cells, A.geometry, A.geometry.point(t), [on_z1], 0.05, eps=0.25)
    cert = rep.certificates[0]
    assert cert.evidence["i"] == 1
    E = M.complex.simplices(1)
    max_diam = np.linalg.norm(M.complex.coords[E[:, 0]] - M.complex.coords[E[:, 1]], axis=1).max()
    assert cert.value <= 2 * max_diam
