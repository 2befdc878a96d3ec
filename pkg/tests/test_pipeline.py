from __future__ import annotations

import json

import numpy as np
import pytest

from urywidth import fixtures
from urywidth.homology import ChainComplexZ2
from urywidth.metric import build_metric_graph, geodesic_distances
from urywidth.width.certificate import verify_certificate
from urywidth.width.pipeline import shortest_path_tree, theorem12_pipeline, tree_path


@pytest.fixture(scope="module")
def wide():
    K = fixtures.genus2_surface(4, 1.0)
    return K, theorem12_pipeline(K, space="g2")


def test_sphere_takes_reeb_branch(sphere):
    res = theorem12_pipeline(sphere)
    assert res.status == "reeb" and res.beta == 0
    assert res.certificate.value < res.beta + 1
    assert verify_certificate(res.certificate, build_metric_graph(sphere))


def test_small_genus2_takes_reeb_branch():
    K = fixtures.genus2_surface(4, 0.8)
    res = theorem12_pipeline(K)
    assert res.status == "reeb" and res.beta == 4
    assert res.certificate.value < res.beta + 1


def test_flat_torus_out_of_hypothesis():
    res = theorem12_pipeline(fixtures.flat_torus(8, 0.5), rho=1.0)
    assert res.status == "out-of-hypothesis"


def test_contradiction_object(wide):
    K, res = wide
    assert res.status == "contradiction" and res.beta == 4
    c = res.contradiction
    assert c.verified and c.exceeds_budget
    assert verify_certificate(res.certificate)
    assert res.certificate.value > res.budget


def test_points_are_spread(wide):
    K, res = wide
    c = res.contradiction
    G = build_metric_graph(K)
    d = geodesic_distances(G, c.xs)[:, c.xs]
    idx = np.arange(len(c.xs))
    gap = d - np.abs(idx[:, None] - idx[None, :])
    assert gap.min() >= -res.slack
    assert len(c.xs) == res.beta + 2


def test_boundary_support_contained(wide):
    K, res = wide
    c = res.contradiction
    C = ChainComplexZ2(K)
    bd = C.boundary(c.D_prime)
    E = K.simplices(1)[list(bd.support)]
    G = build_metric_graph(K)
    dp = geodesic_distances(G, [c.p])[0]
    di = geodesic_distances(G, [c.xs[c.i1]])[0]
    # every boundary edge of D' comes from a loop, or lies near the ball's boundary sphere
    loop_edges = set()
    for i in c.subset:
        loop_edges |= set(c.loops[i].support)
    for e, (a, b) in zip(bd.support, E):
        near_rim = min(di[a], di[b]) >= c.ball_radius - float(G.weights.max()) - 1e-12
        assert e in loop_edges or near_rim
    assert res.audits["restrict"]["support_contained"]


def test_planar_image_above_line(wide):
    K, res = wide
    assert res.audits["planar"]["max_below_line"] <= 2 * res.audits["eps"]


def test_serialization_and_svg(wide):
    K, res = wide
    text = json.dumps(res.to_dict(), sort_keys=True, default=float)
    assert '"status": "contradiction"' in text
    svg = res.contradiction.planar_svg(K)
    assert "<svg" in svg and "circle" in svg


def test_shortest_path_tree_paths(genus2):
    G = build_metric_graph(genus2)
    d = geodesic_distances(G, [0])[0]
    pred = shortest_path_tree(G.csr, d)
    for t in (5, 100, G.n_nodes - 1):
        path = tree_path(pred, 0, t)
        assert path[0] == 0 and path[-1] == t
        length = sum(G.csr[a, b] for a, b in zip(path[:-1], path[1:]))
        assert length == pytest.approx(d[t], rel=1e-12)


def test_level_set_surface_branch_decision():
    from urywidth.construct import build_ambient, extract_level_set
    from urywidth.homology import betti

    M = extract_level_set(build_ambient(2, 1.0, 4.0))
    beta = betti(M.complex).beta
    res = theorem12_pipeline(M.complex, space="level-set")
    assert res.beta == beta
    assert res.status in ("reeb", "contradiction")
    if res.status == "reeb":
        assert res.certificate.value < beta + 1
        assert res.certificate.value >= 0.5
