from __future__ import annotations

import copy

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from urywidth import fixtures
from urywidth.metric import build_metric_graph, geodesic_distances
from urywidth.width.certificate import CertificateError, verify_certificate
from urywidth.width.reeb import build_reeb_graph, default_shell_step, uw1_upper_distance_spheres
from urywidth.width.svg import reeb_svg


def cycle_rank(R) -> int:
    n = R.n_nodes
    A = coo_matrix((np.ones(len(R.edges)), (R.edges[:, 0], R.edges[:, 1])), shape=(n, n))
    nc, _ = connected_components(A, directed=False)
    return len(R.edges) - n + nc


def test_sphere_reeb_is_tree(sphere):
    G = build_metric_graph(sphere)
    R = build_reeb_graph(G, 0)
    assert cycle_rank(R) == 0
    assert np.array_equal(np.bincount(R.label), R.sizes)
    assert np.all(np.abs(np.diff(R.shell_of[R.edges], axis=1)) == 1)


def test_genus2_cycle_rank_bounded(genus2):
    R = build_reeb_graph(build_metric_graph(genus2), 0)
    assert cycle_rank(R) <= 2


def test_component_diameters_oracle(sphere):
    G = build_metric_graph(sphere)
    R = build_reeb_graph(G, 5)
    for j in range(R.n_nodes):
        nodes = R.members(j)
        brute = geodesic_distances(G, nodes)[:, nodes].max()
        assert R.diameters[j] == pytest.approx(brute, rel=1e-12)


def test_certificate_and_tamper(genus2):
    G = build_metric_graph(genus2)
    R, cert = uw1_upper_distance_spheres(G, 0, space="g2")
    assert cert.value == R.diameters.max()
    assert cert.evidence["slack"] == 4 * cert.evidence["eps"]
    assert verify_certificate(cert, G)
    bad = copy.deepcopy(cert)
    bad.evidence["nodes"][R.max_node][2] *= 0.5
    assert not verify_certificate(bad, G)
    other = build_metric_graph(fixtures.genus2_surface(4, 1.1))
    assert not verify_certificate(cert, other)


def test_bound_mode_dominates_exact(genus2):
    G = build_metric_graph(genus2)
    Rx = build_reeb_graph(G, 0, exact=True)
    Rb = build_reeb_graph(G, 0, exact=False)
    assert np.all(Rb.diameters >= Rx.diameters - 1e-12)
    _, cert = uw1_upper_distance_spheres(G, 0, exact=False)
    assert verify_certificate(cert, G)


def test_cylinder_far_shells_about_half_circumference():
    K = fixtures.flat_cylinder(16, 64, 0.125)  # circumference 2
    G = build_metric_graph(K)
    R = build_reeb_graph(G, 0)
    far = R.shell_of >= 6
    mid = far & (R.shell_of <= R.shell_of.max() - 4)
    assert mid.sum() >= 10
    # a shell component is a band around the cylinder: diameter about C/2 plus the band width
    assert np.all(R.diameters[mid] >= 1.0 - 1e-12)
    assert np.all(R.diameters[mid] <= 1.0 + 2 * R.dr)


def test_shell_step_guard(sphere):
    G = build_metric_graph(sphere)
    with pytest.raises(CertificateError):
        build_reeb_graph(G, 0, dr=0.5 * float(G.weights.max()))
    assert default_shell_step(G) == 2 * float(G.weights.max())


def test_exports(sphere):
    R = build_reeb_graph(build_metric_graph(sphere), 0)
    rows = R.to_csv_rows()
    assert rows[0][0] == "node" and len(rows) == R.n_nodes + 1
    dot = R.to_dot()
    assert dot.startswith("graph reeb {") and dot.count(" -- ") == len(R.edges)
    svg = reeb_svg(R)
    assert svg.startswith("<svg") or svg.startswith("<?xml")
