from __future__ import annotations

import copy
import math

import numpy as np
import pytest

from urywidth.cli import winding_instance
from urywidth.construct import build_ambient, extract_level_set
from urywidth.metric import build_metric_graph
from urywidth.width.certificate import verify_certificate
from urywidth.width.winding import (
    WindingError,
    doubled,
    incircle,
    mod2_winding,
    projection_degree_certificate,
    winding_directions,
    winding_lower_certificate,
)


def angle_winding(poly: np.ndarray, q: np.ndarray) -> int:
    """Winding number by summing signed angles (oracle)."""
    v = poly - q
    a = np.arctan2(v[:, 1], v[:, 0])
    da = np.diff(np.concatenate([a, a[:1]]))
    da = (da + np.pi) % (2 * np.pi) - np.pi
    return int(round(da.sum() / (2 * np.pi)))


def star_polygon(k=7, step=3, r=1.0):
    ang = 2 * np.pi * (np.arange(k) * step % k) / k + 0.1
    return r * np.stack([np.cos(ang), np.sin(ang)], axis=1)


@pytest.mark.parametrize("poly", [star_polygon(), star_polygon(5, 2), np.array([[0, 0], [2, 0], [2, 1], [1, 0.3], [0, 1.0]])])
def test_parity_matches_angle_sum(poly):
    rng = np.random.default_rng(2)
    for q in rng.uniform(-1.2, 2.2, size=(200, 2)):
        try:
            par = mod2_winding(poly, q)
        except WindingError:
            continue
        assert par == angle_winding(poly, q) % 2


def test_ray_invariance_8_directions():
    poly = star_polygon()
    rng = np.random.default_rng(4)
    for q in rng.uniform(-1, 1, size=(50, 2)):
        pars = {mod2_winding(poly, q, d) for d in winding_directions(8)}
        assert len(pars) == 1


def test_on_boundary_raises():
    with pytest.raises(WindingError):
        mod2_winding(np.array([[0, 0], [1, 0], [0, 1.0]]), [0.5, 0.0])


def test_incircle_closed_form():
    c, r = incircle([1.0, 0.0], [1.0, 1.0], [0.5, 0.5])
    assert abs(r - (math.sqrt(2) - 1) / 2) <= 1e-12
    assert np.allclose(c, [1.0 - r, 0.5], atol=1e-12)


def test_triangle_instance_bound():
    K, D, f, c, r, L = winding_instance("triangle")
    cert = winding_lower_certificate(f, K, D, c, r, L, G=build_metric_graph(K))
    expected = (math.sqrt(2) - 1) / (4 * math.sqrt(2))
    assert abs(cert.value - expected) <= 1e-12
    assert cert.evidence["parities"] == [1] * 8
    assert verify_certificate(cert)
    bad = copy.deepcopy(cert)
    bad.value = 0.2
    assert not verify_certificate(bad)


def test_annulus_instance():
    K, D, f, c, r, L = winding_instance("annulus")
    cert = winding_lower_certificate(f, K, D, c, r, L, G=build_metric_graph(K))
    assert cert.value == pytest.approx(0.15, abs=1e-12)
    assert verify_certificate(cert)


def test_even_winding_gives_nothing():
    K, D, f, c, r, L = winding_instance("annulus")
    # the hole: boundary circles both wind around the origin, parity even
    assert winding_lower_certificate(f, K, D, np.array([0.0, 0.0]), 0.5, L) is None


def test_lipschitz_check_enforced():
    K, D, f, c, r, L = winding_instance("triangle")
    with pytest.raises(WindingError):
        winding_lower_certificate(c + 3.0 * (f - c), K, D, c, r, L, G=build_metric_graph(K))


@pytest.fixture(scope="module")
def level_set():
    return extract_level_set(build_ambient(2, 0.25, 4.0, tile_cells=4))


def test_projection_degree(level_set):
    cert = projection_degree_certificate(level_set, space="ls")
    assert cert.value == 1.0 and cert.d == 1
    assert verify_certificate(cert, level_set)
    assert projection_degree_certificate(doubled(level_set)) is None


def test_unit_circle():
    ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    circle = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    assert mod2_winding(circle, [0.0, 0.0]) == 1
    assert mod2_winding(circle, [2.0, 0.3]) == 0


def test_triangle_with_far_returns():
    # boundary crosses the incircle's side once, then returns far away
    r = 1.0
    c, _ = incircle([r, 0.0], [r, 1.0], [r - 0.5, 0.5])
    loop = np.array([[r, 0.0], [r - 0.5, 0.5], [r, 1.0], [r + 5, 6.0], [r + 5, -5.0]])
    assert mod2_winding(loop, c) == 1
