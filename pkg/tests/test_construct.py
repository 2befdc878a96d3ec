from __future__ import annotations

import numpy as np
import pytest

from urywidth.construct import (
    ConstructError,
    base_space,
    build_ambient,
    build_blowup_space,
    extract_level_set,
    scaled_variant,
)
from urywidth.homology import betti
from urywidth.metric import geodesic_distances


@pytest.fixture(scope="module")
def level_set():
    return extract_level_set(build_ambient(2, 0.25, 4.0, tile_cells=4))


def test_level_set_closed_and_contained(level_set):
    assert level_set.is_closed()
    assert level_set.containment_margin() > 0
    meta = level_set.metadata()
    assert meta["closed_fraction"] == 1.0
    assert 0 < np.abs(meta["shift"]).max() < 1e-6


def test_level_set_projection_degree_odd(level_set):
    rng = np.random.default_rng(0)
    counts = {level_set.projection_preimages(q) % 2 for q in rng.uniform(0, 4, size=(5, 2))}
    assert counts == {1}


def test_level_set_vertices_on_zero_set(level_set):
    # p - tau/2 - shift is linear on ambient simplices and vanishes at every vertex of M
    A = level_set.ambient
    w, ids = level_set.carrier_weights[:, :, None], level_set.carrier_ids
    p = (w * A.complex.coords[ids]).sum(axis=1)[:, A.n :]
    tau = (w * A.vertex_tau()[ids]).sum(axis=1)
    assert np.abs(p - tau / 2 - level_set.shift).max() <= 1e-12


def test_level_set_surface_topology(level_set):
    # a closed surface: every vertex link is a circle, chi even
    assert level_set.complex.euler_characteristic() % 2 == 0
    assert betti(level_set.complex).betti[0] >= 1


def test_scaled_variant_guard():
    with pytest.raises(ConstructError):
        scaled_variant(0.5, 0.25)


def test_blowup_monotone_and_dimension_form():
    B = base_space("cube", 1, 0.25)
    S = build_blowup_space(B, 1, 1)
    assert np.all(S.metric.weights >= S.base_metric.weights)
    d0 = geodesic_distances(S.base_metric, range(S.metric.n_nodes))
    d1 = geodesic_distances(S.metric, range(S.metric.n_nodes))
    assert np.all(d1 >= d0)
    with pytest.raises(ConstructError):
        build_blowup_space(B, 1, 2)


def test_blowup_level0_is_base():
    S = build_blowup_space(base_space("cube", 1, 0.5), 0, 2)
    assert S.metric is S.base_metric


def test_scaled_variant_betti_grows_with_period():
    from urywidth.construct import extract_level_set as ext

    b4 = betti(ext(scaled_variant(4.0, 1.0)).complex).beta
    b8 = betti(ext(scaled_variant(8.0, 1.0)).complex).beta
    assert b8 > b4 > 0
