from __future__ import annotations

import itertools

import numpy as np
import pytest

from oracles import lebesgue_flood_fill
from urywidth.complex import kuhn_triangulate
from urywidth.width.fibers import TargetComplex
from urywidth.width.lebesgue import LebesgueError, lebesgue_check


@pytest.fixture(scope="module")
def grid():
    K = kuhn_triangulate(2, 2, 1.0)
    ij = np.rint(K.coords).astype(int)
    return K, ij


def test_oracle_adjacency_is_kuhn(grid):
    K, ij = grid
    steps = {tuple(sorted([tuple(d), tuple(-d)]))[1] for d in (ij[K.simplices(1)[:, 1]] - ij[K.simplices(1)[:, 0]])}
    assert steps == {(0, 1), (1, 0), (1, 1)}


def test_exhaustive_matches_oracle(grid):
    K, ij = grid
    found = 0
    for bits in itertools.product((0, 1), repeat=K.n_vertices):
        labels = np.array(bits)
        res = lebesgue_check(K, labels)
        g = np.zeros((3, 3), int)
        g[ij[:, 0], ij[:, 1]] = labels
        assert res.found == lebesgue_flood_fill(g), bits
        found += res.found
    assert found == 512


def test_constant_labeling_witness(grid):
    K, _ = grid
    res = lebesgue_check(K, np.zeros(K.n_vertices, int))
    assert res.found and res.crossing_pairs == 0
    assert res.witness.to_dict()["facets"][0].endswith("=min")


def test_path_target_3d_cube():
    K = kuhn_triangulate(3, 2, 1.0)
    labels = np.rint(K.coords[:, 0]).astype(int)  # project onto a path 0-1-2
    res = lebesgue_check(K, labels, TargetComplex.path(3))
    assert res.found and res.crossing_pairs == 0


def test_rejections(grid):
    K, _ = grid
    with pytest.raises(LebesgueError):
        lebesgue_check(K, np.zeros(3, int))
    with pytest.raises(LebesgueError):
        lebesgue_check(K, np.zeros(K.n_vertices), None)
    with pytest.raises(LebesgueError):
        lebesgue_check(K, np.zeros(K.n_vertices, int), TargetComplex(np.array([[0, 1, 2]])))


def test_segment_two_labels():
    K = kuhn_triangulate(1, 1, 1.0)
    res = lebesgue_check(K, np.array([0, 1]))
    assert res.found and res.crossing_pairs == 1
