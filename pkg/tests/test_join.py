from __future__ import annotations

import numpy as np
import pytest

from urywidth.complex import shape_report
from urywidth.join import (
    DualObstructionError,
    build_join,
    check_preimages,
    face_agreement,
    join_map,
    join_weights,
    retract,
)


@pytest.fixture(scope="module")
def J(colored3):
    return build_join(colored3)


@pytest.fixture(scope="module")
def samples(colored3):
    rng = np.random.default_rng(1)
    return rng.uniform(0.0, 1.2, size=(2000, 3))


def test_pairs_partition_colors(J, colored3):
    assert J.n == 2
    assert np.array_equal(J.pair_of_vertex, (colored3.colors + 1) // 2)
    for i in (1, 2):
        # skeleton edges only join vertices of pair i
        assert np.all(J.in_skeleton(i)[J.skeleta[i - 1]])


def test_partition_of_unity_and_reconstruction(J, samples):
    t, z, _ = join_weights(J, samples)
    assert np.abs(t.sum(axis=1) - 1).max() <= 1e-12
    rec = (t[:, :, None] * np.nan_to_num(z)).sum(axis=1)
    assert np.abs(rec - samples).max() <= 1e-12


def test_weights_match_linear_solve_oracle(J, colored3, samples):
    t, _, rows = join_weights(J, samples[:200])
    P = colored3.coords[rows]  # (m, 4, 3)
    A = np.concatenate([P.transpose(0, 2, 1), np.ones((len(P), 1, 4))], axis=1)
    b = np.concatenate([samples[:200], np.ones((200, 1))], axis=1)
    lam = np.linalg.solve(A, b[:, :, None])[:, :, 0]
    pair = (colored3.colors[rows] + 1) // 2
    oracle = np.stack([(lam * (pair == i)).sum(axis=1) for i in (1, 2)], axis=1)
    assert np.abs(oracle - t).max() <= 1e-10


def test_face_agreement(J):
    assert face_agreement(J, samples=3, max_faces=300) <= 1e-9 * J.base.mesh_scale


def test_preimages(J):
    assert check_preimages(J)


def test_retraction_displacement(J, colored3, samples):
    diam = shape_report(colored3).max_diameter
    t, _, _ = join_weights(J, samples)
    for i in (1, 2):
        ok = t[:, i - 1] > 1e-9
        r = retract(J, i, samples[ok])
        assert np.linalg.norm(r - samples[ok], axis=1).max() <= diam


def test_retraction_blocked_on_dual(J, colored3):
    v = colored3.coords[np.flatnonzero(J.in_skeleton(2))[0]]
    with pytest.raises(DualObstructionError):
        retract(J, 1, v)


def test_join_map_vertices(J, colored3):
    tau = join_map(J, colored3.coords[:50])
    assert np.allclose(tau, J.vertex_tau()[:50], atol=1e-12)
