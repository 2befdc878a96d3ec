from __future__ import annotations

import numpy as np
import pytest

from urywidth import fixtures
from urywidth.homology import (
    ChainComplexZ2,
    ChainVector,
    HomologyError,
    betti,
    bound_2chain,
    boundary,
    chain_from_json,
    chain_from_path,
    chain_to_json,
    dependent_subset,
    restrict_chain,
)


def gf2_rank(M: np.ndarray) -> int:
    """Dense Gaussian elimination over Z/2 (oracle)."""
    M = M.copy() % 2
    r = 0
    rows, cols = M.shape
    for c in range(cols):
        piv = np.flatnonzero(M[r:, c])
        if len(piv) == 0:
            continue
        p = r + piv[0]
        M[[r, p]] = M[[p, r]]
        hit = np.flatnonzero(M[:, c])
        hit = hit[hit != r]
        M[hit] ^= M[r]
        r += 1
        if r == rows:
            break
    return r


def dense_betti(K) -> tuple[int, int, int]:
    C = ChainComplexZ2(K)
    nv, ne, nf = (len(K.simplices(k)) for k in range(3))
    d1 = np.zeros((nv, ne), dtype=np.uint8)
    E = K.simplices(1)
    d1[E[:, 0], np.arange(ne)] = 1
    d1[E[:, 1], np.arange(ne)] = 1
    d2 = np.zeros((ne, nf), dtype=np.uint8)
    F = C.faces(2)
    for j, row in enumerate(F):
        d2[row, j] = 1
    r1, r2 = gf2_rank(d1), gf2_rank(d2)
    return nv - r1, ne - r1 - r2, nf - r2


@pytest.mark.parametrize(
    "make,expected",
    [
        (lambda: fixtures.cube_sphere(1), (1, 0, 1)),
        (lambda: fixtures.polycube_torus(1), (1, 2, 1)),
        (lambda: fixtures.flat_torus(4, 1.0), (1, 2, 1)),
        (lambda: fixtures.genus2_surface(1), (1, 4, 1)),
    ],
)
def test_betti_matches_oracle(make, expected):
    K = make()
    assert betti(K).betti == expected
    assert dense_betti(K) == expected
    assert betti(K).euler_characteristic() == K.euler_characteristic()


def test_boundary_of_boundary_is_zero(genus2):
    C = ChainComplexZ2(genus2)
    D = ChainVector.of(2, range(0, len(genus2.top), 3))
    assert C.boundary(C.boundary(D)).is_zero


def test_chainvector_mod2():
    a = ChainVector.of(1, [3, 1, 3, 2])
    assert a.support == (1, 2)
    assert (a + a).is_zero
    assert ChainVector.from_bits(1, a.to_bits()) == a


def test_bound_2chain_round_trip(genus2):
    C = ChainComplexZ2(genus2)
    rng = np.random.default_rng(3)
    nf = len(C.simplices(2))
    for _ in range(20):
        D = ChainVector.of(2, rng.choice(nf, size=rng.integers(1, 40), replace=False).tolist())
        cyc = C.boundary(D)
        E = bound_2chain(C, cyc)
        assert E is not None and C.boundary(E) == cyc


def test_nontrivial_loop_does_not_bound():
    K = fixtures.flat_torus(4, 1.0)
    # a horizontal loop around the torus
    keys = K.keys
    row = np.flatnonzero(keys[:, 1] == 0)
    row = row[np.argsort(keys[row, 0])]
    loop = chain_from_path(K, list(row) + [row[0]])
    assert boundary(K, loop).is_zero
    assert bound_2chain(K, loop) is None


def test_not_a_cycle_rejected(genus2):
    E = ChainVector(1, (0,))
    with pytest.raises(HomologyError):
        bound_2chain(genus2, E)


def test_dependent_subset_on_genus2(genus2):
    C = ChainComplexZ2(genus2)
    rng = np.random.default_rng(5)
    nf = len(C.simplices(2))
    # beta + 1 = 5 loops: any such family is dependent
    loops = [C.boundary(ChainVector.of(2, rng.choice(nf, 10, replace=False).tolist())) for _ in range(5)]
    sub = dependent_subset(C, loops)
    assert sub is not None
    total = ChainVector(1, ())
    for i in sub:
        total = total + loops[i]
    assert bound_2chain(C, total) is not None


def test_restrict_and_json(genus2):
    D = ChainVector.of(2, range(10))
    tri = genus2.simplices(2)[list(D.support)]
    keep = np.unique(tri[:5])
    R = restrict_chain(genus2, D, keep)
    assert set(R.support) <= set(D.support)
    assert all(np.isin(genus2.simplices(2)[list(R.support)], keep).all(axis=1))
    assert chain_from_json(chain_to_json(D, genus2)) == D


def test_dependent_subset_nontrivial_loops(genus2):
    from oracles import random_cycles

    C = ChainComplexZ2(genus2)
    rng = np.random.default_rng(7)
    for _ in range(10):
        loops = random_cycles(genus2, 5, rng)
        sub = dependent_subset(C, loops)
        assert sub is not None


def test_fundamental_cycles_span_h1(genus2):
    from oracles import fundamental_cycles

    C = ChainComplexZ2(genus2)
    cyc = fundamental_cycles(genus2)
    # four of them are independent; all of them together are dependent
    assert dependent_subset(C, cyc) is not None
    nontrivial = [c for c in cyc if bound_2chain(C, c) is None]
    assert len(nontrivial) >= 4
