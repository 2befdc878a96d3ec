"""Z/2 simplicial chains, boundary maps, Betti numbers and bounding chains.

Columns of boundary matrices are Python integers used as bitsets, which
keeps Gaussian elimination over Z/2 short and exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .complex import ColoredComplex

__all__ = [
    "HomologyError",
    "ChainVector",
    "HomologyProfile",
    "ChainComplexZ2",
    "boundary",
    "betti",
    "dependent_subset",
    "bound_2chain",
    "restrict_chain",
    "chain_from_path",
    "chain_to_json",
    "chain_from_json",
]


class HomologyError(ValueError):
    pass


@dataclass(frozen=True)
class ChainVector:
    """Z/2 chain: the sorted indices into ``K.simplices(dim)`` with coefficient 1."""

    dim: int
    support: tuple[int, ...]

    @classmethod
    def of(cls, dim: int, ids: Iterable[int]) -> "ChainVector":
        ids = np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=np.int64)
        uniq, counts = np.unique(ids, return_counts=True)
        return cls(dim, tuple(int(v) for v in uniq[counts % 2 == 1]))

    def __add__(self, other: "ChainVector") -> "ChainVector":
        if other.dim != self.dim:
            raise HomologyError("cannot add chains of different dimensions")
        return ChainVector(self.dim, tuple(sorted(set(self.support) ^ set(other.support))))

    def __len__(self) -> int:
        return len(self.support)

    @property
    def is_zero(self) -> bool:
        return not self.support

    def to_bits(self) -> int:
        out = 0
        for i in self.support:
            out |= 1 << i
        return out

    @classmethod
    def from_bits(cls, dim: int, bits: int) -> "ChainVector":
        ids = []
        while bits:
            low = bits & -bits
            ids.append(low.bit_length() - 1)
            bits ^= low
        return cls(dim, tuple(ids))


@dataclass(frozen=True)
class HomologyProfile:
    betti: tuple[int, ...]

    @property
    def beta(self) -> int:
        return self.betti[1] if len(self.betti) > 1 else 0

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * b for k, b in enumerate(self.betti))


def _row_index(table: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Positions of sorted ``rows`` inside the lexicographically sorted ``table``."""
    if table.shape[1] == 1:
        return np.searchsorted(table[:, 0], rows[:, 0])
    n = int(max(table.max(), rows.max())) + 1 if len(table) else 1
    if n ** table.shape[1] < 2**62:
        w = n ** np.arange(table.shape[1] - 1, -1, -1, dtype=np.int64)
        tc = table @ w
        rc = rows @ w
        pos = np.searchsorted(tc, rc)
        pos = np.minimum(pos, len(tc) - 1)
        if np.any(tc[pos] != rc):
            raise HomologyError("face not found in complex")
        return pos
    lookup = {tuple(r): i for i, r in enumerate(table.tolist())}
    return np.array([lookup[tuple(r)] for r in rows.tolist()], dtype=np.int64)


@dataclass(eq=False)
class ChainComplexZ2:
    """Boundary maps of a complex with lazily reduced columns."""

    K: ColoredComplex
    _faces: dict = field(default_factory=dict)
    _reduced: dict = field(default_factory=dict)

    def simplices(self, k: int) -> np.ndarray:
        return self.K.simplices(k)

    def faces(self, k: int) -> np.ndarray:
        """(n_k, k+1) indices of the (k-1)-faces of each k-simplex."""
        if k not in self._faces:
            S = self.simplices(k)
            cols = [[j for j in range(k + 1) if j != drop] for drop in range(k + 1)]
            rows = S[:, cols].reshape(-1, k)
            self._faces[k] = _row_index(self.simplices(k - 1), rows).reshape(len(S), k + 1)
        return self._faces[k]

    def column(self, k: int, j: int) -> int:
        out = 0
        for f in self.faces(k)[j].tolist():
            out ^= 1 << f
        return out

    def boundary(self, chain: ChainVector) -> ChainVector:
        if chain.dim == 0:
            return ChainVector(-1, ())
        ids = np.asarray(chain.support, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= len(self.simplices(chain.dim))):
            raise HomologyError("chain refers to a missing simplex")
        return ChainVector.of(chain.dim - 1, self.faces(chain.dim)[ids].reshape(-1))

    def reduction(self, k: int):
        """Column reduction of the k-th boundary matrix.

        Returns ``(pivots, combos)``: ``pivots[p]`` is a reduced column whose
        highest set bit is ``p`` and ``combos[p]`` the bitset of k-simplices
        summing to it.
        """
        if k not in self._reduced:
            pivots: dict[int, int] = {}
            combos: dict[int, int] = {}
            n = len(self.simplices(k)) if 0 < k <= self.K.dim else 0
            for j in range(n):
                col = self.column(k, j)
                combo = 1 << j
                while col:
                    p = col.bit_length() - 1
                    if p not in pivots:
                        pivots[p] = col
                        combos[p] = combo
                        break
                    col ^= pivots[p]
                    combo ^= combos[p]
            self._reduced[k] = (pivots, combos)
        return self._reduced[k]

    def rank(self, k: int) -> int:
        if k <= 0 or k > self.K.dim:
            return 0
        return len(self.reduction(k)[0])

    def reduce(self, k: int, bits: int) -> tuple[int, int]:
        """Reduce a (k-1)-chain modulo the image of the k-th boundary map.

        Returns the remainder and the k-chain whose boundary was removed.
        """
        pivots, combos = self.reduction(k)
        combo = 0
        while bits:
            p = bits.bit_length() - 1
            if p not in pivots:
                break
            bits ^= pivots[p]
            combo ^= combos[p]
        # keep reducing lower bits so the remainder is canonical
        rem = 0
        while bits:
            p = bits.bit_length() - 1
            if p in pivots:
                bits ^= pivots[p]
                combo ^= combos[p]
            else:
                rem |= 1 << p
                bits ^= 1 << p
        return rem, combo


def boundary(K: ColoredComplex | ChainComplexZ2, chain: ChainVector) -> ChainVector:
    C = K if isinstance(K, ChainComplexZ2) else ChainComplexZ2(K)
    return C.boundary(chain)


def betti(K: ColoredComplex | ChainComplexZ2) -> HomologyProfile:
    C = K if isinstance(K, ChainComplexZ2) else ChainComplexZ2(K)
    d = C.K.dim
    ranks = [C.rank(k) for k in range(d + 2)]
    out = []
    for k in range(d + 1):
        out.append(len(C.simplices(k)) - ranks[k] - ranks[k + 1])
    return HomologyProfile(tuple(out))


def _as_cycle(C: ChainComplexZ2, loop: ChainVector | Sequence[int]) -> ChainVector:
    ch = loop if isinstance(loop, ChainVector) else ChainVector.of(1, loop)
    if ch.dim != 1:
        raise HomologyError("loops must be 1-chains")
    if not C.boundary(ch).is_zero:
        raise HomologyError("input chain is not a cycle")
    return ch


def bound_2chain(K: ColoredComplex | ChainComplexZ2, cycle: ChainVector) -> ChainVector | None:
    """A 2-chain with boundary ``cycle``, or ``None`` when the class is nonzero."""
    C = K if isinstance(K, ChainComplexZ2) else ChainComplexZ2(K)
    cycle = _as_cycle(C, cycle)
    rem, combo = C.reduce(2, cycle.to_bits())
    if rem:
        return None
    D = ChainVector.from_bits(2, combo)
    if C.boundary(D) != cycle:
        raise HomologyError("internal error: bounding chain does not round-trip")
    return D


def dependent_subset(
    K: ColoredComplex | ChainComplexZ2, loops: Sequence[ChainVector | Sequence[int]]
) -> tuple[int, ...] | None:
    """Smallest-prefix set of loop indices (0-based) whose classes sum to zero.

    Returns ``None`` when the loops are independent in ``H_1(K; Z/2)``.
    """
    C = K if isinstance(K, ChainComplexZ2) else ChainComplexZ2(K)
    cycles = [_as_cycle(C, l) for l in loops]
    basis: dict[int, tuple[int, int]] = {}
    for idx, cyc in enumerate(cycles):
        rem, _ = C.reduce(2, cyc.to_bits())
        used = 1 << idx
        while rem:
            p = rem.bit_length() - 1
            if p not in basis:
                basis[p] = (rem, used)
                break
            vec, u = basis[p]
            rem ^= vec
            used ^= u
        if not rem:
            subset = tuple(i for i in range(idx + 1) if used >> i & 1)
            total = ChainVector(1, ())
            for i in subset:
                total = total + cycles[i]
            if bound_2chain(C, total) is None:
                raise HomologyError("internal error: dependency is not null-homologous")
            return subset
    return None


def restrict_chain(K: ColoredComplex, D: ChainVector, nodes: Iterable[int]) -> ChainVector:
    """Simplices of ``D`` whose vertices all lie in ``nodes``."""
    mask = np.zeros(K.n_vertices, dtype=bool)
    mask[np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64)] = True
    ids = np.asarray(D.support, dtype=np.int64)
    if ids.size == 0:
        return ChainVector(D.dim, ())
    rows = K.simplices(D.dim)[ids]
    keep = np.all(mask[rows], axis=1)
    return ChainVector(D.dim, tuple(int(v) for v in ids[keep]))


def chain_from_path(K: ColoredComplex, vertices: Sequence[int]) -> ChainVector:
    """1-chain of the edges along a vertex path (closed if first == last)."""
    v = np.asarray(vertices, dtype=np.int64)
    if len(v) < 2:
        return ChainVector(1, ())
    rows = np.sort(np.stack([v[:-1], v[1:]], axis=1), axis=1)
    rows = rows[rows[:, 0] != rows[:, 1]]
    if len(rows) == 0:
        return ChainVector(1, ())
    return ChainVector.of(1, _row_index(K.simplices(1), rows))


def chain_to_json(chain: ChainVector, K: ColoredComplex | None = None) -> str:
    payload = {"dim": chain.dim, "support": list(chain.support)}
    if K is not None:
        payload["simplices"] = K.simplices(chain.dim)[list(chain.support)].tolist()
    return json.dumps(payload, sort_keys=True)


def chain_from_json(text: str) -> ChainVector:
    data = json.loads(text)
    return ChainVector(int(data["dim"]), tuple(sorted(int(v) for v in data["support"])))
