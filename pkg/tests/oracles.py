"""Independent reference implementations used by the tests."""
from __future__ import annotations

from collections import deque

import numpy as np

from urywidth.homology import ChainVector


def fundamental_cycles(K) -> list[ChainVector]:
    """One cycle per non-tree edge of a BFS spanning tree (they span H_1)."""
    E = K.simplices(1)
    n = K.n_vertices
    adj = [[] for _ in range(n)]
    for j, (a, b) in enumerate(E.tolist()):
        adj[a].append((b, j))
        adj[b].append((a, j))
    parent = [-1] * n
    pedge = [-1] * n
    seen = [False] * n
    seen[0] = True
    q = deque([0])
    while q:
        u = q.popleft()
        for v, j in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v], pedge[v] = u, j
                q.append(v)
    tree = set(pedge) - {-1}

    def to_root(v):
        out = []
        while parent[v] != -1:
            out.append(pedge[v])
            v = parent[v]
        return out

    cycles = []
    for j, (a, b) in enumerate(E.tolist()):
        if j not in tree:
            cycles.append(ChainVector.of(1, to_root(a) + to_root(b) + [j]))
    return cycles


def random_cycles(K, m: int, rng, max_terms: int = 3) -> list[ChainVector]:
    base = fundamental_cycles(K)
    out = []
    for _ in range(m):
        k = int(rng.integers(1, max_terms + 1))
        c = ChainVector(1, ())
        for i in rng.choice(len(base), size=k, replace=False):
            c = c + base[int(i)]
        out.append(c)
    return out


def lebesgue_flood_fill(labels_grid: np.ndarray) -> bool:
    """Witness search on a 3x3 Kuhn grid with a 2-point target.

    Region of label y: vertices labeled y plus neighbours of them across an
    edge with a different label.  Components are grown by BFS along y-y
    edges and y-other edges.  True if some component touches two opposite
    sides of the square.
    """
    m = labels_grid.shape[0]
    nbrs = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)]  # Kuhn diagonals

    def neighbours(i, j):
        for di, dj in nbrs:
            a, b = i + di, j + dj
            if 0 <= a < m and 0 <= b < m:
                yield a, b

    for y in np.unique(labels_grid):
        seen = set()
        for start in zip(*np.nonzero(labels_grid == y)):
            if start in seen:
                continue
            comp = {start}
            q = deque([start])
            while q:
                u = q.popleft()
                if labels_grid[u] != y:
                    continue  # pulled-in vertices do not propagate
                for v in neighbours(*u):
                    if v not in comp:
                        comp.add(v)
                        q.append(v)
            seen |= {c for c in comp if labels_grid[c] == y}
            xs = {c[0] for c in comp}
            ys = {c[1] for c in comp}
            if {0, m - 1} <= xs or {0, m - 1} <= ys:
                return True
    return False
