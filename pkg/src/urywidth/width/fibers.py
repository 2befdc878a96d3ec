"""Upper bounds on Urysohn width from explicit maps to simplicial complexes.

A map is given on the nodes of a metric graph: each node is sent to a cell
(a simplex) of a target complex.  The fiber over the closed star of a target
vertex ``y`` consists of the nodes whose cell spans a simplex together with
``y``; every point preimage lies in one of these, so the largest of their
extrinsic diameters bounds the width from above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csgraph

from ..metric import MetricGraph
from .certificate import CertificateError, WidthCertificate, array_hash, register_verifier

__all__ = [
    "AssignmentError",
    "WindowError",
    "EuclideanIndex",
    "TargetComplex",
    "FiberTable",
    "FiberDiameter",
    "fiber_diameter",
    "set_diameter",
    "fiber_radius",
    "fiber_table",
    "uw_upper_from_map",
]


class AssignmentError(ValueError):
    pass


class WindowError(AssignmentError):
    """A computation on a window would need nodes beyond its rim."""


@dataclass(eq=False)
class EuclideanIndex:
    """Candidate prefilter for graphs whose edge weights dominate the
    Euclidean length of the (unwrapped, non-periodic) edge.

    Every node within graph distance ``R`` of a seed lies in the seeds'
    bounding box grown by ``R``, so the box contains every shortest path of
    length at most ``R`` and searching inside it is exact.
    """

    points: np.ndarray
    axis: int = -1
    _order: np.ndarray | None = None
    _vals: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, float)
        if self.axis < 0:
            self.axis = int(np.argmax(np.ptp(pts, axis=0))) if len(pts) else 0
        self._order = np.argsort(pts[:, self.axis], kind="stable")
        self._vals = pts[self._order, self.axis]
        self.points = pts

    @classmethod
    def for_graph(cls, G: MetricGraph) -> "EuclideanIndex":
        if any(p is not None for p in G.period_lengths):
            raise AssignmentError("Euclidean prefilter needs a non-periodic graph")
        e = G.edges
        if len(e) and np.any(np.linalg.norm(G.points[e[:, 0]] - G.points[e[:, 1]], axis=1) > G.weights * (1 + 1e-9)):
            raise AssignmentError("edge weights do not dominate Euclidean lengths")
        return cls(G.points)

    def candidates(self, seeds: np.ndarray, radius: float) -> np.ndarray:
        p = self.points[seeds]
        lo = p.min(axis=0) - radius
        hi = p.max(axis=0) + radius
        a = np.searchsorted(self._vals, lo[self.axis], side="left")
        b = np.searchsorted(self._vals, hi[self.axis], side="right")
        cand = self._order[a:b]
        q = self.points[cand]
        ok = np.all((q >= lo) & (q <= hi), axis=1)
        return np.sort(cand[ok])


def _neighbourhood(G: MetricGraph, seeds: np.ndarray, radius: float, index: EuclideanIndex | None = None):
    """Sorted nodes within ``radius`` of the seeds, and the CSR restricted to them."""
    if index is None:
        d = csgraph.dijkstra(G.csr, directed=True, indices=seeds, limit=radius, min_only=True)
        keep = np.flatnonzero(np.isfinite(d))
        return keep, G.csr[keep][:, keep]
    pre = index.candidates(seeds, radius)
    sub = G.csr[pre][:, pre]
    d = csgraph.dijkstra(sub, directed=True, indices=np.searchsorted(pre, seeds), limit=radius, min_only=True)
    loc = np.flatnonzero(np.isfinite(d))
    return pre[loc], sub[loc][:, loc]


@dataclass(frozen=True, eq=False)
class TargetComplex:
    """Simplicial complex given by its top simplices over integer labels."""

    top: np.ndarray
    name: str = "target"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        top = np.asarray(self.top, dtype=np.int64)
        if top.ndim != 2 or top.shape[1] < 1:
            raise AssignmentError("target top simplices must be a 2D array")
        object.__setattr__(self, "top", np.sort(top, axis=1))

    @property
    def dim(self) -> int:
        return self.top.shape[1] - 1

    @property
    def labels(self) -> np.ndarray:
        if "labels" not in self._cache:
            self._cache["labels"] = np.unique(self.top)
        return self._cache["labels"]

    @classmethod
    def points(cls, labels: Sequence[int], name: str = "points") -> "TargetComplex":
        return cls(np.asarray(labels, dtype=np.int64).reshape(-1, 1), name)

    @classmethod
    def path(cls, n: int, name: str = "path") -> "TargetComplex":
        """Path 0 - 1 - ... - (n-1)."""
        if n < 2:
            return cls.points(range(n), name)
        a = np.arange(n - 1)
        return cls(np.stack([a, a + 1], axis=1), name)

    @classmethod
    def graph(cls, edges: np.ndarray, vertices: Sequence[int] = (), name: str = "graph") -> "TargetComplex":
        """1-complex from edges; isolated ``vertices`` become extra 0-cells.

        Mixed-dimension tops are padded by repeating the vertex.
        """
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        used = set(np.unique(e).tolist())
        iso = [v for v in vertices if v not in used]
        if iso:
            e = np.concatenate([e, np.repeat(np.asarray(iso, np.int64)[:, None], 2, axis=1)])
        return cls(e, name)

    def _incidence(self) -> dict[int, np.ndarray]:
        if "inc" not in self._cache:
            order = np.argsort(self.top, axis=None, kind="stable")
            flat = self.top.reshape(-1)[order]
            rows = order // self.top.shape[1]
            cuts = np.flatnonzero(np.diff(flat)) + 1
            self._cache["inc"] = {
                int(flat[s]): np.unique(rows[s:e]) for s, e in zip(np.r_[0, cuts], np.r_[cuts, len(flat)])
            }
        return self._cache["inc"]

    def star_vertices(self, cell: Sequence[int]) -> np.ndarray:
        """Vertices ``y`` such that ``cell + {y}`` is a simplex (empty if ``cell`` is not one)."""
        cell = [int(v) for v in cell if v >= 0]
        if not cell:
            return np.zeros(0, np.int64)
        inc = self._incidence()
        tops = None
        for v in cell:
            rows = inc.get(v)
            if rows is None:
                return np.zeros(0, np.int64)
            tops = rows if tops is None else np.intersect1d(tops, rows, assume_unique=True)
        if tops is None or len(tops) == 0:
            return np.zeros(0, np.int64)
        return np.unique(self.top[tops])


def _cell_stars(target: TargetComplex, cells: np.ndarray):
    """CSR (ptr, vals) of star vertices per node, plus a validity mask."""
    cells = np.asarray(cells, dtype=np.int64)
    if cells.ndim == 1:
        cells = cells[:, None]
    cells = np.sort(np.where(cells < 0, np.iinfo(np.int64).max, cells), axis=1)
    cells = np.where(cells == np.iinfo(np.int64).max, -1, cells)
    uniq, inv = np.unique(cells, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    stars = [target.star_vertices(row) for row in uniq]
    lens = np.array([len(s) for s in stars], dtype=np.int64)
    uptr = np.r_[0, np.cumsum(lens)]
    uvals = np.concatenate(stars) if stars else np.zeros(0, np.int64)
    return inv, uptr, uvals, lens[inv] > 0


@dataclass
class FiberTable:
    """Closed-star fibers: ``keys[j]`` (one target vertex per factor) and node lists."""

    keys: np.ndarray
    nodes: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.nodes)

    def lookup(self) -> dict[tuple, int]:
        return {tuple(int(v) for v in k): j for j, k in enumerate(self.keys)}


def fiber_table(
    targets: Sequence[TargetComplex], cells: Sequence[np.ndarray], nodes: np.ndarray | None = None
) -> FiberTable:
    """Group nodes by closed stars of vertices of the product of ``targets``.

    ``cells[f]`` holds, per node, the cell of factor ``f`` (vertex labels, ``-1``
    padded).  Nodes whose cell is not a simplex of the target are rejected.
    """
    if len(targets) != len(cells) or not targets:
        raise AssignmentError("one cell array per target factor is required")
    n_nodes = len(np.asarray(cells[0]))
    node_ids = np.arange(n_nodes) if nodes is None else np.asarray(nodes, dtype=np.int64)
    # (row node, key columns) pairs, expanded factor by factor
    pair_node = node_ids.copy()
    pair_key = np.zeros((len(node_ids), 0), np.int64)
    for T, c in zip(targets, cells):
        c = np.asarray(c, dtype=np.int64)
        if len(c) != n_nodes:
            raise AssignmentError("cell arrays must have one row per node")
        inv, uptr, uvals, ok = _cell_stars(T, c)
        if not np.all(ok[node_ids]):
            bad = int(node_ids[~ok[node_ids]][0])
            raise AssignmentError(f"node {bad} is not assigned to a cell of {T.name}")
        u = inv[pair_node]
        cnt = uptr[u + 1] - uptr[u]
        rep = np.repeat(np.arange(len(pair_node)), cnt)
        offs = np.arange(len(rep)) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        vals = uvals[uptr[u][rep] + offs]
        pair_node = pair_node[rep]
        pair_key = np.concatenate([pair_key[rep], vals[:, None]], axis=1)
    order = np.lexsort((pair_node,) + tuple(pair_key[:, j] for j in range(pair_key.shape[1] - 1, -1, -1)))
    pk = pair_key[order]
    pn = pair_node[order]
    if len(pk) == 0:
        return FiberTable(np.zeros((0, len(targets)), np.int64), [])
    change = np.any(pk[1:] != pk[:-1], axis=1)
    cuts = np.flatnonzero(change) + 1
    starts = np.r_[0, cuts]
    ends = np.r_[cuts, len(pk)]
    return FiberTable(pk[starts], [np.unique(pn[s:e]) for s, e in zip(starts, ends)])


REL_TOL = 1e-12


def set_diameter(
    csr, pos: np.ndarray, exhaustive: bool = False, start: int = 0, limit: float = np.inf
) -> tuple[float, tuple[int, int]]:
    """Largest graph distance between the nodes ``pos`` (indices into ``csr``).

    The default prunes sources with ``ecc(u) <= d(u, s) + ecc(s)``: once no
    unvisited node can beat the best pair found, that pair is the diameter.
    ``exhaustive`` runs every source instead; ``start`` picks the first
    source.  ``limit`` caps every search: a diameter above it comes back as
    ``inf`` (verifiers pass a value slightly above the claim).  Returns
    positions into ``pos``.
    """
    pos = np.asarray(pos, dtype=np.int64)
    m = len(pos)
    if exhaustive or m <= 8:
        d = csgraph.dijkstra(csr, directed=True, indices=pos, limit=limit)[:, pos]
        flat = int(np.argmax(d))
        return float(d.flat[flat]), divmod(flat, m)
    ub = np.full(m, np.inf)
    done = np.zeros(m, bool)
    best, wit = -1.0, (0, 0)
    s = start % m
    while True:
        d = csgraph.dijkstra(csr, directed=True, indices=pos[s], limit=limit)[pos]
        done[s] = True
        j = int(np.argmax(d))
        ecc = float(d[j])
        if ecc > best:
            best, wit = ecc, (s, j)
        if math.isinf(best):
            return best, wit
        ub = np.minimum(ub, d + ecc)
        cand = ~done & (ub * (1 + REL_TOL) > best)
        if not np.any(cand):
            return best, wit
        # alternate between the farthest node (sweeps) and the loosest bound
        s = j if cand[j] else int(np.flatnonzero(cand)[np.argmax(ub[cand])])


def fiber_radius(
    G: MetricGraph,
    nodes: np.ndarray,
    center: int | None = None,
    forbidden: np.ndarray | None = None,
    guess: float | None = None,
) -> tuple[float, int, int]:
    """Eccentricity of ``center`` over ``nodes``: ``(ecc, center, farthest)``.

    ``2 * ecc`` bounds the diameter of ``nodes`` from above.  The default
    center is the node nearest the Euclidean centroid.  A search limited to
    ``L`` is exact for every node it reaches; the limit doubles until all
    nodes are reached.  With ``forbidden``, no node closer than ``ecc`` may be
    forbidden (so no shorter path can leave the window).
    """
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    if nodes.size == 0:
        raise AssignmentError("empty fiber")
    if center is None:
        pts = G.points[nodes]
        center = int(nodes[np.argmin(((pts - pts.mean(axis=0)) ** 2).sum(axis=1))])
    L = guess if guess is not None else (4.0 * float(np.median(G.weights)) if G.n_edges else 1.0)
    while True:
        d = csgraph.dijkstra(G.csr, directed=True, indices=center, limit=L)
        dn = d[nodes]
        if np.all(np.isfinite(dn)):
            break
        if not np.isfinite(d).sum() < G.n_nodes or L > 1e12:
            return math.inf, center, int(nodes[np.argmax(dn)])
        L *= 2.0
    j = int(np.argmax(dn))
    ecc = float(dn[j])
    if forbidden is not None and np.any(forbidden[d <= ecc * (1 + REL_TOL)]):
        raise WindowError(f"radius-{ecc:.4g} ball around the fiber center reaches the window rim")
    return ecc, center, int(nodes[j])


@dataclass(frozen=True)
class FiberDiameter:
    value: float
    witnesses: tuple[int, int]
    radius: float
    exact: bool


def fiber_diameter(
    G: MetricGraph,
    nodes: np.ndarray,
    radius: float | None = None,
    max_radius: float = math.inf,
    forbidden: np.ndarray | None = None,
    index: EuclideanIndex | None = None,
    exhaustive: bool = False,
    start: int = 0,
) -> FiberDiameter:
    """Extrinsic diameter of ``nodes`` in ``G``, computed on a local subgraph.

    Distances on the subgraph within ``radius`` of the nodes are upper bounds;
    when the diameter ``D`` found there satisfies ``D <= 2 * radius`` every
    shorter path stays inside the subgraph, so ``D`` is exact.  Otherwise the
    radius grows to ``D / 2`` (or doubles when nodes are disconnected locally)
    until exact or ``max_radius`` is passed; then the whole graph is used.

    ``forbidden`` marks nodes (e.g. the rim of a window cut out of a larger
    space) that the exact neighbourhood must not reach; reaching one raises
    :class:`WindowError`.
    """
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    if nodes.size == 0:
        raise AssignmentError("empty fiber")
    if nodes.size == 1:
        return FiberDiameter(0.0, (int(nodes[0]), int(nodes[0])), 0.0, True)
    if radius is None:
        radius = 4.0 * float(np.median(G.weights)) if G.n_edges else 1.0
    R = float(radius)
    while True:
        full = R > max_radius
        if full:
            if forbidden is not None:
                raise WindowError("exact neighbourhood would need the whole window")
            sub_csr, keep = G.csr, np.arange(G.n_nodes)
        else:
            keep, sub_csr = _neighbourhood(G, nodes, R, index)
            if forbidden is not None and np.any(forbidden[keep]):
                raise WindowError(f"fiber neighbourhood of radius {R:.4g} reaches the window rim")
            if len(keep) == G.n_nodes:
                full = True
        pos = np.searchsorted(keep, nodes)
        D, (i, j) = set_diameter(sub_csr, pos, exhaustive=exhaustive, start=start)
        wit = (int(nodes[i]), int(nodes[j]))
        if full:
            return FiberDiameter(D, wit, math.inf, True)
        if D <= 2.0 * R:
            return FiberDiameter(D, wit, R, True)
        R = 2.0 * R if math.isinf(D) else max(2.0 * R, D / 2.0 * (1.0 + 1e-9))


def uw_upper_from_map(
    G: MetricGraph,
    cells: np.ndarray | Sequence[np.ndarray],
    targets: TargetComplex | Sequence[TargetComplex],
    delta: float = 0.0,
    *,
    nodes: np.ndarray | None = None,
    space: str = "",
    radius: float | None = None,
) -> WidthCertificate:
    """Upper certificate ``UW_d <= max closed-star fiber diameter + delta``.

    ``cells`` maps each node to a target cell (``-1`` padded rows); with
    several target factors the map goes to their product and ``d`` is the sum
    of dimensions.  ``delta`` thickens every fiber to account for the part of
    the space between sample nodes (zero when nodes are the whole space).
    ``nodes`` restricts the map to a subset (a ball, say).
    """
    if isinstance(targets, TargetComplex):
        targets = [targets]
        cells = [cells]
    targets = list(targets)
    cells = [np.asarray(c) for c in cells]
    if any(len(c) != G.n_nodes for c in cells):
        raise AssignmentError("assignment must give a cell for every node of the graph")
    table = fiber_table(targets, cells, nodes)
    if len(table) == 0:
        raise AssignmentError("no fibers: empty node set")
    rows = []
    best = -1.0
    for key, fnodes in zip(table.keys, table.nodes):
        fd = fiber_diameter(G, fnodes, radius)
        rows.append(
            {
                "key": [int(v) for v in key],
                "size": int(len(fnodes)),
                "diameter": fd.value,
                "witnesses": list(fd.witnesses),
            }
        )
        best = max(best, fd.value)
    d = sum(T.dim for T in targets)
    node_set = np.arange(G.n_nodes) if nodes is None else np.unique(np.asarray(nodes, np.int64))
    evidence = {
        "targets": [T.name for T in targets],
        "delta": float(delta),
        "n_nodes": int(len(node_set)),
        "fibers": rows,
        "max_fiber": best,
    }
    return WidthCertificate(
        "upper",
        d,
        best + float(delta),
        "fiber-map",
        evidence,
        space=space,
        fixture_hash=array_hash(G.edges, G.weights, node_set),
    )


def _same(a: float, b: float) -> bool:
    """Equality up to the order in which path lengths were summed."""
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= REL_TOL * max(abs(a), abs(b), 1e-300)


@register_verifier("fiber-map")
def _verify_fiber_map(cert: WidthCertificate, context) -> bool:
    """``context = (G, cells, targets[, nodes])``: recompute every fiber from
    scratch with the whole graph (no local subgraphs) and compare exactly."""
    if context is None:
        raise CertificateError("fiber-map verification needs (G, cells, targets)")
    G, cells, targets = context[:3]
    nodes = context[3] if len(context) > 3 else None
    if isinstance(targets, TargetComplex):
        targets, cells = [targets], [cells]
    table = fiber_table(list(targets), [np.asarray(c) for c in cells], nodes)
    ev = cert.evidence["fibers"]
    if len(ev) != len(table):
        return False
    lookup = table.lookup()
    best = -1.0
    for row in ev:
        j = lookup.get(tuple(row["key"]))
        if j is None:
            return False
        fnodes = table.nodes[j]
        a, b = row["witnesses"]
        if a not in set(fnodes.tolist()) or b not in set(fnodes.tolist()):
            return False
        # witness pair realizes the value; no pair exceeds it
        D, _ = set_diameter(G.csr, fnodes, exhaustive=True, limit=float(row["diameter"]) * (1 + 1e-9) + 1e-12)
        if not _same(D, float(row["diameter"])):
            return False
        best = max(best, float(row["diameter"]))
    return best + float(cert.evidence["delta"]) == cert.value and best == cert.evidence["max_fiber"]
