"""Discrete path metrics on simplicial complexes and the blow-up transform.

A :class:`MetricGraph` samples a complex by its vertices plus Steiner points
on edges.  Nodes lying on different edges of one 2-face are joined by the
straight segment through that face, so refining the Steiner points lets
paths cut across faces instead of zig-zagging along the 1-skeleton.  Every
edge weight is the length of an actual path in the space, hence graph
distances are upper bounds for the true path metric.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .complex import ColoredComplex

__all__ = [
    "MetricError",
    "MetricGraph",
    "AuxiliaryMetric",
    "SubsetDiameter",
    "build_metric_graph",
    "graph_from_edges",
    "geodesic_distances",
    "ball",
    "sphere_shell",
    "components",
    "blowup",
    "extrinsic_diameter",
    "local_subgraph",
    "write_distance_csv",
    "subset_to_json",
]


class MetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Weighted undirected graph; nodes ``0..n_vertices-1`` are complex vertices.

    ``carrier[j] = (a, b, s)`` places Steiner node ``j`` at parameter ``s`` on
    the complex edge ``(a, b)``; vertices carry ``(v, v, 0)``.
    """

    points: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    n_vertices: int
    carrier_edges: np.ndarray
    carrier_params: np.ndarray
    period_lengths: tuple[float | None, ...] = ()
    origin: ColoredComplex | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.weights) and not np.all(self.weights > 0):
            raise MetricError("edge weights must be positive")
        for arr in (self.points, self.edges, self.weights):
            arr.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def csr(self) -> sparse.csr_matrix:
        if "csr" not in self._cache:
            n = self.n_nodes
            e = self.edges
            m = sparse.coo_matrix(
                (np.concatenate([self.weights, self.weights]),
                 (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
                shape=(n, n),
            ).tocsr()
            self._cache["csr"] = m
        return self._cache["csr"]

    def interpolate(self, values: np.ndarray) -> np.ndarray:
        """Extend per-vertex values linearly along edges to every node."""
        values = np.asarray(values, dtype=float)
        a = values[self.carrier_edges[:, 0]]
        b = values[self.carrier_edges[:, 1]]
        s = self.carrier_params.reshape((-1,) + (1,) * (values.ndim - 1))
        out = (1.0 - s) * a + s * b
        out[: self.n_vertices] = values[: self.n_vertices]
        return out

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        diff = np.asarray(b, float) - np.asarray(a, float)
        for ax, p in enumerate(self.period_lengths):
            if p is not None:
                diff[..., ax] -= np.round(diff[..., ax] / p) * p
        return diff

    def with_weights(self, weights: np.ndarray) -> "MetricGraph":
        return MetricGraph(
            points=self.points,
            edges=self.edges,
            weights=np.asarray(weights, dtype=float),
            n_vertices=self.n_vertices,
            carrier_edges=self.carrier_edges,
            carrier_params=self.carrier_params,
            period_lengths=self.period_lengths,
            origin=self.origin,
        )


def _dedupe(edges: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    edges = np.sort(edges, axis=1)
    keep = edges[:, 0] != edges[:, 1]
    edges, weights = edges[keep], weights[keep]
    order = np.lexsort((weights, edges[:, 1], edges[:, 0]))
    edges, weights = edges[order], weights[order]
    first = np.ones(len(edges), dtype=bool)
    first[1:] = np.any(edges[1:] != edges[:-1], axis=1)
    return edges[first], weights[first]


def graph_from_edges(points, edges, weights=None, period_lengths=()) -> MetricGraph:
    """Graph on explicit nodes; weights default to Euclidean edge lengths."""
    points = np.asarray(points, dtype=float)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    periods = tuple(period_lengths) or (None,) * points.shape[1]
    if weights is None:
        diff = points[edges[:, 1]] - points[edges[:, 0]]
        for ax, p in enumerate(periods):
            if p is not None:
                diff[:, ax] -= np.round(diff[:, ax] / p) * p
        weights = np.sqrt((diff**2).sum(axis=1))
    edges, weights = _dedupe(edges, np.asarray(weights, dtype=float))
    n = len(points)
    return MetricGraph(
        points=points,
        edges=edges,
        weights=weights,
        n_vertices=n,
        carrier_edges=np.stack([np.arange(n), np.arange(n)], axis=1),
        carrier_params=np.zeros(n),
        period_lengths=periods,
    )


def build_metric_graph(
    K: ColoredComplex,
    subdivision: int = 0,
    face_links: bool = True,
    levels: tuple[np.ndarray, float] | None = None,
) -> MetricGraph:
    """Sample ``K`` by vertices plus Steiner points and link them.

    ``subdivision`` places that many equally spaced points on every edge.
    ``levels = (f, h)`` instead places points where the vertex function ``f``
    (linear on edges) crosses a multiple of ``h``; face links are then kept
    only between nodes whose ``f`` values differ by at most ``h``.
    """
    if subdivision < 0:
        raise MetricError("subdivision must be non-negative")
    V = K.n_vertices
    E = K.simplices(1)
    base = K.coords
    # Steiner parameters per complex edge
    if levels is None:
        params = np.arange(1, subdivision + 1) / (subdivision + 1)
        counts = np.full(len(E), subdivision, dtype=np.int64)
        all_params = np.tile(params, len(E))
    else:
        f, h = np.asarray(levels[0], float), float(levels[1])
        if not h > 0:
            raise MetricError("level spacing must be positive")
        fa, fb = f[E[:, 0]], f[E[:, 1]]
        lo = np.minimum(fa, fb)
        hi = np.maximum(fa, fb)
        k_lo = np.floor(lo / h).astype(np.int64) + 1
        k_hi = np.ceil(hi / h).astype(np.int64) - 1
        counts = np.maximum(k_hi - k_lo + 1, 0)
        seg = np.repeat(np.arange(len(E)), counts)
        offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        lv = (np.repeat(k_lo, counts) + offs) * h
        s = (lv - fa[seg]) / (fb[seg] - fa[seg])
        # order along each edge by parameter
        order = np.lexsort((s, seg))
        all_params = s[order]
    edge_of = np.repeat(np.arange(len(E)), counts)
    n_steiner = len(all_params)
    starts = V + np.cumsum(counts) - counts  # first Steiner id per edge
    pa = base[E[edge_of, 0]]
    disp = K.displacement(pa, base[E[edge_of, 1]])
    spts = pa + all_params[:, None] * disp
    for ax, p in enumerate(K.period_lengths):
        if p is not None:
            spts[:, ax] %= p
    points = np.concatenate([base, spts], axis=0)
    carrier_edges = np.concatenate([np.stack([np.arange(V)] * 2, axis=1), E[edge_of]], axis=0)
    carrier_params = np.concatenate([np.zeros(V), all_params])

    # chains along each edge
    has = counts > 0
    sid = np.arange(V, V + n_steiner)
    inner = sid[:-1][edge_of[:-1] == edge_of[1:]] if n_steiner else sid
    first = starts[has]
    last = first + counts[has] - 1
    chain_a = np.concatenate([E[~has, 0], E[has, 0], inner, last])
    chain_b = np.concatenate([E[~has, 1], first, inner + 1, E[has, 1]])
    pairs = [np.stack([chain_a, chain_b], axis=1)]

    if face_links and K.dim >= 2 and (n_steiner or levels is not None):
        pairs.append(_face_links(K, E, counts, starts, carrier_edges, carrier_params, levels))
    allpairs = np.concatenate(pairs, axis=0)
    diff = K.displacement(points[allpairs[:, 0]], points[allpairs[:, 1]])
    w = np.sqrt((diff**2).sum(axis=1))
    keep = w > 0
    edges, weights = _dedupe(allpairs[keep], w[keep])
    return MetricGraph(
        points=points,
        edges=edges,
        weights=weights,
        n_vertices=V,
        carrier_edges=carrier_edges,
        carrier_params=carrier_params,
        period_lengths=K.period_lengths,
        origin=K,
    )


def _face_links(K, E, counts, starts, carrier_edges, params, levels) -> np.ndarray:
    """Segments between nodes lying on different edges of a common 2-face."""
    F = K.simplices(2)
    V = K.n_vertices
    # edge index lookup via sorted codes
    code = E[:, 0] * V + E[:, 1]
    sides = [(0, 1), (1, 2), (0, 2)]
    eidx = np.stack(
        [np.searchsorted(code, F[:, a] * V + F[:, b]) for a, b in sides], axis=1
    )
    f = None if levels is None else np.asarray(levels[0], float)
    h = None if levels is None else float(levels[1])
    out = []
    # group faces by their Steiner count signature to vectorize
    sig = counts[eidx]
    for key in np.unique(sig, axis=0):
        sel = np.all(sig == key, axis=1)
        Fs, Es = F[sel], eidx[sel]
        node_lists = []
        for side, (a, b) in enumerate(sides):
            c = int(key[side])
            st = starts[Es[:, side]][:, None] + np.arange(c)[None, :]
            node_lists.append(np.concatenate([Fs[:, [a]], st, Fs[:, [b]]], axis=1))
        for s1, s2 in itertools.combinations(range(3), 2):
            A, B = node_lists[s1], node_lists[s2]
            u = np.repeat(A, B.shape[1], axis=1).reshape(-1)
            v = np.tile(B, (1, A.shape[1])).reshape(-1)
            pr = np.stack([u, v], axis=1)
            pr = pr[pr[:, 0] != pr[:, 1]]
            if f is not None:
                fu = _node_values(f, pr[:, 0], carrier_edges, params)
                fv = _node_values(f, pr[:, 1], carrier_edges, params)
                pr = pr[np.abs(fu - fv) <= h * (1 + 1e-9)]
            out.append(pr)
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(out, axis=0)


def _node_values(f, nodes, carrier_edges, params):
    s = params[nodes]
    return (1 - s) * f[carrier_edges[nodes, 0]] + s * f[carrier_edges[nodes, 1]]


def geodesic_distances(G: MetricGraph, sources, limit: float = np.inf) -> np.ndarray:
    """Shortest-path distances from each source; unreachable nodes are ``inf``."""
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    if src.size and (src.min() < 0 or src.max() >= G.n_nodes):
        raise MetricError("source outside the graph")
    return csgraph.dijkstra(G.csr, directed=True, indices=src, limit=limit)


def ball(G: MetricGraph, center: int, r: float) -> np.ndarray:
    if r < 0:
        raise MetricError("radius must be non-negative")
    d = geodesic_distances(G, [center], limit=r * (1 + 1e-12) + 1e-300)[0]
    return np.flatnonzero(d <= r)


def sphere_shell(G: MetricGraph, center: int, r: float, delta: float, dist: np.ndarray | None = None) -> np.ndarray:
    if r < 0 or not delta > 0:
        raise MetricError("need r >= 0 and delta > 0")
    d = geodesic_distances(G, [center])[0] if dist is None else dist
    return np.flatnonzero((d >= r) & (d < r + delta))


def components(G: MetricGraph, subset: np.ndarray) -> np.ndarray:
    """Component labels (0-based, ordered by smallest node) of the induced subgraph."""
    subset = np.asarray(subset, dtype=np.int64)
    sub = G.csr[subset][:, subset]
    _, labels = csgraph.connected_components(sub, directed=False)
    # relabel by first occurrence for determinism
    _, first = np.unique(labels, return_index=True)
    remap = np.empty(len(first), dtype=np.int64)
    remap[np.argsort(first)] = np.arange(len(first))
    return remap[labels]


@dataclass(frozen=True)
class SubsetDiameter:
    subset: np.ndarray
    value: float
    witnesses: tuple[int, int]

    def to_dict(self) -> dict:
        return {"subset": [int(v) for v in self.subset], "value": self.value, "witnesses": list(self.witnesses)}


def extrinsic_diameter(G: MetricGraph, subset, limit: float = np.inf) -> SubsetDiameter:
    """Largest distance in ``G`` (not the induced subgraph) between subset nodes."""
    subset = np.unique(np.asarray(subset, dtype=np.int64))
    if subset.size == 0:
        raise MetricError("subset must be nonempty")
    d = geodesic_distances(G, subset, limit=limit)[:, subset]
    flat = int(np.argmax(d))
    i, j = divmod(flat, len(subset))
    return SubsetDiameter(subset, float(d[i, j]), (int(subset[i]), int(subset[j])))


def local_subgraph(G: MetricGraph, seeds: np.ndarray, radius: float) -> tuple[MetricGraph, np.ndarray]:
    """Induced subgraph on nodes within graph distance ``radius`` of the seeds.

    Distances in the subgraph are never shorter than in ``G``, so diameters
    measured there are upper bounds for the diameters in ``G``.
    """
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    d = csgraph.dijkstra(G.csr, directed=True, indices=seeds, limit=radius, min_only=True)
    keep = np.flatnonzero(np.isfinite(d))
    return _induced(G, keep), keep


def _induced(G: MetricGraph, keep: np.ndarray) -> MetricGraph:
    pos = np.full(G.n_nodes, -1, dtype=np.int64)
    pos[keep] = np.arange(len(keep))
    e = pos[G.edges]
    ok = np.all(e >= 0, axis=1)
    return MetricGraph(
        points=G.points[keep],
        edges=e[ok],
        weights=G.weights[ok],
        n_vertices=len(keep),
        carrier_edges=np.stack([np.arange(len(keep))] * 2, axis=1),
        carrier_params=np.zeros(len(keep)),
        period_lengths=G.period_lengths,
    )


@dataclass(frozen=True, eq=False)
class AuxiliaryMetric:
    """Metric on the target simplex of a join map.

    ``flat`` is the Euclidean metric of the regular simplex with vertices
    ``vertices``.  A blown-up auxiliary metric carries a triangulated copy of
    the simplex (``space``) and the piecewise-constant tensor
    ``I + J^T G' J`` of the blow-up on each of its simplices.
    """

    vertices: np.ndarray
    inradius: float
    tensors: np.ndarray | None = None
    locate: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "flat"

    @classmethod
    def flat(cls, vertices: np.ndarray, inradius: float) -> "AuxiliaryMetric":
        return cls(np.asarray(vertices, float), float(inradius))

    @property
    def is_flat(self) -> bool:
        return self.tensors is None

    def tensor_at(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(y)
        dim = self.vertices.shape[1]
        if self.tensors is None:
            return np.broadcast_to(np.eye(dim), (len(y), dim, dim))
        return self.tensors[self.locate(y)]

    def length(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Length of the straight segment from ``a`` to ``b`` (rows)."""
        a = np.atleast_2d(np.asarray(a, float))
        b = np.atleast_2d(np.asarray(b, float))
        diff = b - a
        if self.tensors is None:
            return np.sqrt((diff**2).sum(axis=1))
        Gm = self.tensor_at(0.5 * (a + b))
        q = np.einsum("ni,nij,nj->n", diff, Gm, diff)
        return np.sqrt(np.maximum(q, (diff**2).sum(axis=1)))

    def facet_distance_lower(self, y: np.ndarray) -> np.ndarray:
        """Flat distances to the facets; blown-up distances are at least these."""
        y = np.atleast_2d(np.asarray(y, float))
        if self.vertices.shape[0] == 1:
            return np.full((len(y), 1), np.inf)
        norms = np.linalg.norm(self.vertices, axis=1)
        return self.inradius + (y @ self.vertices.T) / norms


def blowup(G: MetricGraph, tau: np.ndarray, aux: AuxiliaryMetric) -> MetricGraph:
    """Add the pullback of ``aux`` along ``tau`` (given at every node) to ``G``.

    New weight ``hypot(w, d_aux)``; the ``max`` with the old weight makes
    monotonicity hold exactly in floating point.
    """
    tau = np.asarray(tau, dtype=float)
    if tau.ndim == 1:
        tau = tau[:, None]
    if len(tau) != G.n_nodes:
        raise MetricError("tau must be given at every node")
    e = G.edges
    extra = aux.length(tau[e[:, 0]], tau[e[:, 1]])
    w = np.maximum(G.weights, np.hypot(G.weights, extra))
    return G.with_weights(w)


def write_distance_csv(path, sources: Sequence[int], table: np.ndarray, targets: Sequence[int] | None = None) -> None:
    table = np.atleast_2d(table)
    targets = range(table.shape[1]) if targets is None else targets
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "target", "distance"])
        for i, s in enumerate(sources):
            for j, t in enumerate(targets):
                d = table[i, j]
                w.writerow([int(s), int(t), "inf" if math.isinf(d) else repr(float(d))])


def subset_to_json(subset, **meta) -> str:
    return json.dumps({"nodes": sorted(int(v) for v in subset), **meta}, sort_keys=True)
