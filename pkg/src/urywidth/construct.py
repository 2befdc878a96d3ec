"""Example spaces: the perturbed level-set manifold and iterated blow-ups.

The ambient space is ``T^n x R^{n-1}`` triangulated by the periodic rainbow
complex, with the join map ``tau`` into a regular simplex of inradius 3.
The manifold ``M`` is the zero set of ``p - tau/2`` where ``p`` projects to
the ``R^{n-1}`` factor.  Both ``p`` and ``tau`` are affine on every ambient
simplex, so marching simplices reproduces the PL zero set exactly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .complex import (
    ColoredComplex,
    ComplexError,
    PeriodError,
    barycentric_subdivide_and_color,
    kuhn_triangulate,
    make_periodic,
    regular_simplex,
)
from .join import JoinStructure, SimplexGeometry, build_join, join_weights
from .metric import AuxiliaryMetric, MetricGraph, blowup, build_metric_graph

__all__ = [
    "ConstructError",
    "RegularityError",
    "AmbientSpace",
    "LevelSetManifold",
    "BlowupSpace",
    "build_ambient",
    "perturbed_projection",
    "extract_level_set",
    "marching_simplices",
    "base_space",
    "simplex_space",
    "build_blowup_space",
    "scaled_variant",
    "genericity_shift",
]

AMBIENT_INRADIUS = 3.0
AUX_INRADIUS = 2.0


class ConstructError(ValueError):
    pass


class RegularityError(ConstructError):
    pass


def genericity_shift(m: int, eps: float, attempt: int = 0) -> np.ndarray:
    """Deterministic tiny irrational level value of magnitude ``~1e-7 * eps``."""
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    out = np.empty(m)
    for j in range(m):
        r = math.sqrt(primes[(j + 3 * attempt) % len(primes)]) * (attempt + 1)
        out[j] = (r - math.floor(r)) * 1e-7 * eps + 1e-9 * eps * (j + 1) / math.pi
    return out


@dataclass(frozen=True, eq=False)
class AmbientSpace:
    """Triangulated ``T^n x`` box, with ``p`` the last ``n - 1`` coordinates.

    ``period`` is the side of the torus the space stands for; ``tile`` is the
    side actually triangulated.  A tile shorter than the period is a
    quotient: the lattice triangulation, colors and ``p`` are invariant under
    translations by ``eps`` along the torus axes, so the full space covers the
    tile ``(period / tile)^n`` times.  ``window`` spaces are not periodic at
    all and stand for a box of cells of the infinite periodic lattice.
    """

    complex: ColoredComplex
    join: JoinStructure
    n: int
    eps: float
    period: float | None
    tile: float | None
    box: tuple[int, int]

    @property
    def geometry(self) -> SimplexGeometry:
        return self.join.geometry

    @property
    def cover_degree(self) -> int:
        if self.period is None or self.tile is None:
            return 1
        return int(round(self.period / self.tile)) ** self.n

    def projection(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, float)[..., self.n :]

    def vertex_tau(self) -> np.ndarray:
        return self.join.vertex_tau()

    def vertex_ptilde(self) -> np.ndarray:
        return self.projection(self.complex.coords) - 0.5 * self.vertex_tau()


def _box_cells(n: int, eps: float, margin: int = 2) -> int:
    geo = SimplexGeometry.regular(n, AMBIENT_INRADIUS)
    half = 0.5 * float(np.abs(geo.vertices).max()) if n > 1 else 0.0
    return int(math.ceil(half / eps - 1e-9)) + margin


def build_ambient(
    n: int,
    eps: float,
    period: float | None = 4.0,
    *,
    tile_cells: int | None = None,
    window: tuple[int, int] | None = None,
    min_period: float = 4.0,
) -> AmbientSpace:
    """Ambient complex for the level-set construction.

    ``tile_cells`` triangulates a torus of ``tile_cells`` cells per axis
    standing for the full ``period``; ``window = (lo, hi)`` triangulates the
    non-periodic cell range ``[lo, hi)`` on every torus axis.
    """
    if n < 1:
        raise ConstructError("n must be at least 1")
    if not eps > 0:
        raise ConstructError("eps must be positive")
    m = _box_cells(n, eps) if n > 1 else 0
    extra = [2 * m] * (n - 1)
    if window is not None:
        lo, hi = window
        if hi - lo < 1:
            raise ConstructError("empty window")
        cells = [hi - lo] * n + extra
        start = [lo] * n + [-m] * (n - 1)
        K = barycentric_subdivide_and_color(kuhn_triangulate(2 * n - 1, cells, eps, start))
        tile = None
    else:
        if period is None or not period > 0:
            raise ConstructError("period must be positive")
        per_axis = period / eps
        if abs(per_axis - round(per_axis)) > 1e-9 * max(1.0, per_axis):
            raise PeriodError(f"period {period:g} is not a multiple of eps {eps:g}")
        per_axis = int(round(per_axis))
        if period < min_period - 1e-12:
            raise PeriodError(
                f"period {period:g} is below {min_period:g}; convexity radius {period / 4:g} < {min_period / 4:g}"
            )
        t = per_axis if tile_cells is None else int(tile_cells)
        if t < 2:
            raise PeriodError("a tile needs at least 2 cells per axis")
        if per_axis % t:
            raise PeriodError(f"tile of {t} cells does not divide {per_axis} cells")
        cells = [t] * n + extra
        start = [0] * n + [-m] * (n - 1)
        K = barycentric_subdivide_and_color(kuhn_triangulate(2 * n - 1, cells, eps, start))
        K = make_periodic(K, list(range(n)), min_period=0.0)
        tile = t * eps
    J = build_join(K, AMBIENT_INRADIUS)
    return AmbientSpace(K, J, n, float(eps), period if window is None else None, tile, (-m, m))


def perturbed_projection(A: AmbientSpace, x: np.ndarray) -> np.ndarray:
    """``p(x) - tau(x) / 2`` with ``tau`` in the inradius-3 simplex coordinates."""
    x = np.atleast_2d(np.asarray(x, float))
    t, _, _ = join_weights(A.join, x)
    return A.projection(x) - 0.5 * A.geometry.point(t)


# -- marching simplices -----------------------------------------------------


def _marching_tets(T: np.ndarray, f: np.ndarray):
    """Scalar level set on tetrahedra; returns crossing edges and triangles.

    Triangles reference rows of the returned unique crossing-edge table.  The
    quadrilateral case is split by the diagonal from its lowest-index vertex.
    """
    vals = f[T]
    pos = vals > 0
    npos = pos.sum(axis=1)
    cut = (npos > 0) & (npos < 4)
    T, pos, npos, host = T[cut], pos[cut], npos[cut], np.flatnonzero(cut)
    # order vertices: minority sign first for single-vertex cases
    order = np.argsort(pos, axis=1, kind="stable")  # negatives first
    Ts = np.take_along_axis(T, order, axis=1)
    V = int(T.max()) + 1 if len(T) else 1

    def ecode(a, b):
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        return lo * V + hi

    tri_codes, tri_host = [], []
    one_neg = npos == 3  # vertex 0 negative alone
    one_pos = npos == 1  # vertex 3 positive alone
    two = npos == 2
    if np.any(one_neg):
        s = Ts[one_neg]
        tri_codes.append(np.stack([ecode(s[:, 0], s[:, j]) for j in (1, 2, 3)], axis=1))
        tri_host.append(host[one_neg])
    if np.any(one_pos):
        s = Ts[one_pos]
        tri_codes.append(np.stack([ecode(s[:, 3], s[:, j]) for j in (0, 1, 2)], axis=1))
        tri_host.append(host[one_pos])
    if np.any(two):
        s = Ts[two]
        a, b, c, d = s[:, 2], s[:, 3], s[:, 0], s[:, 1]
        quad = np.stack([ecode(a, c), ecode(a, d), ecode(b, d), ecode(b, c)], axis=1)
        tri_codes.append(quad)
        tri_host.append(-1 - host[two])  # marker: quad
    if not tri_codes:
        return np.zeros((0, 2), np.int64), np.zeros((0, 3), np.int64), np.zeros(0, np.int64)
    allcodes = np.concatenate([c.reshape(-1) for c in tri_codes])
    uniq, inv = np.unique(allcodes, return_inverse=True)
    edges = np.stack([uniq // V, uniq % V], axis=1)
    tris, hosts = [], []
    off = 0
    for codes, h in zip(tri_codes, tri_host):
        ids = inv[off : off + codes.size].reshape(codes.shape)
        off += codes.size
        if codes.shape[1] == 3:
            tris.append(ids)
            hosts.append(h)
        else:
            k = np.argmin(ids, axis=1)
            r = np.arange(len(ids))
            q0 = ids[r, k]
            q1 = ids[r, (k + 1) % 4]
            q2 = ids[r, (k + 2) % 4]
            q3 = ids[r, (k + 3) % 4]
            tris.append(np.stack([q0, q1, q2], axis=1))
            tris.append(np.stack([q0, q2, q3], axis=1))
            hosts += [-1 - h, -1 - h]
    return edges, np.concatenate(tris), np.concatenate(hosts)


def _marching_generic(T: np.ndarray, f: np.ndarray):
    """Vector level set of codimension ``m`` by recursive pulling triangulations.

    The level set of a face ``F`` is a convex polytope whose vertices are the
    zeros on the ``m``-faces of ``F``.  It is triangulated by coning its
    lowest-index vertex over the triangulations of the facets not containing
    it; as the index order is global, adjacent simplices agree on shared faces.
    """
    m = f.shape[1]
    k = T.shape[1] - 1
    zero_of: dict[tuple, int] = {}
    carriers: list[tuple] = []
    weights: list[np.ndarray] = []

    def zero(face: tuple) -> int | None:
        if face in zero_of:
            return zero_of[face]
        A = np.vstack([f[list(face)].T, np.ones(len(face))])
        rhs = np.zeros(m + 1)
        rhs[-1] = 1.0
        try:
            lam = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            lam = None
        idx = None
        if lam is not None and np.all(lam > 0):
            idx = len(carriers)
            carriers.append(face)
            weights.append(lam)
        zero_of[face] = idx
        return idx

    memo: dict[tuple, list[tuple]] = {}

    def tri(face: tuple) -> list[tuple]:
        if face in memo:
            return memo[face]
        j = len(face) - 1
        if j < m:
            out: list[tuple] = []
        elif j == m:
            z = zero(face)
            out = [] if z is None else [(z,)]
        else:
            verts = [(zero(g), g) for g in itertools.combinations(face, m + 1)]
            verts = [(z, g) for z, g in verts if z is not None]
            if not verts:
                out = []
            else:
                v0, g0 = min(verts)
                out = []
                for drop in face:
                    if drop in g0:
                        sub = tuple(v for v in face if v != drop)
                        for s in tri(sub):
                            out.append((v0,) + s)
        memo[face] = out
        return out

    cells, hosts = [], []
    for h, row in enumerate(T.tolist()):
        for s in tri(tuple(row)):
            if len(s) == k - m + 1:
                cells.append(s)
                hosts.append(h)
    return carriers, weights, cells, hosts


def marching_simplices(K: ColoredComplex, f: np.ndarray):
    """PL zero set of the vertex function ``f`` (V,) or (V, m) on ``K``.

    Returns ``(carrier_ids, carrier_weights, cells, hosts)``: the zero set's
    vertices as convex combinations of ``K``-vertices, its top cells, and the
    index of the top simplex of ``K`` hosting each cell.  Raises
    :class:`RegularityError` when ``f`` vanishes at a vertex.
    """
    f = np.asarray(f, float)
    if f.ndim == 1:
        f = f[:, None]
    if np.any(np.all(f == 0.0, axis=1)) or (f.shape[1] == 1 and np.any(f[:, 0] == 0.0)):
        raise RegularityError("level value attained at a vertex")
    m = f.shape[1]
    if m == 1 and K.dim == 3:
        edges, tris, hosts = _marching_tets(K.top, f[:, 0])
        fa = f[edges[:, 0], 0]
        fb = f[edges[:, 1], 0]
        lam = fa / (fa - fb)
        w = np.stack([1.0 - lam, lam], axis=1)
        return edges, w, tris, hosts
    carriers, weights, cells, hosts = _marching_generic(K.top, f)
    if not cells:
        return (np.zeros((0, m + 1), np.int64), np.zeros((0, m + 1)),
                np.zeros((0, K.dim - m + 1), np.int64), np.zeros(0, np.int64))
    return np.array(carriers, np.int64), np.array(weights), np.array(cells, np.int64), np.array(hosts, np.int64)


@dataclass(frozen=True, eq=False)
class LevelSetManifold:
    """PL zero set of ``p - tau/2 - shift`` inside an :class:`AmbientSpace`."""

    complex: ColoredComplex
    ambient: AmbientSpace
    carrier_ids: np.ndarray
    carrier_weights: np.ndarray
    hosts: np.ndarray
    shift: np.ndarray
    attempts: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.ambient.n

    def coface_counts(self) -> np.ndarray:
        """Number of top cells on each codimension-1 face."""
        K = self.complex
        d = K.dim
        cols = [[j for j in range(d + 1) if j != drop] for drop in range(d + 1)]
        rows = np.sort(K.top[:, cols].reshape(-1, d), axis=1)
        _, counts = np.unique(rows, axis=0, return_counts=True)
        return counts

    def closed_fraction(self) -> float:
        c = self.coface_counts()
        return float(np.mean(c == 2)) if len(c) else 0.0

    def is_closed(self) -> bool:
        return len(self.complex.top) > 0 and self.closed_fraction() == 1.0

    def containment_margin(self) -> float:
        """Smallest distance from ``p(M)`` to the boundary of the inradius-3 simplex."""
        if self.n == 1:
            return math.inf
        p = self.ambient.projection(self.complex.coords)
        return float(self.ambient.geometry.facet_distances(p).min())

    def node_barycentrics(self, G: MetricGraph) -> tuple[np.ndarray, np.ndarray]:
        """Ambient vertex ids and weights of every node of a graph on ``M``.

        Steiner nodes on an edge of ``M`` combine the carriers of its two
        endpoints, which always lie in a common ambient simplex.
        """
        a = G.carrier_edges[:, 0]
        b = G.carrier_edges[:, 1]
        s = G.carrier_params[:, None]
        ids = np.concatenate([self.carrier_ids[a], self.carrier_ids[b]], axis=1)
        w = np.concatenate([(1.0 - s) * self.carrier_weights[a], s * self.carrier_weights[b]], axis=1)
        return ids, w

    def projection_preimages(self, q: np.ndarray, tol: float = 1e-9) -> int:
        """Number of top cells whose projection to ``T^n`` contains ``q``.

        Raises :class:`RegularityError` when ``q`` lies within ``tol`` (in
        barycentric terms) of a projected cell boundary.
        """
        K = self.complex
        n = self.n
        q = np.asarray(q, float)
        if self.ambient.tile is not None:
            q = np.mod(q, self.ambient.tile)
        pts = K.simplex_coords(K.top)[:, :, :n]
        rel = pts - pts[:, :1, :]
        dq = q[None, :] - pts[:, 0, :]
        for ax, per in enumerate(K.period_lengths[:n]):
            if per is not None:
                dq[:, ax] -= np.round(dq[:, ax] / per) * per
        E = np.swapaxes(rel[:, 1:, :], 1, 2)
        det = np.linalg.det(E)
        scale = np.abs(rel).max(axis=(1, 2)) ** n
        ok = np.abs(det) > 1e-12 * np.maximum(scale, 1e-300)
        lam = np.zeros((len(E), n))
        lam[ok] = np.linalg.solve(E[ok], dq[ok][..., None])[..., 0]
        full = np.concatenate([1.0 - lam.sum(axis=1, keepdims=True), lam], axis=1)
        inside = ok & np.all(full > tol, axis=1)
        near = ok & np.all(full > -tol, axis=1) & ~inside
        if np.any(near):
            raise RegularityError("sample point lies on a projected cell boundary")
        # projected periodic cells may wrap around a short tile; count images
        return int(inside.sum())

    def metadata(self) -> dict:
        A = self.ambient
        return {
            "n": A.n,
            "eps": A.eps,
            "period": A.period,
            "tile": A.tile,
            "cover_degree": A.cover_degree,
            "shift": [float(v) for v in self.shift],
            "attempts": self.attempts,
            "f_vector": self.complex.f_vector(),
            "closed_fraction": self.closed_fraction(),
            "containment_margin": self.containment_margin(),
        }


def extract_level_set(A: AmbientSpace, shift: np.ndarray | None = None, max_attempts: int = 5) -> LevelSetManifold:
    """Marching-simplices zero set of ``p - tau/2`` shifted to a generic value."""
    K = A.complex
    base = A.vertex_ptilde()
    m = base.shape[1]
    if m == 0:
        raise ConstructError("n = 1 has no R^{n-1} factor; nothing to extract")
    attempts = 0
    last_err = None
    while attempts < max_attempts:
        c = genericity_shift(m, A.eps, attempts) if shift is None else np.asarray(shift, float)
        attempts += 1
        try:
            ids, w, cells, hosts = marching_simplices(K, base - c[None, :])
            break
        except RegularityError as err:
            last_err = err
            if shift is not None:
                raise
    else:
        raise RegularityError(f"no regular level value after {max_attempts} attempts: {last_err}")
    pts = (w[:, :, None] * K.unwrap(K.coords[ids])).sum(axis=1)
    for ax, per in enumerate(K.period_lengths):
        if per is not None:
            pts[:, ax] %= per
    M = ColoredComplex(
        coords=pts,
        top=cells,
        mesh_scale=A.eps,
        period_lengths=K.period_lengths,
    )
    return LevelSetManifold(M, A, ids, w, hosts, c, attempts)


# -- blow-up spaces ---------------------------------------------------------


def base_space(kind: str, dim: int, eps: float, *, period: float = 4.0, radius: float = 2.0) -> ColoredComplex:
    """Rainbow complex on a cube, ball, sphere or torus of dimension ``dim``."""
    if dim < 1:
        raise ConstructError("dimension must be at least 1")
    if kind == "cube":
        cells = int(round(1.0 / eps))
        if cells < 1 or abs(cells * eps - 1.0) > 1e-9:
            raise ConstructError("eps must divide 1 for the unit cube")
        return barycentric_subdivide_and_color(kuhn_triangulate(dim, cells, eps))
    if kind == "ball":
        cells = int(math.ceil(radius / eps))
        K = kuhn_triangulate(dim, 2 * cells, eps, [-cells] * dim)
        inside = np.all((K.coords[K.top] ** 2).sum(axis=2) <= radius**2 * (1 + 1e-12), axis=1)
        if not np.any(inside):
            raise ConstructError("ball too small for the mesh")
        K = _restrict(K, K.top[inside])
        return barycentric_subdivide_and_color(K)
    if kind == "sphere":
        cells = int(round(1.0 / eps))
        C = kuhn_triangulate(dim + 1, cells, eps)
        lo, hi = 0, cells
        faces = C.simplices(dim)
        keys = C.keys[faces]
        on = np.zeros(len(faces), bool)
        for a in range(dim + 1):
            on |= np.all(keys[:, :, a] == lo, axis=1) | np.all(keys[:, :, a] == hi, axis=1)
        return barycentric_subdivide_and_color(_restrict(C, faces[on]))
    if kind == "torus":
        cells = int(round(period / eps))
        K = barycentric_subdivide_and_color(kuhn_triangulate(dim, cells, eps))
        return make_periodic(K, "all", min_period=min(period, 4.0))
    raise ConstructError(f"unknown base kind {kind!r}")


def _restrict(K: ColoredComplex, rows: np.ndarray) -> ColoredComplex:
    used = np.unique(rows)
    pos = np.full(K.n_vertices, -1, np.int64)
    pos[used] = np.arange(len(used))
    return ColoredComplex(
        coords=K.coords[used],
        top=pos[rows],
        mesh_scale=K.mesh_scale,
        period_lengths=K.period_lengths,
        keys=None if K.keys is None else K.keys[used],
        key_scale=K.key_scale,
        kind=K.kind,
    )


def simplex_space(dim: int, cells: int, inradius: float = AUX_INRADIUS) -> ColoredComplex:
    """Rainbow triangulation of the regular ``dim``-simplex with the given inradius.

    The Kuhn triangulation of a ``cells``-grid on the unit cube refines the
    corner simplex ``1 >= x_1 >= ... >= x_dim >= 0``; its barycentric
    subdivision is carried affinely onto the regular simplex.
    """
    geo = SimplexGeometry.regular(dim + 1, inradius)
    if dim == 0:
        return ColoredComplex(coords=np.zeros((1, 0)), top=np.zeros((1, 1), np.int64), colors=np.ones(1, np.int64))
    K = kuhn_triangulate(dim, cells, 1.0 / cells)
    k = K.keys[K.top]
    inside = np.all(k[:, :, :-1] >= k[:, :, 1:], axis=(1, 2))
    K = barycentric_subdivide_and_color(_restrict(K, K.top[inside]))
    # corner simplex vertices 0, e1, e1+e2, ... -> regular simplex vertices
    corners = np.tril(np.ones((dim + 1, dim)), -1)
    A = np.linalg.solve(
        np.hstack([corners, np.ones((dim + 1, 1))]), np.hstack([geo.vertices, np.zeros((dim + 1, 0))])
    )
    coords = np.hstack([K.coords, np.ones((K.n_vertices, 1))]) @ A
    return ColoredComplex(coords=coords, top=K.top, colors=K.colors, mesh_scale=K.mesh_scale * inradius)


def _locate_rows(K: ColoredComplex, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Containing top simplex (index) and barycentric weights for points in a
    full-dimensional, non-periodic complex."""
    y = np.atleast_2d(np.asarray(y, float))
    pts = K.coords[K.top]
    d = K.dim
    E = np.swapaxes(pts[:, 1:, :] - pts[:, :1, :], 1, 2)
    inv = np.linalg.inv(E)
    out = np.full(len(y), -1, np.int64)
    lam_out = np.zeros((len(y), d + 1))
    best = np.full(len(y), -np.inf)
    for s in range(0, len(K.top), 4096):
        rel = y[None, :, :] - pts[s : s + 4096, None, 0, :]
        lam = np.einsum("tij,tpj->tpi", inv[s : s + 4096], rel)
        full = np.concatenate([1.0 - lam.sum(axis=2, keepdims=True), lam], axis=2)
        score = full.min(axis=2)
        j = np.argmax(score, axis=0)
        sc = score[j, np.arange(len(y))]
        better = sc > best
        best[better] = sc[better]
        out[better] = s + j[better]
        lam_out[better] = full[j[better], np.flatnonzero(better)]
    if np.any(best < -1e-9):
        raise ConstructError("point outside the triangulated simplex")
    return out, np.clip(lam_out, 0.0, None)


@dataclass(frozen=True, eq=False)
class BlowupSpace:
    """An ``level``-fold blow-up of a rainbow complex across its join maps.

    ``aux_space`` is the blow-up of one level lower living on the target
    simplex of ``join``; its metric tensor, pulled back along ``tau``, is what
    gets added here.  At level 0 nothing is added.
    """

    base: ColoredComplex
    level: int
    k: int
    join: JoinStructure | None
    aux: AuxiliaryMetric | None
    aux_space: "BlowupSpace | None"
    base_metric: MetricGraph
    metric: MetricGraph
    node_tau: np.ndarray | None
    tensors: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.base.dim

    def chain(self) -> list["BlowupSpace"]:
        out, s = [], self
        while s is not None:
            out.append(s)
            s = s.aux_space
        return out

    def tensor_at(self, y: np.ndarray) -> np.ndarray:
        """Metric tensor of this space (as an auxiliary metric) at points ``y``."""
        y = np.atleast_2d(y)
        if self.tensors is None:
            return np.broadcast_to(np.eye(self.base.ambient_dim), (len(y), self.base.ambient_dim, self.base.ambient_dim))
        rows, _ = _locate_rows(self.base, y)
        return self.tensors[rows]

    def as_auxiliary(self, geo: SimplexGeometry) -> AuxiliaryMetric:
        if self.tensors is None:
            return AuxiliaryMetric.flat(geo.vertices, geo.inradius)
        base = self.base
        return AuxiliaryMetric(
            vertices=geo.vertices,
            inradius=geo.inradius,
            tensors=self.tensors,
            locate=lambda y: _locate_rows(base, y)[0],
            label=f"blowup-level-{self.level}",
        )


def _blowup_tensors(K: ColoredComplex, J: JoinStructure, aux_space: BlowupSpace) -> np.ndarray:
    """Per-simplex ``I + D tau^T G' D tau`` for a complex embedded in its own space."""
    d = K.dim
    pts = K.coords[K.top]
    tau = J.vertex_tau()[K.top]
    E = pts[:, 1:, :] - pts[:, :1, :]
    F = tau[:, 1:, :] - tau[:, :1, :]
    Dt = np.swapaxes(np.linalg.solve(E, F), 1, 2)  # (T, m, d): tau = Dt x
    Gp = aux_space.tensor_at(tau.mean(axis=1))
    return np.eye(d)[None] + np.einsum("tmi,tmn,tnj->tij", Dt, Gp, Dt)


def build_blowup_space(
    base: ColoredComplex,
    level: int,
    k: int,
    *,
    subdivision: int = 0,
    aux_cells: int = 4,
    level_spacing: float | None = None,
) -> BlowupSpace:
    """Iterated blow-up of ``base`` (dimension ``2^level * k - 1``).

    The auxiliary metric on the target simplex of the join map is the
    ``level - 1`` blow-up of a triangulated regular simplex of inradius 2,
    grounded at the flat simplex.  ``level_spacing`` (only for a 1-dimensional
    target) places Steiner nodes on the level sets of ``tau``.
    """
    if level < 0 or k < 1:
        raise ConstructError("need level >= 0 and k >= 1")
    expected = 2**level * k - 1
    if base.dim != expected:
        raise ConstructError(
            f"dimension {base.dim} is not of the form 2^level * k - 1 = {expected} for level={level}, k={k}"
        )
    G0 = build_metric_graph(base, subdivision)
    if level == 0:
        return BlowupSpace(base, 0, k, None, None, None, G0, G0, None)
    J = build_join(base, AUX_INRADIUS)
    n = J.n
    aux_dim = n - 1
    if aux_dim == 0:
        aux_space = BlowupSpace(
            simplex_space(0, 1), 0, k, None, None, None, *([_point_graph()] * 2), None
        )
    else:
        aux_space = build_blowup_space(
            simplex_space(aux_dim, aux_cells), level - 1, k, subdivision=0, aux_cells=aux_cells
        )
    aux = aux_space.as_auxiliary(J.geometry)
    if level_spacing is not None:
        if aux_dim != 1:
            raise ConstructError("level spacing needs a 1-dimensional target simplex")
        f = J.vertex_tau()[:, 0]
        G0 = build_metric_graph(base, 0, levels=(f, level_spacing))
    tau = G0.interpolate(J.vertex_tau())
    G1 = blowup(G0, tau, aux)
    tensors = None
    if base.dim == base.ambient_dim and not base.is_periodic and aux_dim > 0:
        tensors = _blowup_tensors(base, J, aux_space)
    return BlowupSpace(base, level, k, J, aux, aux_space, G0, G1, tau, tensors)


def _point_graph() -> MetricGraph:
    from .metric import graph_from_edges

    return graph_from_edges(np.zeros((1, 0)), np.zeros((0, 2), np.int64))


def scaled_variant(R: float, eps: float, n: int = 2, tile_cells: int | None = None) -> AmbientSpace:
    """Ambient space over a torus of side ``R`` at mesh scale ``eps``."""
    if not R >= 4 * eps - 1e-12:
        raise ConstructError(f"need R >= 4 eps (R={R:g}, eps={eps:g})")
    return build_ambient(n, eps, R, tile_cells=tile_cells, min_period=0.0)
