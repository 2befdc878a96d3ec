"""Local-join structure of a rainbow-colored (2n-1)-complex.

Colors ``2i-1, 2i`` span the 1-dimensional skeleton ``Z_i`` (pair indices
``i`` run from 1 to n, matching the colors).  Every point of a top simplex is
``sum t_i z_i`` with ``z_i`` on the ``Z_i`` edge of that simplex; the weights
``t`` define the join map into a regular simplex and ``z_i`` the retraction
onto ``Z_i``, which is undefined where ``t_i = 0`` (the dual complex).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complex import ColoredComplex, ComplexError, KuhnLattice, regular_simplex

__all__ = [
    "JoinError",
    "OutsideComplexError",
    "DualObstructionError",
    "SimplexGeometry",
    "JoinStructure",
    "JoinCoordinates",
    "build_join",
    "join_coordinates",
    "join_weights",
    "join_map",
    "retract",
    "face_agreement",
    "check_preimages",
]

OBSTRUCTION_TOL = 1e-12


class JoinError(ValueError):
    pass


class OutsideComplexError(JoinError):
    pass


class DualObstructionError(JoinError):
    pass


@dataclass(frozen=True, eq=False)
class SimplexGeometry:
    """Regular simplex with ``n`` vertices in R^{n-1}, centered at the origin."""

    n: int
    inradius: float
    vertices: np.ndarray

    @classmethod
    def regular(cls, n: int, inradius: float) -> "SimplexGeometry":
        if n < 1:
            raise JoinError("a simplex needs at least one vertex")
        k = n - 1
        if k == 0:
            return cls(1, 0.0, np.zeros((1, 0)))
        unit_inradius = 1.0 / math.sqrt(2.0 * k * (k + 1))
        verts = regular_simplex(k) * (inradius / unit_inradius)
        verts.flags.writeable = False
        return cls(n, float(inradius), verts)

    @property
    def dim(self) -> int:
        return self.n - 1

    @property
    def height(self) -> float:
        return self.n * self.inradius

    def point(self, t: np.ndarray) -> np.ndarray:
        return np.asarray(t, dtype=float) @ self.vertices

    def facet_distances(self, y: np.ndarray) -> np.ndarray:
        """Signed distance from ``y`` to each facet ``v_i^vee`` (positive inside)."""
        y = np.asarray(y, dtype=float)
        if self.n == 1:
            return np.full(y.shape[:-1] + (1,), np.inf)
        norms = np.linalg.norm(self.vertices, axis=1)
        return self.inradius + (y @ self.vertices.T) / norms

    def barycentric(self, y: np.ndarray) -> np.ndarray:
        if self.n == 1:
            return np.ones(np.asarray(y).shape[:-1] + (1,))
        return self.facet_distances(y) / self.height


@dataclass(frozen=True, eq=False)
class JoinStructure:
    base: ColoredComplex
    n: int
    geometry: SimplexGeometry
    skeleton_vertices: list[np.ndarray]
    skeleta: list[np.ndarray]
    duals: list[np.ndarray]
    pair_of_vertex: np.ndarray
    lattice: KuhnLattice | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def in_skeleton(self, i: int) -> np.ndarray:
        return self.pair_of_vertex == i

    def vertex_tau(self) -> np.ndarray:
        """Join-map value at every base vertex (a vertex of the target simplex)."""
        return self.geometry.vertices[self.pair_of_vertex - 1]


@dataclass(frozen=True)
class JoinCoordinates:
    t: np.ndarray
    anchors: dict[int, np.ndarray]
    simplex: tuple[int, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(self.t[i - 1] * z for i, z in self.anchors.items())


def build_join(K: ColoredComplex, inradius: float = 1.0) -> JoinStructure:
    if K.colors is None:
        raise JoinError("join structure needs a colored complex")
    palette = np.unique(K.colors)
    if len(palette) % 2:
        raise JoinError(f"odd number of colors ({len(palette)})")
    if not np.array_equal(palette, np.arange(1, len(palette) + 1)):
        raise JoinError("colors must be 1..2n")
    if len(palette) != K.dim + 1 or K.rainbow_fraction() < 1.0:
        raise JoinError("complex is not rainbow-colored in dim+1 colors")
    n = len(palette) // 2
    pair = (K.colors + 1) // 2
    edges = K.simplices(1)
    skeleta, verts, duals = [], [], []
    faces = K.simplices(2 * n - 3) if n >= 2 else np.zeros((0, 0), np.int64)
    for i in range(1, n + 1):
        verts.append(np.flatnonzero(pair == i))
        skeleta.append(edges[(pair[edges[:, 0]] == i) & (pair[edges[:, 1]] == i)])
        if n >= 2:
            duals.append(faces[np.all(pair[faces] != i, axis=1)])
        else:
            duals.append(np.zeros((0, 0), np.int64))
    lattice = None
    if K.kind == "barycentric" and K.keys is not None and K.dim == K.ambient_dim:
        lattice = KuhnLattice(K.dim, K.mesh_scale)
    return JoinStructure(
        base=K,
        n=n,
        geometry=SimplexGeometry.regular(n, inradius),
        skeleton_vertices=verts,
        skeleta=skeleta,
        duals=duals,
        pair_of_vertex=pair,
        lattice=lattice,
    )


def _barycentric_in(K: ColoredComplex, rows: np.ndarray, x: np.ndarray):
    """Barycentric weights of points ``x`` (P, D) in full-dimensional simplices ``rows``."""
    pts = K.simplex_coords(rows)
    rel = K.displacement(pts[:, 0, :], x)
    E = pts[:, 1:, :] - pts[:, :1, :]
    lam_rest = np.linalg.solve(np.swapaxes(E, 1, 2), rel[..., None])[..., 0]
    return np.concatenate([1.0 - lam_rest.sum(axis=1, keepdims=True), lam_rest], axis=1)


def _locate_generic(K: ColoredComplex, x: np.ndarray, tol: float = 1e-10):
    rows = np.empty((len(x), K.dim + 1), dtype=np.int64)
    lams = np.empty((len(x), K.dim + 1))
    for p, point in enumerate(x):
        lam = _barycentric_in(K, K.top, np.broadcast_to(point, (len(K.top), K.ambient_dim)))
        ok = np.flatnonzero(np.all(lam >= -tol, axis=1))
        if len(ok) == 0:
            raise OutsideComplexError(f"point {point.tolist()} lies outside the complex")
        rows[p] = K.top[ok[0]]
        lams[p] = np.clip(lam[ok[0]], 0.0, None)
        lams[p] /= lams[p].sum()
    return rows, lams


def join_weights(J: JoinStructure, x: np.ndarray, simplices: np.ndarray | None = None):
    """Vectorized join coordinates.

    Returns ``(t, anchors, rows)`` with ``t`` of shape (P, n), anchors (P, n, D)
    (NaN where ``t_i = 0``) and the vertex rows of the containing top simplices
    ordered by color.
    """
    K = J.base
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if simplices is not None:
        rows = np.atleast_2d(np.asarray(simplices, dtype=np.int64))
        if len(rows) == 1 and len(x) > 1:
            rows = np.repeat(rows, len(x), axis=0)
        lam = _barycentric_in(K, rows, x)
        if np.any(lam < -1e-9):
            raise OutsideComplexError("point is not in the hinted simplex")
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum(axis=1, keepdims=True)
        pos = K.unwrap(np.concatenate([x[:, None, :], K.coords[rows]], axis=1))[:, 1:, :]
    elif J.lattice is not None:
        keys, lam = J.lattice.locate(x)
        rows = K.lookup_keys(keys)
        if np.any(rows < 0):
            bad = int(np.flatnonzero(np.any(rows < 0, axis=1))[0])
            raise OutsideComplexError(f"point {x[bad].tolist()} lies outside the complex")
        pos = J.lattice.key_coords(keys)
    else:
        rows, lam = _locate_generic(K, x)
        pos = K.unwrap(np.concatenate([x[:, None, :], K.coords[rows]], axis=1))[:, 1:, :]
    colors = K.colors[rows]
    n = J.n
    t = np.zeros((len(x), n))
    anchors = np.zeros((len(x), n, K.ambient_dim))
    for i in range(1, n + 1):
        mask = (colors + 1) // 2 == i
        wi = np.where(mask, lam, 0.0)
        t[:, i - 1] = wi.sum(axis=1)
        anchors[:, i - 1, :] = (wi[:, :, None] * pos).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        anchors /= t[:, :, None]
    anchors[t <= 0.0] = np.nan
    order = np.argsort(colors, axis=1, kind="stable")
    return t, anchors, np.take_along_axis(rows, order, axis=1)


def join_coordinates(J: JoinStructure, x, simplex=None) -> JoinCoordinates:
    t, anchors, rows = join_weights(J, np.asarray(x, float)[None, :], None if simplex is None else [simplex])
    found = {i: anchors[0, i - 1] for i in range(1, J.n + 1) if t[0, i - 1] > 0.0}
    return JoinCoordinates(t=t[0], anchors=found, simplex=tuple(int(v) for v in rows[0]))


def join_map(J: JoinStructure, x: np.ndarray, simplices=None) -> np.ndarray:
    t, _, _ = join_weights(J, x, simplices)
    out = J.geometry.point(t)
    return out[0] if np.asarray(x).ndim == 1 else out


def retract(J: JoinStructure, i: int, x: np.ndarray, simplices=None) -> np.ndarray:
    """The retraction onto ``Z_i``; raises where ``x`` lies on the dual complex."""
    if not 1 <= i <= J.n:
        raise JoinError(f"pair index must lie in 1..{J.n}")
    single = np.asarray(x).ndim == 1
    t, anchors, _ = join_weights(J, x, simplices)
    blocked = t[:, i - 1] <= OBSTRUCTION_TOL
    if np.any(blocked):
        bad = np.atleast_2d(x)[int(np.flatnonzero(blocked)[0])]
        raise DualObstructionError(
            f"point {np.asarray(bad).tolist()} lies on the dual complex Z_{i}^vee (t_{i} = 0)"
        )
    out = anchors[:, i - 1, :]
    return out[0] if single else out


def face_agreement(J: JoinStructure, samples: int = 10, max_faces: int | None = None, seed: int = 0) -> float:
    """Largest disagreement of join coordinates computed from the two sides of interior faces."""
    K = J.base
    rng = np.random.default_rng(seed)
    d = K.dim
    cols = [[j for j in range(d + 1) if j != drop] for drop in range(d + 1)]
    facets = np.sort(K.top[:, cols].reshape(-1, d), axis=1)
    owner = np.repeat(np.arange(len(K.top)), d + 1)
    order = np.lexsort(facets.T[::-1])
    facets, owner = facets[order], owner[order]
    same = np.all(facets[1:] == facets[:-1], axis=1)
    pairs = np.flatnonzero(same)
    if max_faces is not None and len(pairs) > max_faces:
        pairs = np.sort(rng.choice(pairs, size=max_faces, replace=False))
    worst = 0.0
    for p in pairs:
        face = facets[p]
        w = rng.dirichlet(np.ones(d), size=samples)
        pts = K.simplex_coords(face[None, :])[0]
        x = w @ pts
        a, b = K.top[owner[p]], K.top[owner[p + 1]]
        ta, za, _ = join_weights(J, x, np.repeat(a[None], samples, 0))
        tb, zb, _ = join_weights(J, x, np.repeat(b[None], samples, 0))
        worst = max(worst, float(np.abs(ta - tb).max()))
        live = ta > 1e-9
        if np.any(live):
            dz = K.displacement(za[live], zb[live])
            worst = max(worst, float(np.abs(dz).max()))
    return worst


def check_preimages(J: JoinStructure, tol: float = 1e-9) -> bool:
    """Check ``Z_i = tau^-1(v_i)`` and ``Z_i^vee = tau^-1(v_i^vee)`` on vertices and edge midpoints.

    The join weights are evaluated through a top simplex containing each
    sample, not read off the colors.
    """
    K = J.base
    d = K.dim
    pairs = [(a, b) for a in range(d + 1) for b in range(a + 1, d + 1)]
    edge_rows = K.top[:, pairs].reshape(-1, 2)
    owner = np.repeat(np.arange(len(K.top)), len(pairs))
    edges, first = np.unique(edge_rows, axis=0, return_index=True)
    hosts = K.top[owner[first]]
    ends = K.simplex_coords(edges)
    mids = 0.5 * (ends[:, 0] + ends[:, 1])
    t_mid, _, _ = join_weights(J, mids, hosts)
    t_a, _, _ = join_weights(J, ends[:, 0], hosts)
    pair = J.pair_of_vertex
    for i in range(1, J.n + 1):
        in_z = pair == i
        if not np.array_equal(t_a[:, i - 1] >= 1.0 - tol, in_z[edges[:, 0]]):
            return False
        if not np.array_equal(t_a[:, i - 1] <= tol, ~in_z[edges[:, 0]]):
            return False
        e_in = in_z[edges[:, 0]] & in_z[edges[:, 1]]
        if not np.array_equal(t_mid[:, i - 1] >= 1.0 - tol, e_in):
            return False
        e_dual = ~in_z[edges[:, 0]] & ~in_z[edges[:, 1]]
        if not np.array_equal(t_mid[:, i - 1] <= tol, e_dual):
            return False
        if len(J.duals[i - 1]) and np.any(pair[J.duals[i - 1]] == i):
            return False
    return True
