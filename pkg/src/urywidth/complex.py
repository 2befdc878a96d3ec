"""Periodic rainbow-colored triangulations built from the Kuhn subdivision.

A cube of side ``eps`` is split into ``d!`` Kuhn simplices sharing the main
diagonal; one barycentric subdivision of that complex is colored by face
dimension, so every top simplex is rainbow.  Vertices carry integer lattice
keys (``coords = keys * eps / key_scale``) and every identification, lookup
and periodic wrap is done on those integers.

The infinite lattice version of the same triangulation is exposed through
:class:`KuhnLattice`, whose point location is closed-form.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ComplexError",
    "DegenerateSimplexError",
    "PeriodError",
    "ColorConflictError",
    "EuclideanPoint",
    "ColoredComplex",
    "ShapeReport",
    "KuhnLattice",
    "lattice_scale",
    "regular_simplex",
    "kuhn_triangulate",
    "barycentric_subdivide_and_color",
    "make_periodic",
    "shape_report",
    "simplex_volumes",
    "check_periodicity",
]

DEGENERATE_RTOL = 1e-12


class ComplexError(ValueError):
    """Malformed complex or invalid construction parameters."""


class DegenerateSimplexError(ComplexError):
    pass


class PeriodError(ComplexError):
    pass


class ColorConflictError(ComplexError):
    pass


def lattice_scale(d: int) -> int:
    """Common denominator of all face barycenters of a d-dimensional lattice simplex."""
    return math.lcm(*range(1, d + 2))


def regular_simplex(k: int, edge: float = 1.0) -> np.ndarray:
    """Vertices (k+1, k) of a regular k-simplex centered at the origin."""
    if k == 0:
        return np.zeros((1, 0))
    # Helmert basis of the sum-zero hyperplane of R^{k+1}; deterministic, no QR sign flips.
    basis = np.zeros((k, k + 1))
    for j in range(1, k + 1):
        basis[j - 1, :j] = 1.0
        basis[j - 1, j] = -j
        basis[j - 1] /= math.sqrt(j * (j + 1))
    eye = np.eye(k + 1) - 1.0 / (k + 1)
    return eye @ basis.T * (edge / math.sqrt(2.0))


def _encode(keys: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Mixed-radix int64 code of integer rows within the box [lo, hi]."""
    radix = (hi - lo + 1).astype(np.int64)
    if float(np.prod(radix.astype(float))) >= 2.0**62:
        raise ComplexError("lattice box too large for int64 key encoding")
    shifted = keys.astype(np.int64) - lo
    code = np.zeros(keys.shape[:-1], dtype=np.int64)
    mult = 1
    for a in range(keys.shape[-1]):
        code += shifted[..., a] * mult
        mult *= int(radix[a])
    return code


@dataclass(frozen=True)
class EuclideanPoint:
    coords: tuple[float, ...]
    wrap: tuple[float | None, ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if not np.all(np.isfinite(c)):
            raise ValueError("point coordinates must be finite")
        if self.wrap is not None:
            if len(self.wrap) != len(c):
                raise ValueError("wrap must give one entry per axis")
            c = np.array([x % p if p else x for x, p in zip(c, self.wrap)])
        object.__setattr__(self, "coords", tuple(float(x) for x in c))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True, eq=False)
class ColoredComplex:
    """Finite (possibly periodic) simplicial complex given by its top simplices.

    ``top`` holds sorted vertex-index rows; lower-dimensional simplices are the
    faces of those rows (downward closure holds by construction) and are
    produced by :meth:`simplices`.  ``period_lengths[a]`` is the torus period of
    axis ``a`` or ``None``.
    """

    coords: np.ndarray
    top: np.ndarray
    colors: np.ndarray | None = None
    mesh_scale: float = 1.0
    period_lengths: tuple[float | None, ...] = ()
    keys: np.ndarray | None = None
    key_scale: int = 1
    kind: str = "generic"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=float)
        if coords.ndim != 2:
            raise ComplexError("coords must be a (V, D) array")
        top = np.asarray(self.top, dtype=np.int64)
        if top.ndim != 2 or top.shape[1] < 1:
            raise ComplexError("top must be a (T, k+1) array")
        if top.size and (top.min() < 0 or top.max() >= len(coords)):
            raise ComplexError("simplex refers to a missing vertex")
        top = np.sort(top, axis=1)
        if top.shape[1] > 1 and np.any(top[:, 1:] == top[:, :-1]):
            raise ComplexError("simplex with repeated vertex")
        periods = tuple(self.period_lengths) or (None,) * coords.shape[1]
        if len(periods) != coords.shape[1]:
            raise ComplexError("period_lengths must give one entry per axis")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "top", top)
        object.__setattr__(self, "period_lengths", periods)
        if self.colors is not None:
            object.__setattr__(self, "colors", np.asarray(self.colors, dtype=np.int64))
        if self.keys is not None:
            object.__setattr__(self, "keys", np.asarray(self.keys, dtype=np.int64))
        for arr in (self.coords, self.top, self.colors, self.keys):
            if arr is not None:
                arr.flags.writeable = False

    # -- basic shape -------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.top.shape[1] - 1

    @property
    def ambient_dim(self) -> int:
        return self.coords.shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def periods(self) -> list[np.ndarray]:
        """Translation vectors of the torus directions."""
        out = []
        for a, p in enumerate(self.period_lengths):
            if p is not None:
                v = np.zeros(self.ambient_dim)
                v[a] = p
                out.append(v)
        return out

    @property
    def is_periodic(self) -> bool:
        return any(p is not None for p in self.period_lengths)

    @property
    def key_periods(self) -> tuple[int | None, ...]:
        return tuple(
            None if p is None else int(round(p * self.key_scale / self.mesh_scale))
            for p in self.period_lengths
        )

    def simplices(self, k: int) -> np.ndarray:
        """Sorted (k+1)-rows of all k-simplices, lexicographically ordered."""
        if k < 0 or k > self.dim:
            return np.zeros((0, k + 1), dtype=np.int64)
        if k not in self._cache:
            if k == self.dim:
                rows = self.top
            else:
                cols = list(itertools.combinations(range(self.dim + 1), k + 1))
                rows = self.top[:, cols].reshape(-1, k + 1)
            rows = np.unique(rows, axis=0)
            rows.flags.writeable = False
            self._cache[k] = rows
        return self._cache[k]

    def f_vector(self) -> list[int]:
        return [len(self.simplices(k)) for k in range(self.dim + 1)]

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))

    def rainbow_fraction(self) -> float:
        if self.colors is None:
            return 0.0
        c = np.sort(self.colors[self.top], axis=1)
        distinct = np.all(c[:, 1:] != c[:, :-1], axis=1) if c.shape[1] > 1 else np.ones(len(c), bool)
        return float(distinct.mean()) if len(c) else 1.0

    def n_colors(self) -> int:
        return 0 if self.colors is None else len(np.unique(self.colors))

    # -- geometry -----------------------------------------------------------
    def unwrap(self, pts: np.ndarray) -> np.ndarray:
        """Minimum-image unwrap of (..., m, D) point groups relative to their first point."""
        pts = np.array(pts, dtype=float)
        for a, p in enumerate(self.period_lengths):
            if p is not None:
                delta = pts[..., a] - pts[..., :1, a]
                pts[..., a] -= np.round(delta / p) * p
        return pts

    def simplex_coords(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        return self.unwrap(self.coords[rows])

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Minimum-image vector b - a."""
        diff = np.asarray(b, float) - np.asarray(a, float)
        for ax, p in enumerate(self.period_lengths):
            if p is not None:
                diff[..., ax] -= np.round(diff[..., ax] / p) * p
        return diff

    # -- key lookup ---------------------------------------------------------
    def _key_table(self):
        if "keytab" not in self._cache:
            if self.keys is None:
                raise ComplexError("complex has no lattice keys")
            lo = self.keys.min(axis=0)
            hi = self.keys.max(axis=0)
            code = _encode(self.keys, lo, hi)
            order = np.argsort(code, kind="stable")
            self._cache["keytab"] = (lo, hi, code[order], order)
        return self._cache["keytab"]

    def wrap_keys(self, keys: np.ndarray) -> np.ndarray:
        keys = np.array(keys, dtype=np.int64)
        for a, p in enumerate(self.key_periods):
            if p is not None:
                keys[..., a] %= p
        return keys

    def lookup_keys(self, keys: np.ndarray) -> np.ndarray:
        """Vertex ids for integer keys (wrapped on torus axes); -1 when absent."""
        lo, hi, codes, order = self._key_table()
        keys = self.wrap_keys(keys)
        inside = np.all((keys >= lo) & (keys <= hi), axis=-1)
        clipped = np.clip(keys, lo, hi)
        code = _encode(clipped, lo, hi)
        pos = np.searchsorted(codes, code)
        pos = np.minimum(pos, len(codes) - 1)
        found = inside & (codes[pos] == code)
        return np.where(found, order[pos], -1)

    def find_simplex_rows(self, rows: np.ndarray, k: int | None = None) -> np.ndarray:
        """Index into ``simplices(k)`` of each sorted row, -1 if not a simplex."""
        rows = np.sort(np.asarray(rows, dtype=np.int64), axis=-1)
        k = rows.shape[-1] - 1 if k is None else k
        table = self.simplices(k)
        key = ("rowidx", k)
        if key not in self._cache:
            self._cache[key] = {tuple(r): i for i, r in enumerate(table.tolist())}
        idx = self._cache[key]
        flat = rows.reshape(-1, k + 1).tolist()
        out = np.array([idx.get(tuple(r), -1) for r in flat], dtype=np.int64)
        return out.reshape(rows.shape[:-1])


@dataclass(frozen=True)
class ShapeReport:
    distortion: np.ndarray
    max_distortion: float
    max_diameter: float
    min_volume: float

    def to_dict(self) -> dict:
        return {
            "max_distortion": self.max_distortion,
            "max_diameter": self.max_diameter,
            "min_volume": self.min_volume,
            "n_simplices": int(len(self.distortion)),
        }


def _as_cells(cells_per_axis, d: int) -> np.ndarray:
    cells = np.atleast_1d(np.asarray(cells_per_axis))
    if cells.size == 1:
        cells = np.repeat(cells, d)
    if cells.size != d:
        raise ComplexError(f"need {d} cell counts, got {cells.size}")
    if not np.all(cells == np.round(cells)) or np.any(cells <= 0):
        raise ComplexError("cell counts must be positive integers")
    return cells.astype(np.int64)


def _grid(lo: np.ndarray, counts: np.ndarray) -> np.ndarray:
    axes = [np.arange(l, l + c) for l, c in zip(lo, counts)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def kuhn_triangulate(
    d: int,
    cells_per_axis: int | Sequence[int],
    eps: float,
    start: Sequence[int] | None = None,
) -> ColoredComplex:
    """Kuhn (Freudenthal) triangulation of a box of ``eps``-cubes.

    Every cube ``c + [0, 1]^d`` is cut into the ``d!`` simplices
    ``c, c + e_{s1}, c + e_{s1} + e_{s2}, ...`` over all permutations ``s``.
    ``start`` offsets the box in whole cells.
    """
    if d < 1:
        raise ComplexError("dimension must be at least 1")
    if not eps > 0:
        raise ComplexError("eps must be positive")
    cells = _as_cells(cells_per_axis, d)
    start = np.zeros(d, np.int64) if start is None else np.asarray(start, np.int64)
    keys = _grid(start, cells + 1)
    lo, hi = start, start + cells
    cubes = _grid(start, cells)
    perms = list(itertools.permutations(range(d)))
    steps = np.zeros((len(perms), d + 1, d), dtype=np.int64)
    for p, perm in enumerate(perms):
        for j, axis in enumerate(perm):
            steps[p, j + 1 :, axis] += 1
    simplex_keys = cubes[:, None, None, :] + steps[None]
    codes = _encode(simplex_keys.reshape(-1, d), lo, hi)
    vcodes = _encode(keys, lo, hi)
    order = np.argsort(vcodes)
    ids = order[np.searchsorted(vcodes[order], codes)]
    top = np.sort(ids.reshape(-1, d + 1), axis=1)
    top = top[np.lexsort(top.T[::-1])]
    return ColoredComplex(
        coords=keys * float(eps),
        top=top,
        colors=None,
        mesh_scale=float(eps),
        keys=keys,
        key_scale=1,
        kind="kuhn",
    )


def barycentric_subdivide_and_color(K: ColoredComplex) -> ColoredComplex:
    """First barycentric subdivision, colored by ``1 + dim`` of the carrier face.

    Top simplices are flags ``F_0 < F_1 < ... < F_k`` of faces of a top simplex
    of ``K``; there are ``(k+1)!`` per simplex and each is rainbow.
    """
    k = K.dim
    T = K.top
    perms = list(itertools.permutations(range(k + 1)))
    n_flags = len(T) * len(perms)
    weights = np.array([1.0 / (j + 1) for j in range(k + 1)])

    if K.keys is not None:
        lk = lattice_scale(k)
        new_scale = K.key_scale * lk
        base = K.keys[T]
        kp = K.key_periods
        for a, p in enumerate(kp):
            if p is not None:
                delta = base[..., a] - base[..., :1, a]
                base[..., a] -= np.round(delta / p).astype(np.int64) * p
        lo = base.reshape(-1, K.ambient_dim).min(axis=0) * lk
        hi = base.reshape(-1, K.ambient_dim).max(axis=0) * lk
        new_kp = tuple(None if p is None else p * lk for p in kp)
        for a, p in enumerate(new_kp):
            if p is not None:
                lo[a] = min(lo[a], 0)
                hi[a] = max(hi[a], p)
        mult = np.array([lk // (j + 1) for j in range(k + 1)], dtype=np.int64)
        codes = np.empty((len(perms), len(T), k + 1), dtype=np.int64)
        for pi, perm in enumerate(perms):
            bk = np.cumsum(base[:, list(perm), :], axis=1) * mult[None, :, None]
            for a, p in enumerate(new_kp):
                if p is not None:
                    bk[..., a] %= p
            codes[pi] = _encode(bk, lo, hi)
        uniq, inv = np.unique(codes.reshape(-1), return_inverse=True)
        inv = inv.reshape(len(perms), len(T), k + 1)
        # decode the keys of the unique vertices
        radix = hi - lo + 1
        new_keys = np.empty((len(uniq), K.ambient_dim), dtype=np.int64)
        rem = uniq.copy()
        for a in range(K.ambient_dim):
            new_keys[:, a] = rem % radix[a] + lo[a]
            rem //= radix[a]
        colors = np.empty(len(uniq), dtype=np.int64)
        colors[inv.reshape(-1)] = np.tile(np.arange(1, k + 2), n_flags)
        coords = new_keys * (K.mesh_scale / new_scale)
        top = inv.transpose(1, 0, 2).reshape(-1, k + 1)
        return ColoredComplex(
            coords=coords,
            top=top,
            colors=colors,
            mesh_scale=K.mesh_scale,
            period_lengths=K.period_lengths,
            keys=new_keys,
            key_scale=new_scale,
            kind="barycentric" if K.kind == "kuhn" else "generic",
        )

    # generic complexes: faces identified by their sorted vertex rows
    pts = K.simplex_coords(T)
    face_rows = np.full((len(perms), len(T), k + 1, k + 1), -1, dtype=np.int64)
    bary = np.empty((len(perms), len(T), k + 1, K.ambient_dim))
    for pi, perm in enumerate(perms):
        for j in range(k + 1):
            sub = list(perm[: j + 1])
            face_rows[pi, :, j, : j + 1] = np.sort(T[:, sub], axis=1)
            bary[pi, :, j] = pts[:, sub, :].mean(axis=1)
    flat = face_rows.reshape(-1, k + 1)
    uniq, first, inv = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    coords = bary.reshape(-1, K.ambient_dim)[first]
    for a, p in enumerate(K.period_lengths):
        if p is not None:
            coords[:, a] %= p
    colors = (uniq >= 0).sum(axis=1)
    top = inv.reshape(len(perms), len(T), k + 1).transpose(1, 0, 2).reshape(-1, k + 1)
    return ColoredComplex(
        coords=coords,
        top=top,
        colors=colors,
        mesh_scale=K.mesh_scale,
        period_lengths=K.period_lengths,
    )


def make_periodic(
    K: ColoredComplex,
    torus_axes: Iterable[int] | str = "all",
    min_period: float = 4.0,
) -> ColoredComplex:
    """Identify opposite faces of the lattice box along ``torus_axes``.

    Periods shorter than ``min_period`` are rejected: a flat torus has
    convexity radius equal to a quarter of its shortest period, so the default
    guarantees convexity radius at least 1.
    """
    if K.keys is None:
        raise ComplexError("periodic identification needs lattice keys")
    D = K.ambient_dim
    axes = list(range(D)) if torus_axes == "all" else sorted(set(int(a) for a in torus_axes))
    if any(a < 0 or a >= D for a in axes):
        raise ComplexError(f"torus axes must lie in 0..{D - 1}")
    lo = K.keys.min(axis=0)
    hi = K.keys.max(axis=0)
    kp = list(K.key_periods)
    min_cells = 2 if K.kind == "barycentric" else 3
    for a in axes:
        if kp[a] is not None:
            continue
        span = int(hi[a] - lo[a])
        length = span * K.mesh_scale / K.key_scale
        if length < min_period - 1e-12:
            raise PeriodError(
                f"period {length:g} along axis {a} is below {min_period:g}; "
                f"the flat torus would have convexity radius {length / 4:g} < {min_period / 4:g}"
            )
        if span < min_cells * K.key_scale:
            raise PeriodError(f"axis {a} needs at least {min_cells} cells to stay simplicial")
        kp[a] = span
    new_keys = K.keys.copy()
    for a, p in enumerate(kp):
        if p is not None:
            new_keys[:, a] %= p
    code = _encode(new_keys, new_keys.min(axis=0), new_keys.max(axis=0))
    uniq, first, inv = np.unique(code, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    colors = None
    if K.colors is not None:
        colors = K.colors[first]
        if np.any(colors[inv] != K.colors):
            raise ColorConflictError("identification merges vertices of different colors")
    top = np.sort(inv[K.top], axis=1)
    if top.shape[1] > 1 and np.any(top[:, 1:] == top[:, :-1]):
        raise ComplexError("identification collapses a simplex")
    if len(np.unique(top, axis=0)) != len(top):
        raise ComplexError("identification merges distinct simplices")
    periods = tuple(
        None if p is None else p * K.mesh_scale / K.key_scale for p in kp
    )
    keys = new_keys[first]
    return ColoredComplex(
        coords=keys * (K.mesh_scale / K.key_scale),
        top=top,
        colors=colors,
        mesh_scale=K.mesh_scale,
        period_lengths=periods,
        keys=keys,
        key_scale=K.key_scale,
        kind=K.kind,
    )


def simplex_volumes(pts: np.ndarray) -> np.ndarray:
    """k-volumes of simplices given as (T, k+1, D) vertex arrays."""
    k = pts.shape[1] - 1
    E = pts[:, 1:, :] - pts[:, :1, :]
    if k == pts.shape[2]:
        vol = np.abs(np.linalg.det(E))
    else:
        gram = E @ np.swapaxes(E, 1, 2)
        vol = np.sqrt(np.clip(np.linalg.det(gram), 0.0, None))
    return vol / math.factorial(k)


def shape_report(K: ColoredComplex, chunk: int = 200_000) -> ShapeReport:
    """Distortion of every top simplex relative to the regular simplex.

    The distortion is the ratio of the extreme singular values of the linear
    part of the affine map carrying a regular simplex onto the simplex; it is
    1 exactly for regular simplices and does not depend on the vertex order.
    """
    k = K.dim
    if k == 0:
        return ShapeReport(np.ones(len(K.top)), 1.0, 0.0, 0.0)
    reg = regular_simplex(k)
    reg_edges = reg[1:] - reg[0]
    dist = np.empty(len(K.top))
    max_diam = 0.0
    min_vol = math.inf
    pairs = np.array(list(itertools.combinations(range(k + 1), 2)))
    for s in range(0, len(K.top), chunk):
        pts = K.simplex_coords(K.top[s : s + chunk])
        vol = simplex_volumes(pts)
        bad = vol <= DEGENERATE_RTOL * K.mesh_scale**k
        if np.any(bad):
            raise DegenerateSimplexError(
                f"{int(bad.sum())} degenerate simplices (first: {K.top[s + int(np.argmax(bad))].tolist()})"
            )
        E = pts[:, 1:, :] - pts[:, :1, :]
        lin = np.linalg.solve(np.broadcast_to(reg_edges, (len(E), k, k)), E)
        sv = np.linalg.svd(lin, compute_uv=False)
        dist[s : s + chunk] = sv[:, 0] / sv[:, -1]
        edges = pts[:, pairs[:, 1], :] - pts[:, pairs[:, 0], :]
        max_diam = max(max_diam, float(np.sqrt((edges**2).sum(-1)).max()))
        min_vol = min(min_vol, float(vol.min()))
    return ShapeReport(dist, float(dist.max()) if len(dist) else 1.0, max_diam, min_vol)


def check_periodicity(K: ColoredComplex, vectors: Sequence[Sequence[int]]) -> int:
    """Translate every top simplex by integer key vectors and compare colors.

    Returns the number of translated simplices that landed inside ``K``;
    raises :class:`ComplexError` on the first mismatch.
    """
    if K.keys is None or K.colors is None:
        raise ComplexError("periodicity check needs a keyed, colored complex")
    tops = {tuple(r) for r in K.top.tolist()}
    checked = 0
    for vec in vectors:
        shifted = K.keys[K.top] + np.asarray(vec, dtype=np.int64)
        ids = K.lookup_keys(shifted)
        ok = np.all(ids >= 0, axis=1)
        for row, img in zip(K.top[ok], ids[ok]):
            img_sorted = tuple(sorted(img.tolist()))
            if img_sorted not in tops:
                raise ComplexError(f"translate of {row.tolist()} is not a simplex")
            if np.any(K.colors[row] != K.colors[img]):
                raise ComplexError(f"translate of {row.tolist()} changes colors")
            checked += 1
    return checked


@dataclass(frozen=True)
class KuhnLattice:
    """The infinite Kuhn + barycentric triangulation of R^d at cube size ``eps``.

    :meth:`locate` returns, for each point, the integer keys of the containing
    top simplex ordered by color (vertex ``j`` has color ``j + 1``) and the
    barycentric weights of the point in that simplex.  Ties on shared faces
    are broken by stable sorting, so the choice is deterministic.
    """

    d: int
    eps: float

    @property
    def key_scale(self) -> int:
        return lattice_scale(self.d)

    def locate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = self.d
        u = x / self.eps
        cube = np.floor(u)
        frac = u - cube
        cube = cube.astype(np.int64)
        order = np.argsort(-frac, axis=1, kind="stable")
        fs = np.take_along_axis(frac, order, axis=1)
        # barycentric weights of the Kuhn simplex c, c+e_o1, c+e_o1+e_o2, ...
        mu = np.empty((len(x), d + 1))
        mu[:, 0] = 1.0 - fs[:, 0]
        mu[:, 1:d] = fs[:, :-1] - fs[:, 1:]
        mu[:, d] = fs[:, -1]
        kuhn = np.repeat(cube[:, None, :], d + 1, axis=1)
        rows = np.arange(len(x))
        for j in range(d):
            kuhn[rows, j + 1 :, order[:, j]] += 1
        # barycentric subdivision: flag of the largest weights first
        rank = np.argsort(-mu, axis=1, kind="stable")
        ms = np.take_along_axis(mu, rank, axis=1)
        w = np.empty_like(ms)
        w[:, :-1] = ms[:, :-1] - ms[:, 1:]
        w[:, -1] = ms[:, -1]
        w *= np.arange(1, d + 2)
        L = self.key_scale
        mult = np.array([L // (j + 1) for j in range(d + 1)], dtype=np.int64)
        ordered = np.take_along_axis(kuhn, rank[:, :, None], axis=1)
        keys = np.cumsum(ordered, axis=1) * mult[None, :, None]
        return keys, w

    def key_coords(self, keys: np.ndarray) -> np.ndarray:
        return np.asarray(keys, dtype=float) * (self.eps / self.key_scale)
