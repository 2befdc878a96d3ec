"""Local width of unit balls through the retractions ``pi_i`` of a join structure.

Two modes:

* direct: the ball lives in an explicit metric graph and the closed-star
  fibers of ``pi_i`` (optionally paired with a cell of the join map ``tau``)
  are cut down to the ball and measured there;
* lattice classes: the space is invariant under the lattice translations of
  its Kuhn triangulation, so every fiber is a translate of a fiber over a
  target vertex in one central cell.  Those are measured once, on a finite
  window, and every ball is certified by the classes it can meet.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csgraph

from ..construct import (
    AUX_INRADIUS,
    BlowupSpace,
    LevelSetManifold,
    build_ambient,
    build_blowup_space,
    extract_level_set,
)
from ..complex import barycentric_subdivide_and_color, kuhn_triangulate, make_periodic
from ..join import SimplexGeometry
from ..metric import MetricGraph, ball, build_metric_graph
from .certificate import CertificateError, WidthCertificate, params_hash, register_verifier
from .fibers import (
    AssignmentError,
    EuclideanIndex,
    TargetComplex,
    WindowError,
    _same,
    fiber_diameter,
    fiber_radius,
    fiber_table,
    set_diameter,
)

__all__ = [
    "join_cells",
    "select_pair",
    "LocalWidthReport",
    "direct_local_width",
    "ClassRow",
    "ClassTable",
    "level_set_class_table",
    "blowup_class_table",
    "class_local_width",
    "local_width_report",
    "segment_target",
]


def join_cells(ids: np.ndarray, w: np.ndarray, pair_of_vertex: np.ndarray, n: int):
    """Join weights ``t`` (N, n) and, per pair ``i``, the ``pi_i`` cell of each node.

    ``ids``/``w`` are barycentric data over base vertices (rows may repeat a
    vertex).  The cell is the set of pair-``i`` vertices carrying positive
    weight, ``-1`` padded to two columns (pair skeleta are 1-dimensional).
    """
    ids = np.asarray(ids, np.int64)
    w = np.asarray(w, float)
    pair = pair_of_vertex[ids]
    t = np.stack([np.where(pair == i, w, 0.0).sum(axis=1) for i in range(1, n + 1)], axis=1)
    cells = []
    for i in range(1, n + 1):
        sel = np.where((pair == i) & (w > 0), ids, np.iinfo(np.int64).max)
        sel = np.sort(sel, axis=1)
        # drop repeats of the same vertex
        dup = np.zeros_like(sel, dtype=bool)
        dup[:, 1:] = sel[:, 1:] == sel[:, :-1]
        sel = np.where(dup, np.iinfo(np.int64).max, sel)
        sel = np.sort(sel, axis=1)[:, :2]
        if np.any(sel[:, 1:] != np.iinfo(np.int64).max) and sel.shape[1] > 2:
            raise AssignmentError("pair cell with more than two vertices")
        sel = np.where(sel == np.iinfo(np.int64).max, -1, sel)
        cells.append(sel)
    return t, cells


def select_pair(geo: SimplexGeometry, tau: np.ndarray) -> tuple[int, float]:
    """The ``i`` whose dual facet is farthest from ``tau``; ties go to the smaller ``i``."""
    dist = geo.facet_distances(np.atleast_2d(tau))[0]
    i = int(np.argmax(dist))
    return i + 1, float(dist[i])


@dataclass
class LocalWidthReport:
    """Per-ball certificates (``None`` where uncertified) and summary numbers."""

    d: int
    radius: float
    eps: float
    centers: list
    certificates: list
    reasons: list

    @property
    def certified_fraction(self) -> float:
        return sum(c is not None for c in self.certificates) / max(1, len(self.certificates))

    @property
    def max_value(self) -> float:
        vals = [c.value for c in self.certificates if c is not None]
        return max(vals) if vals else math.nan

    @property
    def constant(self) -> float:
        """Measured ``C`` in ``value <= C * eps``."""
        return self.max_value / self.eps

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "radius": self.radius,
            "eps": self.eps,
            "certified_fraction": self.certified_fraction,
            "max_value": self.max_value,
            "C": self.constant,
            "balls": [
                {"center": c, "certificate": None if k is None else k.to_dict(), "reason": r}
                for c, k, r in zip(self.centers, self.certificates, self.reasons)
            ],
        }


# -- direct mode --------------------------------------------------------------


def direct_local_width(
    G: MetricGraph,
    t: np.ndarray,
    pi_cells: Sequence[np.ndarray],
    geo: SimplexGeometry,
    tau: np.ndarray,
    centers: Sequence[int],
    radius: float = 1.0,
    *,
    eps: float = 1.0,
    extra: tuple[TargetComplex, np.ndarray] | None = None,
    space: str = "",
) -> LocalWidthReport:
    """Certify balls ``B_radius(center)`` of ``G`` through ``pi_i`` restricted to the ball.

    ``t`` are the join weights per node, ``pi_cells[i-1]`` the ``pi_i`` cells,
    ``tau`` the join map per node in the coordinates of ``geo``.  ``extra``
    (a target and per-node cells) is paired with ``pi_i`` as a product map.
    """
    certs, reasons = [], []
    n = t.shape[1]
    d_out = 1 + (extra[0].dim if extra is not None else 0)
    for c in centers:
        c = int(c)
        i, dist = select_pair(geo, tau[c])
        B = ball(G, c, radius)
        tmin = float(t[B, i - 1].min())
        if not tmin > 0:
            certs.append(None)
            reasons.append(f"ball meets the dual complex of every admissible pair (i={i}, min t={tmin:g})")
            continue
        targets = [TargetComplex.graph(_pair_edges_from_cells(pi_cells[i - 1][B]), np.unique(pi_cells[i - 1][B][:, 0]))]
        cells = [pi_cells[i - 1]]
        if extra is not None:
            targets.append(extra[0])
            cells.append(extra[1])
        table = fiber_table(targets, cells, B)
        best, worst = -1.0, None
        rows = []
        for key, fn in zip(table.keys, table.nodes):
            fd = fiber_diameter(G, fn)
            rows.append({"key": [int(v) for v in key], "diameter": fd.value, "witnesses": list(fd.witnesses)})
            if fd.value > best:
                best, worst = fd.value, key
        ev = {
            "mode": "direct",
            "center": c,
            "radius": radius,
            "i": i,
            "dual_distance": dist,
            "min_t_i": tmin,
            "n_ball": int(len(B)),
            "fibers": rows,
            "n": n,
        }
        certs.append(
            WidthCertificate("upper", d_out, best, "ball-fibers", ev, space=f"{space}:ball({c},{radius:g})")
        )
        reasons.append("")
    return LocalWidthReport(d_out, radius, eps, [int(c) for c in centers], certs, reasons)


def _pair_edges_from_cells(cells: np.ndarray) -> np.ndarray:
    e = cells[cells[:, 1] >= 0]
    return np.unique(e, axis=0) if len(e) else np.zeros((0, 2), np.int64)


@register_verifier("ball-fibers")
def _verify_ball(cert: WidthCertificate, context) -> bool:
    """``context = (G, t, pi_cells[, extra])``; recomputes the ball, fibers and
    diameters with full-graph Dijkstra and compares exactly."""
    G, t, pi_cells = context[:3]
    extra = context[3] if len(context) > 3 else None
    ev = cert.evidence
    c, i = int(ev["center"]), int(ev["i"])
    B = ball(G, c, float(ev["radius"]))
    if not t[B, i - 1].min() > 0 or float(t[B, i - 1].min()) != ev["min_t_i"]:
        return False
    targets = [TargetComplex.graph(_pair_edges_from_cells(pi_cells[i - 1][B]), np.unique(pi_cells[i - 1][B][:, 0]))]
    cells = [pi_cells[i - 1]]
    if extra is not None:
        targets.append(extra[0])
        cells.append(extra[1])
    table = fiber_table(targets, cells, B)
    look = table.lookup()
    if len(look) != len(ev["fibers"]):
        return False
    best = -1.0
    for row in ev["fibers"]:
        fn = table.nodes[look[tuple(row["key"])]]
        D, _ = set_diameter(G.csr, fn, start=-1, limit=float(row["diameter"]) * (1 + 1e-9) + 1e-12)
        if not _same(D, row["diameter"]):
            return False
        best = max(best, float(D))
    return _same(best, cert.value)


# -- lattice classes ------------------------------------------------------------


@dataclass
class ClassRow:
    key: tuple[int, ...]
    lo: np.ndarray  # per relevance coordinate, min over fiber nodes
    hi: np.ndarray
    diameter: float
    witnesses: tuple[int, int]
    size: int


@dataclass(eq=False)
class ClassTable:
    """Fiber diameters of one representative per lattice class, per pair ``i``.

    ``relevance`` holds the per-node coordinates on which the ball condition
    is tested (the ``R^{n-1}`` coordinates for level sets, ``tau`` for
    blow-ups); the remaining directions are translation-invariant.
    """

    kind: str
    params: dict
    graph: MetricGraph
    t: np.ndarray
    tau: np.ndarray
    geometry: SimplexGeometry
    relevance: np.ndarray
    lipschitz: float
    rows: dict[int, list[ClassRow]]
    d: int
    eps: float
    rim: np.ndarray
    index: EuclideanIndex | None = None
    cells: dict = field(default_factory=dict, repr=False)
    targets: dict = field(default_factory=dict, repr=False)
    verified: dict = field(default_factory=dict, repr=False)

    @property
    def max_diameter(self) -> float:
        return max(r.diameter for rs in self.rows.values() for r in rs)

    @property
    def fingerprint(self) -> str:
        return params_hash(self.params)


def _central_reps(K, verts: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = K.keys[verts][:, list(axes)]
    ok = np.all((k >= 0) & (k < K.key_scale), axis=1)
    return verts[ok]


def _rim_mask(points: np.ndarray, axes: Sequence[int], lo: float, hi: float, eps: float) -> np.ndarray:
    pad = 1e-9 * eps
    m = np.zeros(len(points), bool)
    for a in axes:
        m |= (points[:, a] <= lo + pad) | (points[:, a] >= hi - pad)
    return m


def _measure_classes(table, rep_mask_fn, G, relevance, rim, radius, index, bound="diameter"):
    rows = []
    for key, fn in zip(table.keys, table.nodes):
        if not rep_mask_fn(key):
            continue
        if bound == "diameter":
            fd = fiber_diameter(G, fn, radius, forbidden=rim, index=index)
            value, wit = fd.value, fd.witnesses
        else:
            ecc, c, far = fiber_radius(G, fn, forbidden=rim, guess=radius)
            value, wit = 2.0 * ecc, (c, far)
        rel = relevance[fn]
        rows.append(ClassRow(tuple(int(v) for v in key), rel.min(axis=0), rel.max(axis=0), value, wit, len(fn)))
    return rows


def level_set_class_table(
    M: LevelSetManifold, *, margin: int = 2, subdivision: int = 0, radius: float | None = None
) -> ClassTable:
    """Class table for the level set of ``M``'s construction (same ``n``, ``eps``, shift).

    A window of ``1 + 2 * margin`` cells per torus axis is triangulated and
    cut with the level value of ``M``; representatives are the ``Z_i``
    vertices in the central cell.
    """
    A0 = M.ambient
    n, eps = A0.n, A0.eps
    A = build_ambient(n, eps, window=(-margin, margin + 1))
    W = extract_level_set(A, shift=M.shift)
    K = A.complex
    G = build_metric_graph(W.complex, subdivision)
    ids, w = W.node_barycentrics(G)
    t, cells = join_cells(ids, w, A.join.pair_of_vertex, n)
    tau = A.geometry.point(t)
    axes = list(range(n))
    rim = _rim_mask(G.points, axes, -margin * eps, (margin + 1) * eps, eps)
    relevance = G.points[:, n:]
    R0 = 1.6 * eps if radius is None else radius
    index = EuclideanIndex.for_graph(G)
    rows: dict[int, list[ClassRow]] = {}
    targets, cellmap = {}, {}
    for i in range(1, n + 1):
        Zi = TargetComplex.graph(A.join.skeleta[i - 1], A.join.skeleton_vertices[i - 1], name=f"Z_{i}")
        ok = t[:, i - 1] > 0
        table = fiber_table([Zi], [cells[i - 1]], np.flatnonzero(ok))
        reps = set(_central_reps(K, A.join.skeleton_vertices[i - 1], axes).tolist())
        rows[i] = _measure_classes(table, lambda k: int(k[0]) in reps, G, relevance, rim, R0, index)
        targets[i], cellmap[i] = [Zi], [cells[i - 1]]
    params = {
        "kind": "level-set",
        "n": n,
        "eps": eps,
        "margin": margin,
        "subdivision": subdivision,
        "shift": [float(v) for v in M.shift],
        "bound": "diameter",
    }
    return ClassTable(
        "level-set", params, G, t, tau, A.geometry, relevance, 1.0, rows, n - 1, eps, rim, index, cellmap, targets
    )


def segment_target(inradius: float, spacing: float) -> tuple[TargetComplex, np.ndarray]:
    """Uniform path triangulation of ``[-inradius, inradius]``; returns (target, vertex values)."""
    m = int(math.ceil(2 * inradius / spacing - 1e-9))
    vals = -inradius + 2 * inradius * np.arange(m + 1) / m
    return TargetComplex.path(m + 1, name="aux-segment"), vals


def _segment_cells(values: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, float).reshape(-1)
    j = np.clip(np.searchsorted(values, x, side="right") - 1, 0, len(values) - 2)
    on_lo = np.isclose(x, values[j], rtol=0, atol=1e-12)
    on_hi = np.isclose(x, values[j + 1], rtol=0, atol=1e-12)
    out = np.stack([j, j + 1], axis=1)
    out[on_lo] = np.stack([j[on_lo], np.full(on_lo.sum(), -1)], axis=1)
    out[on_hi] = np.stack([j[on_hi] + 1, np.full(on_hi.sum(), -1)], axis=1)
    return out


def blowup_class_table(
    eps: float,
    *,
    level: int = 2,
    k: int = 1,
    margin: int = 2,
    period_cells: int | None = None,
    spacing: float | None = None,
    target_spacing: float | None = None,
    radius: float | None = None,
    bound: str = "radius",
    ball_radius: float = 1.0,
) -> ClassTable:
    """Class table for the blow-up of the periodic Kuhn lattice of dimension
    ``2^level * k - 1`` with a one-dimensional join target (``n = 2``).

    The map is ``x -> (pi_i(x), cell of tau(x))`` into ``Z_i x Y`` with ``Y``
    a uniform subdivision of the target segment.  ``bound="radius"`` records
    ``2 * ecc(center)`` per class (one search per class) instead of the exact
    diameter.

    Only target vertices a ball of radius ``ball_radius`` can reach after the
    pair selection are tabulated: the selected ``i`` has ``tau(center)`` at
    distance ``>= height / n`` from the dual facet, and ``tau`` is
    1-Lipschitz.
    """
    if bound not in ("diameter", "radius"):
        raise ValueError("bound must be 'diameter' or 'radius'")
    dim = 2**level * k - 1
    if period_cells is not None:
        # the blown-up torus is itself the space: no rim, exact fibers
        if period_cells < 3:
            raise AssignmentError("a periodic base needs at least 3 cells per axis")
        base = make_periodic(
            barycentric_subdivide_and_color(kuhn_triangulate(dim, period_cells, eps)), "all", min_period=0.0
        )
    else:
        base = barycentric_subdivide_and_color(kuhn_triangulate(dim, [2 * margin + 1] * dim, eps, [-margin] * dim))
    h = eps if spacing is None else spacing
    S = build_blowup_space(base, level, k, level_spacing=h)
    J = S.join
    if J.n != 2:
        raise AssignmentError("class tables for blow-ups need a one-dimensional join target")
    G = S.metric
    B = S.base_metric
    a, b = B.carrier_edges[:, 0], B.carrier_edges[:, 1]
    s = B.carrier_params
    ids = np.stack([a, b], axis=1)
    w = np.stack([1.0 - s, s], axis=1)
    t, cells = join_cells(ids, w, J.pair_of_vertex, 2)
    tau = S.node_tau
    Y, yv = segment_target(J.geometry.inradius, 2 * h if target_spacing is None else target_spacing)
    ycell = _segment_cells(yv, tau[:, 0])
    axes = list(range(dim))
    if period_cells is not None:
        rim, index = None, None
    else:
        rim = _rim_mask(G.points, axes, -margin * eps, (margin + 1) * eps, eps)
        index = EuclideanIndex.for_graph(G)
    R0 = 2.0 * eps if radius is None else radius
    rows, targets, cellmap = {}, {}, {}
    for i in (1, 2):
        Zi = TargetComplex.graph(J.skeleta[i - 1], J.skeleton_vertices[i - 1], name=f"Z_{i}")
        ok = t[:, i - 1] > 0
        table = fiber_table([Zi, Y], [cells[i - 1], ycell], np.flatnonzero(ok))
        reps = set(_central_reps(base, J.skeleton_vertices[i - 1], axes).tolist())
        floor = J.geometry.height / J.n - ball_radius - (yv[1] - yv[0]) - 1e-9
        reach = set(np.flatnonzero(J.geometry.facet_distances(yv[:, None])[:, i - 1] >= floor).tolist())
        rows[i] = _measure_classes(
            table, lambda kk: int(kk[0]) in reps and int(kk[1]) in reach, G, tau, rim, R0, index, bound
        )
        targets[i], cellmap[i] = [Zi, Y], [cells[i - 1], ycell]
    params = {
        "kind": "blowup",
        "eps": eps,
        "level": level,
        "k": k,
        "margin": margin,
        "period_cells": period_cells,
        "spacing": h,
        "target_spacing": float(yv[1] - yv[0]),
        "bound": bound,
        "ball_radius": ball_radius,
        "Y": yv.tolist(),
    }
    return ClassTable("blowup", params, G, t, tau, J.geometry, tau, 1.0, rows, 2, eps, rim, index, cellmap, targets)


def _relevant(table: ClassTable, i: int, c_rel: np.ndarray, radius: float) -> list[ClassRow]:
    """Classes whose fiber can meet the ball: every node of the ball has its
    relevance coordinates within ``lipschitz * radius`` of the center's."""
    r = table.lipschitz * radius
    out = []
    for row in table.rows[i]:
        if table.kind == "blowup":
            # the Y-vertex key must be within one target cell of the tau-range
            yv = np.asarray(table.params["Y"])
            val = yv[row.key[1]]
            h = table.params["target_spacing"]
            if abs(val - c_rel[0]) <= r + h + 1e-12:
                out.append(row)
        else:
            gap = np.maximum(0.0, np.maximum(row.lo - c_rel, c_rel - row.hi))
            if float(np.sqrt((gap**2).sum())) <= r + 1e-12:
                out.append(row)
    return out


def _dual_clear(table: ClassTable, i: int, c_rel: np.ndarray, radius: float) -> float:
    """Smallest ``t_i`` over window nodes whose relevance coordinates are
    within reach of the ball (a superset of the ball up to translation)."""
    r = table.lipschitz * radius
    near = np.sqrt(((table.relevance - c_rel[None, :]) ** 2).sum(axis=1)) <= r + 1e-12
    if not np.any(near):
        return math.inf
    return float(table.t[near, i - 1].min())


def class_local_width(
    table: ClassTable,
    centers: np.ndarray,
    center_tau: np.ndarray,
    radius: float = 1.0,
    *,
    space: str = "",
) -> LocalWidthReport:
    """Certify balls from a class table.

    ``centers`` are relevance coordinates of the centers (``R^{n-1}`` part for
    level sets, ``tau`` for blow-ups), ``center_tau`` their join-map values.
    """
    centers = np.atleast_2d(np.asarray(centers, float))
    center_tau = np.atleast_2d(np.asarray(center_tau, float))
    certs, reasons, cs = [], [], []
    for c_rel, c_tau in zip(centers, center_tau):
        cs.append([float(v) for v in c_rel])
        i, dist = select_pair(table.geometry, c_tau)
        tmin = _dual_clear(table, i, c_rel, radius)
        if not tmin > 0:
            certs.append(None)
            reasons.append(f"pair {i}: the region reachable from the ball meets Z_{i} dual (min t={tmin:g})")
            continue
        rel = _relevant(table, i, c_rel, radius)
        if not rel:
            certs.append(None)
            reasons.append("no fiber class meets the ball")
            continue
        top = max(rel, key=lambda r: r.diameter)
        ev = {
            "mode": "lattice-classes",
            "table": table.params,
            "table_hash": table.fingerprint,
            "center": [float(v) for v in c_rel],
            "center_tau": [float(v) for v in c_tau],
            "radius": radius,
            "i": i,
            "dual_distance": dist,
            "min_t_i": tmin,
            "classes": [[list(r.key), r.diameter, list(r.witnesses)] for r in rel],
            "C": top.diameter / table.eps,
        }
        certs.append(
            WidthCertificate(
                "upper",
                table.d,
                top.diameter,
                "lattice-classes",
                ev,
                space=f"{space}:ball({','.join(f'{v:.6g}' for v in c_rel)};{radius:g})",
                fixture_hash=table.fingerprint,
            )
        )
        reasons.append("")
    return LocalWidthReport(table.d, radius, table.eps, cs, certs, reasons)


@register_verifier("lattice-classes")
def _verify_classes(cert: WidthCertificate, table: ClassTable) -> bool:
    """Re-derive relevance, fiber membership and every listed diameter.

    Each diameter is recomputed on the neighbourhood of radius ``D / 2``
    (slightly enlarged), where a value ``<= D`` is exact by the same
    argument as in :func:`fiber_diameter`; it must reproduce ``D`` exactly.
    """
    if table is None:
        raise CertificateError("lattice-class verification needs the class table")
    ev = cert.evidence
    if ev["table_hash"] != table.fingerprint:
        return False
    i = int(ev["i"])
    c_rel = np.asarray(ev["center"], float)
    i_chk, _ = select_pair(table.geometry, np.asarray(ev["center_tau"], float))
    if i_chk != i:
        return False
    if not _dual_clear(table, i, c_rel, float(ev["radius"])) > 0:
        return False
    rel = _relevant(table, i, c_rel, float(ev["radius"]))
    listed = {tuple(k): (D, wit) for k, D, wit in ev["classes"]}
    if set(listed) != {r.key for r in rel}:
        return False
    if i not in table.verified:
        table.verified[i] = ({}, fiber_table(table.targets[i], table.cells[i], np.flatnonzero(table.t[:, i - 1] > 0)))
    memo, fib = table.verified[i]
    look = fib.lookup()
    G = table.graph
    best = -1.0
    for key, (D, wit) in listed.items():
        fn = fib.nodes[look[key]]
        if key not in memo and table.params["bound"] == "radius":
            c, far = wit
            ecc, _, _ = fiber_radius(G, fn, center=c, forbidden=table.rim, guess=D / 2.0 * (1 + 1e-9))
            memo[key] = 2.0 * ecc
        if key not in memo:
            # fresh neighbourhood of radius D/2 and a different first source
            memo[key] = fiber_diameter(
                G,
                fn,
                radius=max(D / 2.0 * (1 + 1e-9), 1e-12),
                max_radius=D,
                forbidden=table.rim,
                index=table.index,
                start=-1,
            ).value
        if not _same(memo[key], D) or set(wit) - set(fn.tolist()):
            return False
        best = max(best, D)
    return best == cert.value


def local_width_report(space, centers, radius: float = 1.0, **kw) -> LocalWidthReport:
    """Dispatch on the space type.

    ``LevelSetManifold``: ``centers`` are points of ``M`` (full coordinates);
    a class table is built (or passed as ``table=``).  ``ClassTable``:
    ``centers`` as in :func:`class_local_width` with ``center_tau=``.
    """
    if isinstance(space, LevelSetManifold):
        table = kw.pop("table", None) or level_set_class_table(space, **kw)
        pts = np.atleast_2d(np.asarray(centers, float))
        n = space.n
        c_rel = pts[:, n:]
        c_tau = 2.0 * (c_rel - space.shift[None, :])  # tau = 2 (p - shift) on M
        return class_local_width(table, c_rel, c_tau, radius, space=kw.get("name", "level-set"))
    if isinstance(space, ClassTable):
        return class_local_width(space, centers, kw["center_tau"], radius, space=kw.get("name", space.kind))
    raise TypeError(f"unsupported space type {type(space).__name__}")
