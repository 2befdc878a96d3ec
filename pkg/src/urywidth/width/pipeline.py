"""Small local width forces small global 1-width on a closed surface.

For a closed triangulated surface with first Z/2 Betti number ``beta`` the
pipeline measures the distance-sphere components around a point ``p``.
Either every component has diameter below ``beta + 1`` (and the Reeb map is
the global certificate), or a wide component yields, through a chain of
explicit objects (a curve in the shell, points along it, geodesics, loops, a
dependent family, a bounding 2-chain cut to a unit ball, and a planar map of
odd degree), a lower bound on the 1-width of part of a unit ball.  When that
bound exceeds the budget ``w`` the local hypothesis is refuted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.sparse import csgraph

from ..complex import ColoredComplex
from ..homology import (
    ChainComplexZ2,
    ChainVector,
    betti,
    bound_2chain,
    dependent_subset,
    _row_index,
    restrict_chain,
)
from ..metric import MetricGraph, build_metric_graph
from .certificate import WidthCertificate, verify_certificate
from .fibers import set_diameter
from .reeb import ReebGraph, default_shell_step, uw1_upper_distance_spheres
from .winding import (
    _point_segment_distance,
    chain_boundary_segments,
    incircle,
    mod2_winding,
    winding_directions,
    winding_lower_certificate,
)

__all__ = [
    "PipelineStageError",
    "Contradiction",
    "PipelineResult",
    "theorem12_pipeline",
    "shortest_path_tree",
    "tree_path",
    "BALL_OFFSET",
]

SQRT2 = math.sqrt(2.0)
# deterministic irrational perturbation of the unit radius
BALL_OFFSET = (math.sqrt(2.0) - 1.0) * 1e-4


class PipelineStageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def shortest_path_tree(csr, dist: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Predecessor array of a shortest-path tree; among tight predecessors
    the smallest node id wins (lexicographic tie-breaking)."""
    coo = csr.tocoo()
    u, v, w = coo.row, coo.col, coo.data
    scale = np.maximum(1.0, np.abs(dist[v]))
    tight = np.isfinite(dist[u]) & (np.abs(dist[u] + w - dist[v]) <= rtol * scale) & (dist[u] < dist[v])
    pred = np.full(len(dist), -1, dtype=np.int64)
    uu, vv = u[tight], v[tight]
    order = np.lexsort((-uu, vv))  # per v, the last write is the smallest u
    pred[vv[order]] = uu[order]
    return pred


def tree_path(pred: np.ndarray, root: int, target: int) -> list[int]:
    """Node path ``root -> target`` along ``pred``."""
    out = [int(target)]
    while out[-1] != root:
        nxt = int(pred[out[-1]])
        if nxt < 0 or len(out) > len(pred):
            raise PipelineStageError("geodesics", f"node {target} is not reachable from {root}")
        out.append(nxt)
    return out[::-1]


def _dijkstra(csr, source: int) -> np.ndarray:
    return csgraph.dijkstra(csr, directed=True, indices=int(source))


@dataclass
class Contradiction:
    """Every object of the wide-component branch, with the planar lower
    certificate on ``UW_1(D')`` (``D'`` lies in the unit ball at ``x_{i1}``)."""

    p: int
    reeb_node: int
    shell_radius: float
    x: int
    y: int
    gamma: list[int]
    xs: list[int]
    geodesics: list[list[int]]
    loops: list[ChainVector]
    subset: tuple[int, ...]
    D: ChainVector
    D_prime: ChainVector
    i1: int
    r: float
    ball_radius: float
    f: np.ndarray
    triangle: np.ndarray
    disk_center: np.ndarray
    disk_radius: float
    certificate: WidthCertificate
    budget: float
    verified: bool

    @property
    def exceeds_budget(self) -> bool:
        return self.verified and self.certificate.value > self.budget

    def planar_svg(self, K: ColoredComplex) -> str:
        """The image of ``D'`` under ``f`` with ``f(boundary D')``, the
        triangle and the certified disk."""
        from .svg import planar_image_svg

        verts = np.unique(K.simplices(2)[list(self.D_prime.support)])
        _, seg = chain_boundary_segments(K, self.D_prime, self.f)
        return planar_image_svg(
            self.f, verts, seg, self.triangle, (self.disk_center, self.disk_radius), title="planar image of D'"
        )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "reeb_node": self.reeb_node,
            "shell_radius": self.shell_radius,
            "x": self.x,
            "y": self.y,
            "gamma": self.gamma,
            "xs": self.xs,
            "geodesics": self.geodesics,
            "loops": [list(l.support) for l in self.loops],
            "subset": list(self.subset),
            "D": list(self.D.support),
            "D_prime": list(self.D_prime.support),
            "i1": self.i1,
            "r": self.r,
            "ball_radius": self.ball_radius,
            "triangle": self.triangle.tolist(),
            "disk_center": self.disk_center.tolist(),
            "disk_radius": self.disk_radius,
            "certificate": self.certificate.to_dict(),
            "budget": self.budget,
            "verified": self.verified,
            "exceeds_budget": self.exceeds_budget,
        }


@dataclass
class PipelineResult:
    """``status`` is one of ``reeb`` (global upper certificate below
    ``beta + 1``), ``contradiction`` (verified lower bound above the budget),
    ``out-of-hypothesis`` (budget gate) or ``inconclusive`` (a stage could
    not produce its object; ``failed_stage`` names it)."""

    status: str
    beta: int | None
    budget: float
    slack: float
    reeb: ReebGraph | None = None
    certificate: WidthCertificate | None = None
    contradiction: Contradiction | None = None
    audits: dict[str, Any] = field(default_factory=dict)
    failed_stage: str | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "beta": self.beta,
            "budget": self.budget,
            "slack": self.slack,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "contradiction": None if self.contradiction is None else self.contradiction.to_dict(),
            "audits": self.audits,
            "failed_stage": self.failed_stage,
            "message": self.message,
        }


def _is_closed_surface(K: ColoredComplex) -> bool:
    if K.dim != 2:
        return False
    C = ChainComplexZ2(K)
    cof = np.bincount(C.faces(2).ravel(), minlength=len(C.simplices(1)))
    return bool(np.all(cof == 2))


def _best_disk(seg: np.ndarray, tri: np.ndarray, grid: int = 48) -> tuple[np.ndarray, float]:
    """Center in the triangle maximizing the clearance from ``seg`` among
    points around which ``seg`` winds oddly (the incenter is tried first)."""
    c0, r0 = incircle(*tri)
    cands = [c0]
    a, b, c = tri
    for i in range(1, grid):
        for j in range(1, grid - i):
            s, t = i / grid, j / grid
            cands.append(a + s * (b - a) + t * (c - a))
    best, best_r = None, 0.0
    dirs = winding_directions(8)
    for q in cands:
        clear = float(_point_segment_distance(q, seg).min()) if len(seg) else 0.0
        if clear <= best_r:
            continue
        if mod2_winding(seg, q, dirs[0]) == 1:
            best, best_r = q, clear
        if best is not None and np.array_equal(best, c0) and best_r >= r0:
            return c0, float(r0)
    return best, float(best_r)


def theorem12_pipeline(
    K: ColoredComplex,
    w: float = 1.0 / 15.0,
    *,
    G: MetricGraph | None = None,
    p: int = 0,
    dr: float | None = None,
    rho: float | None = None,
    eps: float | None = None,
    exact: bool | int = True,
    space: str = "",
) -> PipelineResult:
    """Run the closed-surface pipeline with local width budget ``w``.

    ``G`` must have the vertices of ``K`` as its first nodes and the edges of
    ``K`` as edges (the default, ``build_metric_graph(K)``); chains are read
    off node paths.  ``rho`` is a known convexity radius of the surface: when
    ``min(1, rho) / 4 >= w`` unit balls cannot have 1-width below ``w`` and
    the run stops as out-of-hypothesis.  Stage failures inside the
    wide-component branch are returned as ``inconclusive`` with the stage
    name; invariant violations raise :class:`PipelineStageError`.
    """
    if not w > 0:
        raise PipelineStageError("budget", "budget must be positive")
    G = build_metric_graph(K) if G is None else G
    h = float(G.weights.max())
    eps = h if eps is None else float(eps)
    slack = 4.0 * eps
    audits: dict[str, Any] = {"eps": eps, "slack": slack, "max_edge": h}

    # -- budget gate
    if rho is not None:
        disk_width = min(1.0, float(rho)) / 4.0
        audits["budget"] = {"rho": float(rho), "flat_disk_width": disk_width}
        if disk_width >= w:
            return PipelineResult(
                "out-of-hypothesis",
                None,
                w,
                slack,
                audits=audits,
                message=f"unit balls contain flat disks of 1-width >= {disk_width:g} >= w = {w:g}",
            )

    # -- homology
    if G.n_vertices != K.n_vertices or G.n_nodes != K.n_vertices:
        raise PipelineStageError("homology", "graph nodes must be the complex vertices")
    if not _is_closed_surface(K):
        raise PipelineStageError("homology", "input is not a closed surface")
    C = ChainComplexZ2(K)
    beta = betti(C).betti[1]
    audits["homology"] = {"beta": beta}

    # -- shells
    dr = default_shell_step(G) if dr is None else float(dr)
    R, upper = uw1_upper_distance_spheres(G, p, dr, exact=exact, eps=eps, space=space)
    upper.evidence["beta"] = beta
    j = R.max_node
    audits["shells"] = {
        "dr": R.dr,
        "offset": R.offset,
        "n_reeb_nodes": R.n_nodes,
        "max_diameter": float(R.diameters[j]),
        "max_node": j,
        "exact": bool(R.exact[j]),
    }
    if R.diameters[j] < beta + 1:
        audits["shells"]["below_beta_plus_one"] = True
        return PipelineResult("reeb", beta, w, slack, reeb=R, certificate=upper, audits=audits)
    if not R.exact[j]:
        # a bound above beta + 1 does not exhibit a wide component; measure it
        nodes = R.members(j)
        val, (a, b) = set_diameter(G.csr, nodes)
        R.diameters[j], R.witnesses[j], R.exact[j] = val, (nodes[a], nodes[b]), True
        upper.evidence["nodes"][j][2:5] = [val, [int(nodes[a]), int(nodes[b])], True]
        upper.value = float(R.diameters.max())
        if val < beta + 1:
            j2 = R.max_node
            if R.diameters[j2] < beta + 1:
                return PipelineResult("reeb", beta, w, slack, reeb=R, certificate=upper, audits=audits)
            raise PipelineStageError("shells", "inexact component bounds remain above beta + 1")
    return _wide_branch(K, C, G, R, j, beta, w, slack, h, audits, space)


def _wide_branch(K, C, G, R: ReebGraph, j, beta, w, slack, h, audits, space) -> PipelineResult:
    csr = G.csr
    p = R.center
    dp = R.dist
    members = R.members(j)
    x, y = (int(v) for v in R.witnesses[j])
    shell_r = R.shell_of[j] * R.dr - R.offset

    # -- gamma: shortest path inside the component
    pos = np.full(G.n_nodes, -1, dtype=np.int64)
    pos[members] = np.arange(len(members))
    sub = csr[members][:, members]
    dsub = _dijkstra(sub, pos[x])
    if not np.isfinite(dsub[pos[y]]):
        raise PipelineStageError("gamma", "witnesses are not connected inside the shell")
    gamma = [int(members[v]) for v in tree_path(shortest_path_tree(sub, dsub), int(pos[x]), int(pos[y]))]
    if np.any(np.abs(R.label[gamma] - j) > 0):
        raise PipelineStageError("gamma", "curve leaves the shell component")

    # -- points x_k on gamma with d(x, x_k) >= k
    dx = _dijkstra(csr, x)
    along = dx[gamma]
    idx = [0]
    for k in range(1, beta + 1):
        hit = np.flatnonzero(along >= k)
        if len(hit) == 0:
            raise PipelineStageError("points", f"no point at distance {k} along the curve")
        idx.append(int(max(hit[0], idx[-1])))
    idx.append(len(gamma) - 1)
    xs = [gamma[i] for i in idx]
    dxx = csgraph.dijkstra(csr, directed=True, indices=xs)[:, xs]
    worst = min((dxx[a, b] - abs(a - b)) for a in range(len(xs)) for b in range(len(xs)))
    audits["points"] = {"xs": xs, "positions": idx, "min_excess": float(worst)}
    if worst < -slack:
        raise PipelineStageError("points", f"dist(x_i, x_j) >= |i-j| - slack violated by {-worst:g}")

    # -- geodesics from p (lexicographic tie-breaking)
    pred = shortest_path_tree(csr, dp)
    geos = [tree_path(pred, p, v) for v in xs]
    for g in geos:
        L = float(dp[g[-1]])
        walk = float(np.asarray(csr[g[:-1], g[1:]]).sum())
        if abs(walk - L) > 1e-9 * max(1.0, L):
            raise PipelineStageError("geodesics", "tree path is not a shortest path")
    audits["geodesics"] = {"tie_break": "smallest predecessor id", "lengths": [float(dp[v]) for v in xs]}

    # -- loops l_k = g_k + gamma[x_k .. x_{k+1}] + g_{k+1}
    loops = []
    for k in range(beta + 1):
        seg = gamma[idx[k] : idx[k + 1] + 1]
        walk = geos[k] + seg[1:] + geos[k + 1][::-1][1:]
        # a closed walk can repeat edges: reduce mod 2
        ch = _walk_chain(K, walk)
        if not C.boundary(ch).is_zero:
            raise PipelineStageError("loops", f"loop {k} is not a cycle")
        loops.append(ch)
    audits["loops"] = {"sizes": [len(l) for l in loops]}

    # -- dependent subset and bounding chain
    subset = dependent_subset(C, loops)
    if subset is None:
        raise PipelineStageError("dependent", f"{beta + 1} loops independent with beta = {beta}")
    total = ChainVector(1, ())
    for i in subset:
        total = total + loops[i]
    D = bound_2chain(C, total)
    if D is None:
        raise PipelineStageError("bounding", "dependent loops do not bound")
    audits["dependent"] = {"subset": list(subset), "D_size": len(D)}

    # -- cut to the unit ball around x_{i1}
    i1 = subset[0]
    xi = xs[i1]
    d1 = _dijkstra(csr, xi)
    ball_r = 1.0 + BALL_OFFSET
    Dp = restrict_chain(K, D, np.flatnonzero(d1 <= ball_r))
    bdD = set(C.boundary(D).support)
    E = C.simplices(1)
    extra = [e for e in C.boundary(Dp).support if e not in bdD]
    near = all(min(d1[E[e, 0]], d1[E[e, 1]]) >= ball_r - h for e in extra)
    audits["restrict"] = {
        "ball_radius": ball_r,
        "D_prime_size": len(Dp),
        "boundary_size": len(C.boundary(Dp)),
        "new_boundary_edges": len(extra),
        "support_contained": bool(near),
    }
    if not near:
        raise PipelineStageError("restrict", "boundary of D' is not contained in boundary(D) and the unit sphere")
    if len(Dp) == 0:
        return PipelineResult("inconclusive", beta, w, slack, reeb=R, audits=audits, failed_stage="restrict", message="D' is empty")

    # -- planar map f = (d(., p), d(., x_{i1}))
    f = np.stack([dp[: K.n_vertices], d1[: K.n_vertices]], axis=1)
    r = float(dp[xi])
    below = float((r - (f[:, 0] + f[:, 1])).max())
    audits["planar"] = {"r": r, "max_below_line": below}
    if below > 2 * audits["eps"]:
        raise PipelineStageError("planar", f"image dips {below:g} below the line through (r,0), (0,r)")
    tri = np.array([[r, 0.0], [r, 1.0], [r - 0.5, 0.5]])
    _, seg = chain_boundary_segments(K, Dp, f)
    center, radius = _best_disk(seg, tri)
    audits["disk"] = {"inradius": float(incircle(*tri)[1]), "radius": radius}
    if center is None or radius <= 0:
        return PipelineResult("inconclusive", beta, w, slack, reeb=R, audits=audits, failed_stage="winding", message="no disk with odd winding")
    cert = winding_lower_certificate(f, K, Dp, center, radius * (1 - 1e-9), SQRT2, G=G, space=space)
    if cert is None:
        return PipelineResult("inconclusive", beta, w, slack, reeb=R, audits=audits, failed_stage="winding", message="winding certificate rejected")
    cert.evidence["ball_center"] = int(xi)
    cert.evidence["ball_radius"] = ball_r
    ok = verify_certificate(cert)
    con = Contradiction(
        p, j, float(shell_r), x, y, gamma, xs, geos, loops, subset, D, Dp, i1, r, ball_r, f, tri,
        np.asarray(center, float), float(cert.evidence["radius"]), cert, w, ok,
    )
    audits["certificate"] = {"value": float(cert.value), "verified": ok, "budget": w}
    status = "contradiction" if con.exceeds_budget else "inconclusive"
    msg = "" if con.exceeds_budget else f"lower bound {cert.value:g} does not exceed the budget {w:g}"
    return PipelineResult(
        status, beta, w, slack, reeb=R, certificate=cert, contradiction=con, audits=audits,
        failed_stage=None if con.exceeds_budget else "certificate", message=msg,
    )


def _walk_chain(K: ColoredComplex, walk: list[int]) -> ChainVector:
    """Mod-2 edge chain of a closed walk (edges used twice cancel)."""
    v = np.asarray(walk, dtype=np.int64)
    rows = np.sort(np.stack([v[:-1], v[1:]], axis=1), axis=1)
    rows = rows[rows[:, 0] != rows[:, 1]]
    if len(rows) == 0:
        return ChainVector(1, ())
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    odd = uniq[counts % 2 == 1]
    if len(odd) == 0:
        return ChainVector(1, ())
    return ChainVector.of(1, _row_index(K.simplices(1), odd))
