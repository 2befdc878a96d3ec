"""Lower bounds from mod-2 degrees: planar winding and torus projection."""
from __future__ import annotations

import math
from dataclasses import replace
from typing import Sequence

import numpy as np

from ..complex import ColoredComplex
from ..construct import LevelSetManifold, RegularityError
from ..homology import ChainComplexZ2, ChainVector
from ..metric import MetricGraph
from .certificate import CertificateError, WidthCertificate, array_hash, register_verifier

__all__ = [
    "WindingError",
    "mod2_winding",
    "winding_directions",
    "chain_boundary_segments",
    "winding_lower_certificate",
    "projection_degree_certificate",
    "incircle",
]


class WindingError(ValueError):
    pass


def _segments(boundary) -> np.ndarray:
    b = np.asarray(boundary, float)
    if b.ndim == 3:
        if b.shape[1:] != (2, 2):
            raise WindingError("segments must have shape (m, 2, 2)")
        return b
    if b.ndim != 2 or b.shape[1] != 2 or len(b) < 2:
        raise WindingError("polyline must have shape (m, 2)")
    if not np.array_equal(b[0], b[-1]):
        b = np.vstack([b, b[:1]])
    return np.stack([b[:-1], b[1:]], axis=1)


def _point_segment_distance(q: np.ndarray, seg: np.ndarray) -> np.ndarray:
    a, b = seg[:, 0], seg[:, 1]
    ab = b - a
    L2 = (ab**2).sum(axis=1)
    t = np.where(L2 > 0, ((q - a) * ab).sum(axis=1) / np.where(L2 > 0, L2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    p = a + t[:, None] * ab
    return np.sqrt(((p - q) ** 2).sum(axis=1))


def winding_directions(k: int = 8) -> np.ndarray:
    ang = 2 * np.pi * (np.arange(k) + 0.5 / k) / k + 0.1234
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def mod2_winding(boundary, q, direction=(1.0, 0.0), tol: float = 1e-12) -> int:
    """Parity of the crossings of the ray ``q + s * direction`` (s > 0) with a
    closed polyline, or with a mod-2 cycle given as segments ``(m, 2, 2)``.

    Crossings use a half-open rule in coordinates where the ray is the
    positive x-axis, so rays through vertices are counted consistently.
    """
    seg = _segments(boundary)
    q = np.asarray(q, float).reshape(2)
    if len(seg) and _point_segment_distance(q, seg).min() <= tol:
        raise WindingError("point lies on the boundary")
    u = np.asarray(direction, float)
    nrm = math.hypot(*u)
    if nrm == 0:
        raise WindingError("zero ray direction")
    u = u / nrm
    R = np.array([[u[0], u[1]], [-u[1], u[0]]])
    p = (seg - q) @ R.T
    ya, yb = p[:, 0, 1], p[:, 1, 1]
    xa, xb = p[:, 0, 0], p[:, 1, 0]
    cross = (ya > 0) != (yb > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = xa + (0 - ya) * (xb - xa) / (yb - ya)
    hits = cross & (x > 0)
    return int(hits.sum() % 2)


def incircle(a, b, c) -> tuple[np.ndarray, float]:
    """Incenter and inradius of a triangle."""
    a, b, c = (np.asarray(v, float) for v in (a, b, c))
    la, lb, lc = np.linalg.norm(b - c), np.linalg.norm(c - a), np.linalg.norm(a - b)
    per = la + lb + lc
    center = (la * a + lb * b + lc * c) / per
    s = per / 2
    area = abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) / 2
    return center, area / s


def chain_boundary_segments(K: ColoredComplex, D: ChainVector, f: np.ndarray):
    """Edges of ``boundary(D)`` and their images under the vertex map ``f``."""
    C = ChainComplexZ2(K)
    bd = C.boundary(D)
    E = K.simplices(1)[list(bd.support)] if bd.support else np.zeros((0, 2), np.int64)
    return E, np.asarray(f, float)[E]


def _lipschitz_ratio(G: MetricGraph, f: np.ndarray) -> float:
    e = G.edges
    if len(e) == 0:
        return 0.0
    df = np.linalg.norm(f[e[:, 0]] - f[e[:, 1]], axis=1)
    return float((df / G.weights).max())


def winding_lower_certificate(
    f: np.ndarray,
    K: ColoredComplex,
    D: ChainVector,
    center,
    radius: float,
    L: float,
    *,
    rho: float = math.inf,
    G: MetricGraph | None = None,
    space: str = "",
) -> WidthCertificate | None:
    """Lower bound ``UW_1(|D|) >= radius / (2 L)`` from a mod-2 degree.

    ``f`` maps the vertices of ``K`` to the plane (extended linearly).  If
    ``f(boundary D)`` stays outside the open disk ``O(center, radius)`` and
    winds around ``center`` an odd number of times, ``f`` has odd degree over
    ``O``; with ``f`` ``L``-Lipschitz on ``G``'s edges (checked when ``G`` is
    given) the bound follows.  ``rho`` is the convexity radius of the target
    (infinite for the plane) and is recorded with the evidence.
    Returns ``None`` when the winding is even or the boundary touches ``O``.
    """
    if not radius > 0 or not L > 0:
        raise WindingError("radius and L must be positive")
    f = np.asarray(f, float)
    center = np.asarray(center, float)
    E, seg = chain_boundary_segments(K, D, f)
    if len(seg) == 0:
        return None
    clearance = float(_point_segment_distance(center, seg).min())
    if not clearance >= radius:
        return None
    parities = [mod2_winding(seg, center, u) for u in winding_directions(8)]
    if len(set(parities)) != 1:
        raise WindingError("winding parity depends on the ray direction")
    if parities[0] != 1:
        return None
    lip = _lipschitz_ratio(G, f) if G is not None else None
    if lip is not None and lip > L * (1 + 1e-12):
        raise WindingError(f"f is not {L:g}-Lipschitz on the sampled edges (ratio {lip:.6g})")
    radius, L = float(radius), float(L)
    value = radius / (2.0 * L)
    verts = np.unique(E)
    ev = {
        "center": center.tolist(),
        "radius": float(radius),
        "L": float(L),
        "rho": float(rho),
        "boundary_edges": E.tolist(),
        "images": {int(v): f[v].tolist() for v in verts},
        "clearance": clearance,
        "parities": parities,
        "lipschitz_ratio": lip,
        "n_triangles": len(D),
    }
    return WidthCertificate("lower", 1, value, "planar-winding", ev, space=space, fixture_hash=array_hash(K.top))


@register_verifier("planar-winding")
def _verify_winding(cert: WidthCertificate, context=None) -> bool:
    """Recheck from the evidence alone: the boundary is a mod-2 cycle, it
    avoids the disk, the parity is odd for 8 rays, and the value formula."""
    ev = cert.evidence
    E = np.asarray(ev["boundary_edges"], np.int64).reshape(-1, 2)
    _, counts = np.unique(E, return_counts=True)
    if np.any(counts % 2):
        return False
    img = {int(k): np.asarray(v, float) for k, v in ev["images"].items()}
    seg = np.array([[img[int(a)], img[int(b)]] for a, b in E])
    c = np.asarray(ev["center"], float)
    r, L = float(ev["radius"]), float(ev["L"])
    if _point_segment_distance(c, seg).min() < r:
        return False
    if any(mod2_winding(seg, c, u) != 1 for u in winding_directions(8)):
        return False
    if ev.get("lipschitz_ratio") is not None and ev["lipschitz_ratio"] > L * (1 + 1e-12):
        return False
    return abs(cert.value - r / (2 * L)) <= 1e-15 * max(1.0, cert.value)


# -- torus projection ---------------------------------------------------------


def projection_degree_certificate(
    M: LevelSetManifold,
    rho: float | None = None,
    q: Sequence[float] | None = None,
    *,
    seed: int = 0,
    max_tries: int = 20,
    space: str = "",
) -> WidthCertificate | None:
    """``UW_{n-1}(M) >= rho`` when the projection ``M -> T^n`` has odd degree.

    The projection is 1-Lipschitz; a generic point of the torus is sampled
    (resampled if it hits a projected cell boundary) and its preimages are
    counted.  ``rho`` defaults to the torus convexity radius ``period / 4``.
    Returns ``None`` for an empty ``M`` or an even count.
    """
    A = M.ambient
    if A.period is None:
        raise CertificateError("projection degree needs a periodic ambient space")
    if len(M.complex.top) == 0:
        return None
    rho = A.period / 4.0 if rho is None else float(rho)
    rng = np.random.default_rng(seed)
    pts = [np.asarray(q, float)] if q is not None else []
    pts += [rng.uniform(0, A.period, size=A.n) for _ in range(max_tries)]
    for p in pts:
        try:
            count = M.projection_preimages(p)
        except RegularityError:
            continue
        break
    else:
        raise RegularityError("no generic sample point found")
    if count % 2 == 0:
        return None
    ev = {
        "q": [float(v) for v in p],
        "count": int(count),
        "rho": rho,
        "period": A.period,
        "tile": A.tile,
        "cover_degree": A.cover_degree,
        "lipschitz": 1.0,
    }
    return WidthCertificate(
        "lower",
        A.n - 1,
        rho,
        "projection-degree",
        ev,
        space=space,
        fixture_hash=array_hash(M.complex.top, M.complex.coords),
    )


@register_verifier("projection-degree")
def _verify_projection(cert: WidthCertificate, M: LevelSetManifold) -> bool:
    """Recount at the recorded point and at a second generic point; both
    counts must be odd (the degree does not depend on the point)."""
    if M is None:
        raise CertificateError("projection-degree verification needs the manifold")
    ev = cert.evidence
    if M.projection_preimages(np.asarray(ev["q"], float)) != ev["count"] or ev["count"] % 2 == 0:
        return False
    rng = np.random.default_rng(12345)
    for _ in range(20):
        try:
            other = M.projection_preimages(rng.uniform(0, M.ambient.period, size=M.n))
        except RegularityError:
            continue
        return other % 2 == 1 and cert.value == ev["rho"] and cert.d == M.n - 1
    return False


def doubled(M: LevelSetManifold, offset: float | None = None) -> LevelSetManifold:
    """Two parallel copies of ``M`` (offset along the last axis); a test
    fixture whose projection has even degree."""
    K = M.complex
    off = (M.ambient.eps * 0.37) if offset is None else offset
    shifted = K.coords.copy()
    shifted[:, -1] += off
    K2 = replace(
        K,
        coords=np.vstack([K.coords, shifted]),
        top=np.vstack([K.top, K.top + K.n_vertices]),
        colors=None,
        keys=None,
        _cache={},
    )
    return replace(M, complex=K2, _cache={})
