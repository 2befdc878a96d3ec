"""Small surface fixtures: polycube boundaries, flat tori and cylinders."""
from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from .complex import ColoredComplex, barycentric_subdivide_and_color, kuhn_triangulate, make_periodic

__all__ = [
    "polycube_surface",
    "cube_sphere",
    "genus2_surface",
    "polycube_torus",
    "flat_torus",
    "flat_cylinder",
]

_AXES = np.eye(3, dtype=np.int64)


def polycube_surface(voxels: Iterable[Sequence[int]], resolution: int = 1, scale: float = 1.0) -> ColoredComplex:
    """Boundary of a union of unit voxels, each boundary square cut into a
    ``resolution x resolution`` grid and every grid square into 4 triangles
    around its center.

    Vertices are identified by integer keys on a grid of step
    ``1 / (2 * resolution)``; the surface is a closed 2-manifold whenever no
    two voxels meet along an edge or a corner only.
    """
    vox = {tuple(int(c) for c in v) for v in voxels}
    if not vox:
        raise ValueError("need at least one voxel")
    m = int(resolution)
    if m < 1:
        raise ValueError("resolution must be positive")
    squares = []  # (origin key, axis u, axis v) at grid step 2m per unit
    for v in sorted(vox):
        for ax in range(3):
            for side in (0, 1):
                nb = list(v)
                nb[ax] += 1 if side else -1
                if tuple(nb) in vox:
                    continue
                u, w = [a for a in range(3) if a != ax]
                base = np.array(v, dtype=np.int64) * 2 * m
                base[ax] += 2 * m * side
                for i, j in itertools.product(range(m), repeat=2):
                    squares.append(base + 2 * i * _AXES[u] + 2 * j * _AXES[w])
                    squares[-1] = (squares[-1], u, w)
    tris = []
    for origin, u, w in squares:
        c = origin + _AXES[u] + _AXES[w]
        p00 = origin
        p10 = origin + 2 * _AXES[u]
        p11 = origin + 2 * _AXES[u] + 2 * _AXES[w]
        p01 = origin + 2 * _AXES[w]
        for a, b in ((p00, p10), (p10, p11), (p11, p01), (p01, p00)):
            tris.append((a, b, c))
    keys = np.array([p for t in tris for p in t], dtype=np.int64)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    top = inv.reshape(-1, 3)
    coords = uniq * (scale / (2 * m))
    return ColoredComplex(coords=coords, top=top, mesh_scale=scale / m, keys=uniq, key_scale=2 * m)


def cube_sphere(resolution: int = 2, scale: float = 1.0) -> ColoredComplex:
    return polycube_surface([(0, 0, 0)], resolution, scale)


def genus2_surface(resolution: int = 1, scale: float = 1.0) -> ColoredComplex:
    """A 5 x 3 x 1 slab of voxels with two unit holes."""
    vox = [(x, y, 0) for x in range(5) for y in range(3) if not (y == 1 and x in (1, 3))]
    return polycube_surface(vox, resolution, scale)


def polycube_torus(resolution: int = 1, scale: float = 1.0) -> ColoredComplex:
    vox = [(x, y, 0) for x in range(3) for y in range(3) if (x, y) != (1, 1)]
    return polycube_surface(vox, resolution, scale)


def flat_torus(cells: int = 8, eps: float = 0.5) -> ColoredComplex:
    """Periodic 2-dimensional rainbow complex; period ``cells * eps`` per axis."""
    K = barycentric_subdivide_and_color(kuhn_triangulate(2, cells, eps))
    return make_periodic(K, "all", min_period=min(4.0, cells * eps))


def flat_cylinder(circ_cells: int, length_cells: int, eps: float) -> ColoredComplex:
    """Cylinder periodic along axis 0 (circumference ``circ_cells * eps``)."""
    K = barycentric_subdivide_and_color(kuhn_triangulate(2, (circ_cells, length_cells), eps))
    return make_periodic(K, [0], min_period=min(4.0, circ_cells * eps))
