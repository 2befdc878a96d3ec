"""Discrete Lebesgue check: a vertex labeling of a triangulated cube has a
fiber component meeting two opposite facets.

For a labeling into a ``d``-complex the fiber over the closed star of a
target vertex ``y`` is the full subcomplex on the vertices whose label spans
a simplex with ``y``.  An edge whose two labels do not span a target simplex
(a *crossing pair*: no continuous map can be simplicial there) joins the
fibers of both labels, since any continuous map must pass through both
stars along it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix, csgraph

from ..complex import ColoredComplex
from .fibers import TargetComplex

__all__ = ["LebesgueError", "LebesgueWitness", "LebesgueResult", "lebesgue_check", "cube_facets"]


class LebesgueError(ValueError):
    pass


@dataclass(frozen=True)
class LebesgueWitness:
    label: int
    component: tuple[int, ...]
    axis: int

    def to_dict(self) -> dict:
        return {"label": self.label, "component": list(self.component), "facets": [f"x{self.axis}=min", f"x{self.axis}=max"]}


@dataclass
class LebesgueResult:
    witnesses: list[LebesgueWitness]
    crossing_pairs: int

    @property
    def found(self) -> bool:
        return bool(self.witnesses)

    @property
    def witness(self) -> LebesgueWitness | None:
        return self.witnesses[0] if self.witnesses else None

    @property
    def violation(self) -> bool:
        # only reachable through an implementation bug
        return not self.witnesses


def cube_facets(K: ColoredComplex) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per axis, boolean masks of vertices on the min and max facets."""
    x = K.coords
    out = []
    for a in range(K.ambient_dim):
        lo, hi = x[:, a].min(), x[:, a].max()
        tol = 1e-9 * max(1.0, hi - lo)
        out.append((x[:, a] <= lo + tol, x[:, a] >= hi - tol))
    return out


def lebesgue_check(K: ColoredComplex, labels, target: TargetComplex | None = None) -> LebesgueResult:
    """All Lebesgue witnesses of a vertex labeling of the cube ``K``.

    ``target`` defaults to the 0-complex on the labels that occur.
    """
    labels = np.asarray(labels)
    if labels.shape != (K.n_vertices,):
        raise LebesgueError(f"labeling must give one label per vertex ({K.n_vertices})")
    if not np.issubdtype(labels.dtype, np.integer):
        raise LebesgueError("labels must be integers")
    if K.is_periodic or K.dim != K.ambient_dim:
        raise LebesgueError("labeling must live on a triangulated cube")
    if target is None:
        target = TargetComplex.points(np.unique(labels))
    if target.dim >= K.dim:
        raise LebesgueError(f"target dimension {target.dim} must be below the cube dimension {K.dim}")
    if not np.all(np.isin(labels, target.labels)):
        raise LebesgueError("label outside the target complex")
    E = K.simplices(1)
    la, lb = labels[E[:, 0]], labels[E[:, 1]]
    # spans-simplex test per edge
    spans = la == lb
    for j in np.flatnonzero(~spans):
        spans[j] = len(target.star_vertices([int(la[j]), int(lb[j])])) > 0
    facets = cube_facets(K)
    witnesses = []
    n = K.n_vertices
    for y in target.labels.tolist():
        star = set(target.star_vertices([y]).tolist())
        in_star = np.isin(labels, list(star))
        # crossing pairs pull the far endpoint in, but only through that edge
        touch = ~spans & ((la == y) | (lb == y))
        inside = in_star.copy()
        inside[E[touch, 0]] = True
        inside[E[touch, 1]] = True
        keep = (spans & in_star[E[:, 0]] & in_star[E[:, 1]]) | touch
        e = E[keep]
        A = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        _, comp = csgraph.connected_components(A, directed=False)
        for c in np.unique(comp[inside]):
            members = np.flatnonzero(inside & (comp == c))
            for a, (lo, hi) in enumerate(facets):
                if lo[members].any() and hi[members].any():
                    witnesses.append(LebesgueWitness(int(y), tuple(int(v) for v in members), a))
    return LebesgueResult(witnesses, int((~spans).sum()))
