"""Distance-sphere Reeb graphs and the resulting 1-width upper bound.

Nodes of the space are binned into shells ``floor((d(p, .) + offset) / dr)``;
the components of each shell (edges inside one shell) are the Reeb nodes and
mesh edges between consecutive shells give the Reeb edges.  Mapping every
node to its Reeb node is a map to a 1-complex, so the largest component
diameter bounds the 1-width from above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ..metric import MetricGraph, geodesic_distances
from .certificate import CertificateError, WidthCertificate, array_hash, register_verifier
from .fibers import REL_TOL, set_diameter

__all__ = [
    "ReebGraph",
    "build_reeb_graph",
    "uw1_upper_distance_spheres",
    "default_shell_step",
    "IRRATIONAL_OFFSET",
]

# fraction of dr used as the deterministic radius perturbation
IRRATIONAL_OFFSET = (math.sqrt(5.0) - 1.0) / 2.0 * 1e-3


def default_shell_step(G: MetricGraph) -> float:
    """Twice the longest edge (a stand-in for the largest simplex diameter)."""
    return 2.0 * float(G.weights.max())


@dataclass
class ReebGraph:
    """Shell components around ``center`` and their adjacency.

    ``label[v]`` is the Reeb node of graph node ``v``; Reeb node ``j`` sits in
    shell ``shell_of[j]``.  ``exact[j]`` is False when ``diameters[j]`` is the
    ``2 * eccentricity`` bound rather than the exact diameter.
    """

    center: int
    dr: float
    offset: float
    dist: np.ndarray
    label: np.ndarray
    shell_of: np.ndarray
    sizes: np.ndarray
    edges: np.ndarray
    diameters: np.ndarray
    witnesses: np.ndarray
    exact: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.shell_of)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.label == j)

    @property
    def max_node(self) -> int:
        return int(np.argmax(self.diameters))

    def to_csv_rows(self) -> list[list]:
        rows = [["node", "shell", "size", "diameter", "exact", "witness_a", "witness_b"]]
        for j in range(self.n_nodes):
            a, b = self.witnesses[j]
            rows.append([j, int(self.shell_of[j]), int(self.sizes[j]), repr(float(self.diameters[j])), bool(self.exact[j]), int(a), int(b)])
        return rows

    def to_dot(self) -> str:
        lines = ["graph reeb {"]
        for j in range(self.n_nodes):
            lines.append(f'  n{j} [label="{int(self.shell_of[j])}:{float(self.diameters[j]):.4g}"];')
        for a, b in self.edges.tolist():
            lines.append(f"  n{a} -- n{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _shell_index(dist: np.ndarray, dr: float, offset: float) -> np.ndarray:
    out = np.full(len(dist), -1, dtype=np.int64)
    ok = np.isfinite(dist)
    out[ok] = np.floor((dist[ok] + offset) / dr).astype(np.int64)
    return out


def _shell_components(G: MetricGraph, shell: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reeb labels (ordered by shell, then smallest node), shell per label,
    and the Reeb edge list."""
    e = G.edges
    same = shell[e[:, 0]] == shell[e[:, 1]]
    n = G.n_nodes
    A = sparse.coo_matrix((np.ones(int(same.sum())), (e[same, 0], e[same, 1])), shape=(n, n))
    _, comp = csgraph.connected_components(A, directed=False)
    _, first = np.unique(comp, return_index=True)
    order = np.lexsort((first, shell[first]))
    remap = np.empty(len(first), dtype=np.int64)
    remap[order] = np.arange(len(first))
    label = remap[comp]
    shell_of = shell[first[order]]
    la, lb = label[e[:, 0]], label[e[:, 1]]
    cross = la != lb
    pairs = np.sort(np.stack([la[cross], lb[cross]], axis=1), axis=1)
    pairs = np.unique(pairs, axis=0) if len(pairs) else np.zeros((0, 2), dtype=np.int64)
    return label, shell_of, pairs


def _component_bound(csr, nodes: np.ndarray, exact: bool, start: int = 0) -> tuple[float, tuple[int, int]]:
    if len(nodes) == 1:
        return 0.0, (int(nodes[0]), int(nodes[0]))
    if exact:
        val, (a, b) = set_diameter(csr, nodes, start=start)
        return val, (int(nodes[a]), int(nodes[b]))
    # diam <= 2 * ecc(s) for any member s
    s = int(nodes[start % len(nodes)])
    d = csgraph.dijkstra(csr, directed=True, indices=s)[nodes]
    j = int(np.argmax(d))
    return 2.0 * float(d[j]), (s, int(nodes[j]))


def build_reeb_graph(
    G: MetricGraph,
    center: int,
    dr: float | None = None,
    *,
    offset: float | None = None,
    exact: bool | int = True,
) -> ReebGraph:
    """Reeb graph of ``d(center, .)`` with shells of width ``dr``.

    ``exact=True`` measures every component's diameter exactly (pruned
    all-pairs); ``exact=False`` uses ``2 * ecc``; an integer uses exact
    diameters for components up to that many nodes.
    """
    if dr is None:
        dr = default_shell_step(G)
    wmax = float(G.weights.max()) if G.n_edges else 0.0
    if not dr >= wmax:
        raise CertificateError(f"shell width {dr:g} is below the longest edge {wmax:g}")
    if offset is None:
        offset = IRRATIONAL_OFFSET * dr
    if not 0 <= offset < dr:
        raise CertificateError("offset must lie in [0, dr)")
    dist = geodesic_distances(G, [center])[0]
    if not np.all(np.isfinite(dist)):
        raise CertificateError("space is disconnected")
    shell = _shell_index(dist, dr, offset)
    label, shell_of, pairs = _shell_components(G, shell)
    if len(pairs) and np.any(np.abs(shell_of[pairs[:, 0]] - shell_of[pairs[:, 1]]) > 1):
        raise CertificateError("an edge skips a shell")
    m = len(shell_of)
    sizes = np.bincount(label, minlength=m)
    order = np.argsort(label, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    diam = np.zeros(m)
    wit = np.zeros((m, 2), dtype=np.int64)
    ex = np.zeros(m, dtype=bool)
    csr = G.csr
    for j in range(m):
        nodes = order[bounds[j] : bounds[j + 1]]
        use_exact = exact if isinstance(exact, bool) else len(nodes) <= int(exact)
        diam[j], wit[j] = _component_bound(csr, nodes, use_exact)
        ex[j] = use_exact or len(nodes) == 1
    return ReebGraph(int(center), float(dr), float(offset), dist, label, shell_of, sizes, pairs, diam, wit, ex)


def uw1_upper_distance_spheres(
    G: MetricGraph,
    center: int,
    dr: float | None = None,
    *,
    offset: float | None = None,
    exact: bool | int = True,
    eps: float | None = None,
    space: str = "",
) -> tuple[ReebGraph, WidthCertificate]:
    """Reeb graph of the distance shells around ``center`` and the upper
    certificate ``UW_1 <= max component diameter``.

    The evidence logs a discretization slack of ``4 * eps`` (``eps`` defaults
    to the longest edge) for comparisons with continuum statements; the slack
    is not added to the value.
    """
    R = build_reeb_graph(G, center, dr, offset=offset, exact=exact)
    eps = float(G.weights.max()) if eps is None else float(eps)
    j = R.max_node
    ev = {
        "center": R.center,
        "dr": R.dr,
        "offset": R.offset,
        "n_reeb_nodes": R.n_nodes,
        "n_reeb_edges": len(R.edges),
        "label_hash": array_hash(R.label),
        "nodes": [
            [int(R.shell_of[k]), int(R.sizes[k]), float(R.diameters[k]), [int(v) for v in R.witnesses[k]], bool(R.exact[k])]
            for k in range(R.n_nodes)
        ],
        "max_node": j,
        "eps": eps,
        "slack": 4.0 * eps,
    }
    cert = WidthCertificate(
        "upper",
        1,
        float(R.diameters[j]),
        "distance-spheres",
        ev,
        space=space,
        fixture_hash=array_hash(G.edges, G.weights),
    )
    return R, cert


@register_verifier("distance-spheres")
def _verify_reeb(cert: WidthCertificate, G: MetricGraph) -> bool:
    """Rebuild shells and components independently of the recorded rows, then
    recheck each row: witnesses lie in the component at the recorded
    distance, exact rows match a second pruned run started elsewhere, and
    bound rows match ``2 * ecc`` of their recorded source."""
    if G is None:
        raise CertificateError("distance-spheres verification needs the graph")
    ev = cert.evidence
    if array_hash(G.edges, G.weights) != cert.fixture_hash:
        return False
    dist = csgraph.dijkstra(G.csr, directed=True, indices=int(ev["center"]))
    shell = _shell_index(dist, float(ev["dr"]), float(ev["offset"]))
    if np.any(shell < 0):
        return False
    label, shell_of, _ = _shell_components(G, shell)
    if array_hash(label) != ev["label_hash"] or len(shell_of) != len(ev["nodes"]):
        return False
    csr = G.csr
    sizes = np.bincount(label, minlength=len(shell_of))
    values = []
    for j, (sh, size, D, (a, b), exact) in enumerate(ev["nodes"]):
        D = float(D)
        if sh != shell_of[j] or size != sizes[j] or label[a] != j or label[b] != j:
            return False
        nodes = np.flatnonzero(label == j)
        if exact:
            if len(nodes) == 1:
                ok = D == 0.0
            else:
                d_ab = csgraph.dijkstra(csr, directed=True, indices=a)[b]
                again, _ = set_diameter(csr, nodes, start=-1)
                ok = abs(d_ab - D) <= REL_TOL * max(1.0, D) and abs(again - D) <= REL_TOL * max(1.0, D)
        else:
            d = csgraph.dijkstra(csr, directed=True, indices=a)[nodes]
            ok = abs(2.0 * float(d.max()) - D) <= REL_TOL * max(1.0, D)
        if not ok:
            return False
        values.append(D)
    return abs(max(values) - cert.value) <= REL_TOL * max(1.0, cert.value)
