"""ASCII OFF / PLY export of colored complexes with a JSON sidecar.

Floats are written with ``%.17g`` so files round-trip exactly and identical
inputs give byte-identical files.  PLY carries vertex colors as an integer
property ``color``; OFF has no vertex attributes, so colors (and everything
else needed to rebuild the complex) live in the sidecar.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .complex import ColoredComplex

__all__ = [
    "MeshFormatError",
    "write_off",
    "read_off",
    "write_ply",
    "read_ply",
    "write_sidecar",
    "read_sidecar",
    "sidecar_path",
    "write_mesh",
    "read_mesh",
    "write_edge_list",
    "read_edge_list",
    "write_rows_csv",
    "full_subcomplex",
]

_AXIS_NAMES = ("x", "y", "z")


class MeshFormatError(ValueError):
    pass


def _g(v: float) -> str:
    return "%.17g" % v


def _axis_names(D: int) -> list[str]:
    return [(_AXIS_NAMES[a] if a < 3 else f"x{a}") for a in range(D)]


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def _meta(K: ColoredComplex, extra: dict | None) -> dict:
    m = {
        "format_version": 1,
        "kind": K.kind,
        "dim": K.dim,
        "ambient_dim": K.ambient_dim,
        "eps": K.mesh_scale,
        "periods": [None if p is None else float(p) for p in K.period_lengths],
        "key_scale": K.key_scale,
        "n_vertices": K.n_vertices,
        "n_top": len(K.top),
    }
    if K.colors is not None:
        m["colors"] = [int(c) for c in K.colors]
    if K.keys is not None:
        m["keys"] = K.keys.tolist()
    if extra:
        m.update(extra)
    return m


def write_sidecar(path, K: ColoredComplex, extra: dict | None = None) -> Path:
    """JSON metadata next to a mesh file (``<mesh>.json``): eps, periods,
    realized constants passed in ``extra`` (e.g. ``c_n``), colors and keys."""
    out = sidecar_path(path)
    out.write_text(json.dumps(_meta(K, extra), sort_keys=True, indent=1) + "\n")
    return out


def read_sidecar(path) -> dict:
    p = sidecar_path(path)
    if not p.exists():
        return {}
    return json.loads(p.read_text())


def _complex_from(coords, top, meta: dict, colors=None) -> ColoredComplex:
    periods = tuple(meta.get("periods") or ()) or (None,) * coords.shape[1]
    if colors is None and "colors" in meta:
        colors = np.asarray(meta["colors"], dtype=np.int64)
    keys = np.asarray(meta["keys"], dtype=np.int64) if "keys" in meta else None
    return ColoredComplex(
        coords=coords,
        top=top,
        colors=colors,
        mesh_scale=float(meta.get("eps", 1.0)),
        period_lengths=periods,
        keys=keys,
        key_scale=int(meta.get("key_scale", 1)),
        kind=meta.get("kind", "generic"),
    )


def write_off(path, K: ColoredComplex, extra: dict | None = None, sidecar: bool = True) -> Path:
    """OFF (``nOFF`` when the ambient dimension is not 3); simplices of any
    dimension are written as faces."""
    path = Path(path)
    D = K.ambient_dim
    lines = ["OFF" if D == 3 else "nOFF"]
    if D != 3:
        lines.append(str(D))
    lines.append(f"{K.n_vertices} {len(K.top)} 0")
    lines += [" ".join(_g(v) for v in row) for row in K.coords]
    k = K.top.shape[1]
    lines += [f"{k} " + " ".join(str(int(v)) for v in row) for row in K.top]
    path.write_text("\n".join(lines) + "\n")
    if sidecar:
        write_sidecar(path, K, extra)
    return path


def _tokens(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.extend(line.split())
    return out


def read_off(path) -> ColoredComplex:
    path = Path(path)
    tok = _tokens(path.read_text())
    if not tok:
        raise MeshFormatError("empty OFF file")
    head, i = tok[0], 1
    if head == "OFF":
        D = 3
    elif head == "nOFF":
        D, i = int(tok[1]), 2
    else:
        raise MeshFormatError(f"not an OFF file (header {head!r})")
    try:
        nv, nf = int(tok[i]), int(tok[i + 1])
        i += 3
        coords = np.array(tok[i : i + nv * D], dtype=float).reshape(nv, D)
        i += nv * D
        faces = []
        for _ in range(nf):
            k = int(tok[i])
            faces.append([int(v) for v in tok[i + 1 : i + 1 + k]])
            i += 1 + k
    except (IndexError, ValueError) as err:
        raise MeshFormatError(f"truncated or malformed OFF file: {err}") from err
    if len({len(f) for f in faces}) > 1:
        raise MeshFormatError("mixed face sizes")
    top = np.array(faces, dtype=np.int64).reshape(nf, -1)
    return _complex_from(coords, top, read_sidecar(path))


def write_ply(path, K: ColoredComplex, extra: dict | None = None, sidecar: bool = True) -> Path:
    """ASCII PLY with an integer ``color`` vertex property when colored."""
    path = Path(path)
    names = _axis_names(K.ambient_dim)
    head = ["ply", "format ascii 1.0", "comment urywidth colored complex", f"element vertex {K.n_vertices}"]
    head += [f"property double {n}" for n in names]
    if K.colors is not None:
        head.append("property int color")
    head += [f"element face {len(K.top)}", "property list uchar int vertex_indices", "end_header"]
    body = []
    cols = K.colors
    for v, row in enumerate(K.coords):
        s = " ".join(_g(x) for x in row)
        body.append(s if cols is None else f"{s} {int(cols[v])}")
    k = K.top.shape[1]
    body += [f"{k} " + " ".join(str(int(v)) for v in row) for row in K.top]
    path.write_text("\n".join(head + body) + "\n")
    if sidecar:
        write_sidecar(path, K, extra)
    return path


def read_ply(path) -> ColoredComplex:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MeshFormatError("not a PLY file")
    if "format ascii" not in lines[1]:
        raise MeshFormatError("only ASCII PLY is supported")
    nv = nf = 0
    vprops: list[str] = []
    cur = None
    i = 2
    while i < len(lines) and lines[i].strip() != "end_header":
        parts = lines[i].split()
        if parts and parts[0] == "element":
            cur = parts[1]
            if cur == "vertex":
                nv = int(parts[2])
            elif cur == "face":
                nf = int(parts[2])
        elif parts and parts[0] == "property" and cur == "vertex":
            vprops.append(parts[-1])
        i += 1
    if i >= len(lines):
        raise MeshFormatError("missing end_header")
    data = lines[i + 1 :]
    if len(data) < nv + nf:
        raise MeshFormatError("truncated PLY body")
    has_color = "color" in vprops
    axes = [p for p in vprops if p != "color"]
    rows = [l.split() for l in data[:nv]]
    coords = np.array([[float(r[vprops.index(a)]) for a in axes] for r in rows], dtype=float).reshape(nv, len(axes))
    colors = np.array([int(r[vprops.index("color")]) for r in rows], dtype=np.int64) if has_color else None
    faces = [[int(v) for v in l.split()[1:]] for l in data[nv : nv + nf]]
    top = np.array(faces, dtype=np.int64).reshape(nf, -1)
    return _complex_from(coords, top, read_sidecar(path), colors)


def write_mesh(path, K: ColoredComplex, extra: dict | None = None) -> Path:
    suffix = Path(path).suffix.lower()
    if suffix == ".off":
        return write_off(path, K, extra)
    if suffix == ".ply":
        return write_ply(path, K, extra)
    raise MeshFormatError(f"unknown mesh format {suffix!r} (use .off or .ply)")


def read_mesh(path) -> ColoredComplex:
    suffix = Path(path).suffix.lower()
    if suffix == ".off":
        return read_off(path)
    if suffix == ".ply":
        return read_ply(path)
    raise MeshFormatError(f"unknown mesh format {suffix!r} (use .off or .ply)")


def full_subcomplex(K: ColoredComplex, vertex_mask: np.ndarray) -> ColoredComplex:
    """Largest-dimensional faces spanned by the masked vertices (reindexed),
    e.g. a skeleton ``Z_i`` or its dual."""
    mask = np.asarray(vertex_mask, bool)
    for k in range(K.dim, -1, -1):
        S = K.simplices(k)
        rows = S[np.all(mask[S], axis=1)]
        if len(rows):
            break
    else:
        raise MeshFormatError("empty subcomplex")
    used = np.unique(rows)
    pos = np.full(K.n_vertices, -1, dtype=np.int64)
    pos[used] = np.arange(len(used))
    return ColoredComplex(
        coords=K.coords[used],
        top=pos[rows],
        colors=None if K.colors is None else K.colors[used],
        mesh_scale=K.mesh_scale,
        period_lengths=K.period_lengths,
        keys=None if K.keys is None else K.keys[used],
        key_scale=K.key_scale,
        kind=f"{K.kind}-sub",
    )


def write_edge_list(path, edges: np.ndarray, weights: np.ndarray) -> Path:
    """CSV ``u,v,weight`` for weighted graphs (e.g. blown-up metrics)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["u", "v", "weight"])
        for (a, b), w in zip(np.asarray(edges).tolist(), np.asarray(weights, float).tolist()):
            wr.writerow([a, b, _g(w)])
    return path


def read_edge_list(path) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open() as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header != ["u", "v", "weight"]:
            raise MeshFormatError("edge list must have header u,v,weight")
        rows = list(rd)
    e = np.array([[int(r[0]), int(r[1])] for r in rows], dtype=np.int64).reshape(-1, 2)
    w = np.array([float(r[2]) for r in rows], dtype=float)
    return e, w


def write_rows_csv(path, header: Sequence[str], rows) -> Path:
    """CSV with floats in ``%.17g`` (for tau samples, distance tables, ...)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(list(header))
        for r in rows:
            wr.writerow([_g(v) if isinstance(v, float) and math.isfinite(v) else v for v in r])
    return path
