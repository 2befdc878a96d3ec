"""Command-line interface.

Subcommands: triangulate, join, construct, blowup, estimate, certify, export,
report.  Options may come from a TOML file (``--config``); flags given on the
command line override it.  Exit codes: 0 verified, 1 certificate failure,
2 usage error, 3 build failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable

EXIT_OK, EXIT_CERT, EXIT_USAGE, EXIT_BUILD = 0, 1, 2, 3
DEFAULT_SEED = 0
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

log = logging.getLogger("urywidth")


class UsageError(Exception):
    pass


class BuildError(Exception):
    pass


# -- parser -------------------------------------------------------------------


def _common(suppress: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="TOML file with option values")
    p.add_argument("--seed", type=int, default=d(None), help="sampling seed (mandatory in config files)")
    p.add_argument("--out-dir", default=d("."), help="directory for outputs")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def _space_args(p: argparse.ArgumentParser, d, default_space: str) -> None:
    p.add_argument(
        "--space",
        default=d(default_space),
        choices=["level-set", "sphere", "genus2", "torus", "flat-torus", "cylinder", "mesh", "blowup"],
    )
    p.add_argument("--mesh", default=d(None), help="mesh file for --space mesh")
    p.add_argument("--n", type=int, default=d(2))
    p.add_argument("--eps", type=float, default=d(None))
    p.add_argument("--period", type=float, default=d(4.0))
    p.add_argument("--tile-cells", type=int, default=d(None))
    p.add_argument("--resolution", type=int, default=d(4))
    p.add_argument("--scale", type=float, default=d(1.0))
    p.add_argument("--cells", type=int, default=d(8))
    p.add_argument("--l", dest="level", type=int, default=d(2))
    p.add_argument("--k", type=int, default=d(1))
    p.add_argument("--period-cells", type=int, default=d(4))


def build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    """``suppress=True`` drops every default, so parsing reveals which options
    were given explicitly (used to layer flags over config values)."""
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = _common(suppress)
    parser = argparse.ArgumentParser(prog="urywidth", description="Urysohn-width constructions and certificates")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("triangulate", parents=[common], help="rainbow lattice complex")
    p.add_argument("--dim", type=int, default=d(None))
    p.add_argument("--eps", type=float, default=d(None))
    p.add_argument("--cells", type=int, default=d(None), help="cells per axis (default: 8)")
    p.add_argument("--periodic", default=d("none"), help="all, none, or comma-separated axes")
    p.add_argument("--min-period", type=float, default=d(0.0))
    p.add_argument("--format", choices=["off", "ply"], default=d("ply"))

    p = sub.add_parser("join", parents=[common], help="join structure, skeleta and tau samples")
    p.add_argument("--dim", type=int, default=d(None))
    p.add_argument("--eps", type=float, default=d(None))
    p.add_argument("--cells", type=int, default=d(None))
    p.add_argument("--periodic", default=d("none"))
    p.add_argument("--min-period", type=float, default=d(0.0))
    p.add_argument("--samples", type=int, default=d(1000))

    p = sub.add_parser("construct", parents=[common], help="level-set manifold or blow-up space")
    p.add_argument("what", choices=["level-set", "blowup"])
    _construct_args(p, d)

    p = sub.add_parser("blowup", parents=[common], help="alias of 'construct blowup'")
    _construct_args(p, d)

    for name in ("estimate", "certify"):
        p = sub.add_parser(name, parents=[common], help=f"{name} width bounds")
        p.add_argument(
            "kind",
            choices=["local-width", "projection-degree", "reeb", "winding", "lebesgue", "pipeline", "fiber-map"],
        )
        _space_args(p, d, "level-set")
        p.add_argument("--balls", type=int, default=d(20))
        p.add_argument("--radius", type=float, default=d(1.0))
        p.add_argument("--d", dest="width_dim", type=int, default=d(None))
        p.add_argument("--center", default=d("auto"), help="'auto' or a node index")
        p.add_argument("--dr", type=float, default=d(None))
        p.add_argument("--budget", type=float, default=d(1.0 / 15.0))
        p.add_argument("--rho", type=float, default=d(None))
        p.add_argument("--instance", choices=["triangle", "annulus"], default=d("triangle"))
        p.add_argument("--margin", type=int, default=d(4))

    p = sub.add_parser("export", parents=[common], help="convert meshes or write fixtures")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", default=d(None), help="mesh to convert")
    src.add_argument("--fixture", default=d(None), choices=["sphere", "genus2", "torus", "flat-torus", "cylinder"])
    p.add_argument("--output", default=d(None), help="target file (.off or .ply)")
    p.add_argument("--resolution", type=int, default=d(4))
    p.add_argument("--scale", type=float, default=d(1.0))
    p.add_argument("--cells", type=int, default=d(8))
    p.add_argument("--eps", type=float, default=d(0.5))

    p = sub.add_parser("report", parents=[common], help="consistency report over certificate files")
    p.add_argument("certificates", nargs="*", default=d([]))
    return parser


def _construct_args(p: argparse.ArgumentParser, d) -> None:
    p.add_argument("--n", type=int, default=d(2))
    p.add_argument("--eps", type=float, default=d(None))
    p.add_argument("--period", type=float, default=d(4.0))
    p.add_argument("--tile-cells", type=int, default=d(None))
    p.add_argument("--l", dest="level", type=int, default=d(2))
    p.add_argument("--k", type=int, default=d(1))
    p.add_argument("--dim", type=int, default=d(None), help="base dimension (must be 2^l k - 1)")
    p.add_argument("--base", choices=["cube", "ball", "sphere", "torus"], default=d("cube"))
    p.add_argument("--format", choices=["off", "ply"], default=d("ply"))


# -- config layering ----------------------------------------------------------


def _load_config(path: str) -> dict:
    try:
        import tomllib as tomli
    except ImportError:  # Python < 3.11
        import tomli

    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError as err:
        raise UsageError(f"config file not found: {path}") from err
    except tomli.TOMLDecodeError as err:
        raise UsageError(f"invalid TOML in {path}: {err}") from err


def _config_values(cfg: dict, command: str, sub: str | None) -> dict:
    """Top-level scalars, then ``[command]``, then ``[command.sub]``."""
    out = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    sec = cfg.get(command, {})
    if isinstance(sec, dict):
        out.update({k: v for k, v in sec.items() if not isinstance(v, dict)})
        if sub and isinstance(sec.get(sub), dict):
            out.update(sec[sub])
    return {k.replace("-", "_"): v for k, v in out.items()}


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    explicit = vars(build_parser(suppress=True).parse_args(argv))
    if args.config:
        cfg = _load_config(args.config)
        sub = getattr(args, "kind", None) or getattr(args, "what", None)
        values = _config_values(cfg, args.command, sub)
        if "seed" not in values and "seed" not in explicit:
            raise UsageError("config files must set 'seed'")
        alias = {"l": "level", "d": "width_dim"}
        for key, val in values.items():
            key = alias.get(key, key)
            if key in ("command", "kind", "what", "config"):
                continue
            if not hasattr(args, key):
                raise UsageError(f"unknown option {key!r} in {args.config}")
            if key not in explicit:
                setattr(args, key, val)
    if args.seed is None:
        args.seed = DEFAULT_SEED
        print(f"seed={DEFAULT_SEED} (default)", file=sys.stderr)
    return args


# -- helpers ------------------------------------------------------------------


def _require(args, *names: str) -> None:
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


def _positive(name: str, v) -> None:
    if v is None or not v > 0 or (isinstance(v, float) and not math.isfinite(v)):
        raise UsageError(f"--{name} must be positive (got {v})")


def _axes(text: str, dim: int) -> list[int]:
    if text == "all":
        return list(range(dim))
    if text in ("none", ""):
        return []
    try:
        axes = sorted({int(a) for a in text.split(",")})
    except ValueError as err:
        raise UsageError(f"--periodic must be all, none or a comma-separated axis list (got {text!r})") from err
    if any(a < 0 or a >= dim for a in axes):
        raise UsageError(f"--periodic axes must lie in 0..{dim - 1}")
    return axes


class Output:
    """Deterministic writer: sorted-key JSON, no timestamps."""

    def __init__(self, directory: str):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.written.append(p)
        return p

    def json(self, name: str, obj: Any) -> Path:
        from .width.certificate import _jsonable

        p = self.path(name)
        p.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n")
        return p

    def text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text)
        return p


def _lattice_complex(args):
    from .complex import barycentric_subdivide_and_color, kuhn_triangulate, make_periodic

    _require(args, "dim", "eps")
    if args.dim < 1:
        raise UsageError(f"--dim must be at least 1 (got {args.dim})")
    if args.dim > 5:
        raise UsageError("--dim above 5 is not supported at desk scale")
    _positive("eps", args.eps)
    cells = 8 if args.cells is None else args.cells
    if cells < 1:
        raise UsageError("--cells must be positive")
    axes = _axes(args.periodic, args.dim)
    if axes and cells < 3:
        raise UsageError("periodic axes need at least 3 cells")
    K = barycentric_subdivide_and_color(kuhn_triangulate(args.dim, cells, args.eps))
    if axes:
        K = make_periodic(K, axes, min_period=args.min_period)
    return K


# -- commands -----------------------------------------------------------------


def cmd_triangulate(args, out: Output) -> int:
    from .complex import shape_report
    from .meshio import write_mesh

    K = _lattice_complex(args)
    rep = shape_report(K)
    summary = {
        "dim": K.dim,
        "eps": K.mesh_scale,
        "periods": list(K.period_lengths),
        "n_vertices": K.n_vertices,
        "f_vector": K.f_vector(),
        "rainbow_fraction": K.rainbow_fraction(),
        "c_n": rep.max_distortion,
        **rep.to_dict(),
    }
    write_mesh(out.path(f"complex.{args.format}"), K, {"c_n": rep.max_distortion})
    out.json("shape_report.json", summary)
    print(json.dumps({"rainbow_fraction": summary["rainbow_fraction"], "c_n": summary["c_n"]}, sort_keys=True))
    return EXIT_OK


def cmd_join(args, out: Output) -> int:
    import numpy as np

    from .join import build_join, check_preimages, face_agreement, join_weights
    from .meshio import full_subcomplex, write_off, write_rows_csv

    K = _lattice_complex(args)
    if (K.dim + 1) % 2:
        raise UsageError(f"a join structure needs an odd dimension (2n - 1), got {K.dim}")
    J = build_join(K)
    for i in range(1, J.n + 1):
        write_off(out.path(f"Z{i}.off"), full_subcomplex(K, J.in_skeleton(i)))
        write_off(out.path(f"Z{i}_dual.off"), full_subcomplex(K, ~J.in_skeleton(i)))
    rng = np.random.default_rng(args.seed)
    rows = rng.integers(len(K.top), size=args.samples)
    lam = rng.dirichlet(np.ones(K.dim + 1), size=args.samples)
    x = (lam[:, :, None] * K.unwrap(K.coords[K.top[rows]])).sum(axis=1)
    t, _, _ = join_weights(J, x, K.top[rows])
    write_rows_csv(
        out.path("tau.csv"),
        [f"x{a}" for a in range(K.ambient_dim)] + [f"t{i}" for i in range(1, J.n + 1)],
        [list(map(float, a)) + list(map(float, b)) for a, b in zip(x, t)],
    )
    summary = {
        "n": J.n,
        "partition_of_unity_error": float(np.abs(t.sum(axis=1) - 1).max()),
        "face_agreement": face_agreement(J, samples=3, max_faces=2000, seed=args.seed),
        "preimages_ok": check_preimages(J),
    }
    out.json("join_report.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_construct(args, out: Output) -> int:
    what = getattr(args, "what", "blowup")
    if what == "level-set":
        return _construct_level_set(args, out)
    return _construct_blowup(args, out)


def _construct_level_set(args, out: Output) -> int:
    from .construct import build_ambient, extract_level_set
    from .meshio import write_mesh

    _require(args, "eps")
    _positive("eps", args.eps)
    if args.n < 2:
        raise UsageError("level sets need n >= 2")
    if args.n > 3:
        raise UsageError("n > 3 is beyond desk scale")
    A = build_ambient(args.n, args.eps, args.period, tile_cells=args.tile_cells)
    M = extract_level_set(A)
    meta = M.metadata()
    meta["is_closed"] = M.is_closed()
    write_mesh(out.path(f"level_set.{args.format}"), M.complex, {"level_set": meta})
    out.json("level_set_metadata.json", meta)
    print(json.dumps({"f_vector": meta["f_vector"], "closed_fraction": meta["closed_fraction"]}, sort_keys=True))
    return EXIT_OK


def _construct_blowup(args, out: Output) -> int:
    from .construct import base_space, build_blowup_space
    from .meshio import write_edge_list

    if args.level < 0 or args.k < 1:
        raise UsageError("need --l >= 0 and --k >= 1")
    expected = 2**args.level * args.k - 1
    if args.dim is not None and args.dim != expected:
        raise UsageError(
            f"dimension {args.dim} is not of the form 2^l * k - 1; with l={args.level}, k={args.k} the base must have dimension {expected}"
        )
    if expected > 3:
        raise UsageError(f"base dimension {expected} is beyond desk scale (at most 3)")
    eps = 0.25 if args.eps is None else args.eps
    _positive("eps", eps)
    base = base_space(args.base, expected, eps, period=args.period)
    B = build_blowup_space(base, args.level, args.k)
    write_edge_list(out.path("blowup_edges.csv"), B.metric.edges, B.metric.weights)
    write_edge_list(out.path("base_edges.csv"), B.base_metric.edges, B.base_metric.weights)
    meta = {
        "level": args.level,
        "k": args.k,
        "dim": expected,
        "eps": eps,
        "base": args.base,
        "n_nodes": B.metric.n_nodes,
        "n_edges": B.metric.n_edges,
        "monotone_edges": bool((B.metric.weights >= B.base_metric.weights).all()),
    }
    out.json("blowup_metadata.json", meta)
    print(json.dumps(meta, sort_keys=True))
    return EXIT_OK


# -- spaces for estimate / certify ----------------------------------------------


def _surface(args):
    """(complex, convexity radius or None, label) for surface spaces."""
    from . import fixtures
    from .meshio import read_mesh

    s = args.space
    if s == "sphere":
        return fixtures.cube_sphere(args.resolution, args.scale), None, f"sphere-r{args.resolution}-s{args.scale}"
    if s == "genus2":
        return fixtures.genus2_surface(args.resolution, args.scale), None, f"genus2-r{args.resolution}-s{args.scale}"
    if s == "torus":
        return fixtures.polycube_torus(args.resolution, args.scale), None, f"torus-r{args.resolution}-s{args.scale}"
    if s == "flat-torus":
        eps = 0.5 if args.eps is None else args.eps
        K = fixtures.flat_torus(args.cells, eps)
        return K, args.cells * eps / 4.0, f"flat-torus-{args.cells}-{eps}"
    if s == "cylinder":
        eps = 0.125 if args.eps is None else args.eps
        return fixtures.flat_cylinder(args.cells, 4 * args.cells, eps), None, f"cylinder-{args.cells}-{eps}"
    if s == "mesh":
        _require(args, "mesh")
        return read_mesh(args.mesh), None, Path(args.mesh).name
    if s == "level-set":
        # global bounds need the whole period; a tile quotient only if asked for
        M = _level_set(args, default_eps=1.0, default_tile=None)
        return M.complex, None, _level_name(args, quotient=True)
    raise UsageError(f"--space {s} is not a surface")


def _level_name(args, quotient: bool = False) -> str:
    # local quantities and the degree are the same on a tile and on M
    name = f"level-set-n{args.n}-eps{args.eps}-P{args.period}"
    return f"{name}-tile{args.tile_cells}" if quotient and args.tile_cells is not None else name


def _level_set(args, default_eps: float = 0.05, default_tile: int | None = 4):
    from .construct import build_ambient, extract_level_set

    if args.eps is None:
        args.eps = default_eps
    _positive("eps", args.eps)
    if args.n != 2:
        raise UsageError("certificates on level sets are provided for n = 2")
    if args.tile_cells is None:
        args.tile_cells = default_tile
    tile = args.tile_cells
    return extract_level_set(build_ambient(args.n, args.eps, args.period, tile_cells=tile))


def _center(args, n_nodes: int) -> int:
    if args.center == "auto":
        return 0
    try:
        c = int(args.center)
    except ValueError as err:
        raise UsageError("--center must be 'auto' or a node index") from err
    if not 0 <= c < n_nodes:
        raise UsageError(f"--center must lie in 0..{n_nodes - 1}")
    return c


def _finish(out: Output, name: str, certs: list, contexts: list, extra: dict | None = None) -> int:
    """Verify every certificate, then write them; exit 1 if any fails."""
    from .width.certificate import verify_certificate

    ok = [verify_certificate(c, ctx) for c, ctx in zip(certs, contexts)]
    payload = {"certificates": [c.to_dict() for c in certs], "verified": ok}
    if extra:
        payload.update(extra)
    if not certs:
        log.error("no certificate was produced")
        out.json(f"{name}.json", payload)
        return EXIT_CERT
    out.json(f"{name}.json", payload)
    for c, good in zip(certs, ok):
        print(f"{c.kind} UW_{c.d} {'<=' if c.kind == 'upper' else '>='} {c.value:.6g} [{c.method}] verified={good}")
    return EXIT_OK if all(ok) else EXIT_CERT


def cmd_certify(args, out: Output) -> int:
    kind = args.kind
    handler: dict[str, Callable] = {
        "local-width": _c_local_width,
        "projection-degree": _c_projection,
        "reeb": _c_reeb,
        "winding": _c_winding,
        "lebesgue": _c_lebesgue,
        "pipeline": _c_pipeline,
        "fiber-map": _c_fiber_map,
    }
    return handler[kind](args, out)


def _c_local_width(args, out: Output) -> int:
    import numpy as np

    if args.balls < 1:
        raise UsageError("--balls must be positive")
    _positive("radius", args.radius)
    rng = np.random.default_rng(args.seed)
    if args.space == "blowup":
        from .width.local import blowup_class_table, class_local_width

        if (args.level, args.k) != (2, 1):
            raise UsageError("blow-up local width is provided for --l 2 --k 1")
        eps = 0.25 if args.eps is None else args.eps
        d_expected = args.k + args.level - 1
        if args.width_dim is not None and args.width_dim != d_expected:
            raise UsageError(f"blow-up balls are certified at width dimension {d_expected}")
        T = blowup_class_table(eps, period_cells=args.period_cells, spacing=eps, target_spacing=eps)
        ct = rng.uniform(-2, 2, size=(args.balls, 1))
        rep = class_local_width(T, ct, ct, args.radius, space=f"blowup-l{args.level}-k{args.k}-eps{eps}")
        context = T
    else:
        from .width.local import level_set_class_table, local_width_report

        if args.space != "level-set":
            raise UsageError("local-width supports --space level-set or blowup")
        M = _level_set(args)
        if args.width_dim is not None and args.width_dim != M.n - 1:
            raise UsageError(f"level-set balls are certified at width dimension {M.n - 1}")
        T = level_set_class_table(M, margin=args.margin)
        K = M.complex
        ti = rng.integers(len(K.top), size=args.balls)
        lam = rng.dirichlet(np.ones(K.dim + 1), size=args.balls)
        pts = (lam[:, :, None] * K.unwrap(K.coords[K.top[ti]])).sum(axis=1)
        rep = local_width_report(M, pts, args.radius, table=T, name=_level_name(args))
        context = T
    certs = [c for c in rep.certificates if c is not None]
    code = _finish(out, "local_width", certs, [context] * len(certs), {"report": rep.to_dict()})
    print(f"certified {rep.certified_fraction:.0%} of {len(rep.certificates)} balls, C = {rep.constant:.4g}")
    return code


def _c_projection(args, out: Output) -> int:
    from .width.winding import projection_degree_certificate

    if args.space != "level-set":
        raise UsageError("projection-degree needs --space level-set")
    M = _level_set(args)
    cert = projection_degree_certificate(M, args.rho, seed=args.seed, space=_level_name(args))
    extra = {"metadata": M.metadata()}
    return _finish(out, "projection_degree", [] if cert is None else [cert], [M], extra)


def _c_reeb(args, out: Output) -> int:
    from .metric import build_metric_graph
    from .width.reeb import uw1_upper_distance_spheres
    from .width.svg import reeb_svg

    K, _, name = _surface(args)
    G = build_metric_graph(K)
    R, cert = uw1_upper_distance_spheres(G, _center(args, G.n_nodes), args.dr, exact=2000, space=name)
    if args.command == "estimate":
        from .meshio import write_rows_csv

        rows = R.to_csv_rows()
        write_rows_csv(out.path("reeb.csv"), rows[0], rows[1:])
        out.text("reeb.dot", R.to_dot())
        out.text("reeb.svg", reeb_svg(R))
    return _finish(out, "reeb", [cert], [G])


def _c_fiber_map(args, out: Output) -> int:
    """Constant map of a surface to a point: the whole-space diameter."""
    import numpy as np

    from .metric import build_metric_graph
    from .width.fibers import TargetComplex, uw_upper_from_map

    K, _, name = _surface(args)
    G = build_metric_graph(K)
    target = TargetComplex.points([0])
    cells = np.zeros((G.n_nodes, 1), dtype=np.int64)
    cert = uw_upper_from_map(G, cells, target, space=name)
    return _finish(out, "fiber_map", [cert], [(G, cells, target)])


def winding_instance(kind: str):
    """(K, D, f, center, radius, L) of a planar instance with ``f`` the identity.

    ``triangle``: a triangulated copy of the triangle with vertices (r, 0),
    (r, 1), (r - 1/2, 1/2), enlarged by 1 % about its incenter, and its
    inscribed disk with L = sqrt(2).  ``annulus``: the annulus 1 <= |x| <= 3,
    the disk of radius 0.3 at (2, 0), L = 1.
    """
    import numpy as np

    from .complex import ColoredComplex
    from .homology import ChainVector
    from .width.winding import incircle

    if kind == "triangle":
        r = 1.0
        tri = np.array([[r, 0.0], [r, 1.0], [r - 0.5, 0.5]])
        c, rad = incircle(*tri)
        big = c + 1.01 * (tri - c)
        m = 8
        pts, idx = [], {}
        for i in range(m + 1):
            for j in range(m + 1 - i):
                idx[i, j] = len(pts)
                pts.append(big[0] + i / m * (big[1] - big[0]) + j / m * (big[2] - big[0]))
        top = []
        for i in range(m):
            for j in range(m - i):
                top.append((idx[i, j], idx[i + 1, j], idx[i, j + 1]))
                if j < m - i - 1:
                    top.append((idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]))
        K = ColoredComplex(coords=np.array(pts), top=np.array(top))
        return K, ChainVector(2, tuple(range(len(K.top)))), K.coords, c, rad, math.sqrt(2.0)
    if kind == "annulus":
        m, rings = 48, 8
        radii = np.linspace(1.0, 3.0, rings + 1)
        ang = 2 * np.pi * np.arange(m) / m + 0.5 * np.pi / m
        pts = np.array([[rr * math.cos(a), rr * math.sin(a)] for rr in radii for a in ang])
        top = []
        for k in range(rings):
            for i in range(m):
                a, b = k * m + i, k * m + (i + 1) % m
                c_, d_ = a + m, b + m
                top += [(a, b, c_), (b, d_, c_)]
        K = ColoredComplex(coords=pts, top=np.array(top))
        return K, ChainVector(2, tuple(range(len(K.top)))), K.coords, np.array([2.0, 0.0]), 0.3, 1.0
    raise UsageError(f"unknown winding instance {kind!r}")


def _c_winding(args, out: Output) -> int:
    from .metric import build_metric_graph
    from .width.winding import winding_lower_certificate

    K, D, f, c, rad, L = winding_instance(args.instance)
    cert = winding_lower_certificate(f, K, D, c, rad, L, G=build_metric_graph(K), space=f"planar-{args.instance}")
    return _finish(out, "winding", [] if cert is None else [cert], [None])


def _c_lebesgue(args, out: Output) -> int:
    import itertools

    import numpy as np

    from .complex import kuhn_triangulate
    from .width.lebesgue import lebesgue_check

    K = kuhn_triangulate(2, 2, 1.0)
    found = 0
    total = 0
    for bits in itertools.product((0, 1), repeat=K.n_vertices):
        total += 1
        found += lebesgue_check(K, np.array(bits)).found
    summary = {"grid": "3x3", "labelings": total, "witnessed": found}
    out.json("lebesgue.json", summary)
    print(f"Lebesgue witness in {found}/{total} labelings")
    return EXIT_OK if found == total else EXIT_CERT


def _c_pipeline(args, out: Output) -> int:
    from .width.pipeline import theorem12_pipeline

    if args.space == "level-set":
        raise UsageError("the pipeline needs a surface fixture (sphere, genus2, torus, flat-torus, mesh)")
    K, rho, name = _surface(args)
    _positive("budget", args.budget)
    rho = args.rho if args.rho is not None else rho
    res = theorem12_pipeline(K, args.budget, p=_center(args, K.n_vertices), dr=args.dr, rho=rho, space=name)
    out.json("pipeline.json", res.to_dict())
    print(f"pipeline status: {res.status}" + (f" ({res.message})" if res.message else ""))
    if res.contradiction is not None and args.command == "estimate":
        out.text("planar_image.svg", res.contradiction.planar_svg(K))
    if res.status == "out-of-hypothesis":
        return EXIT_OK
    if res.status == "reeb":
        from .metric import build_metric_graph

        return _finish(out, "pipeline_certificate", [res.certificate], [build_metric_graph(K)])
    if res.status == "contradiction":
        return _finish(out, "pipeline_certificate", [res.certificate], [None])
    return EXIT_CERT


def cmd_export(args, out: Output) -> int:
    from . import fixtures
    from .meshio import read_mesh, write_mesh

    _require(args, "output")
    if args.input:
        K = read_mesh(args.input)
    elif args.fixture:
        K = {
            "sphere": lambda: fixtures.cube_sphere(args.resolution, args.scale),
            "genus2": lambda: fixtures.genus2_surface(args.resolution, args.scale),
            "torus": lambda: fixtures.polycube_torus(args.resolution, args.scale),
            "flat-torus": lambda: fixtures.flat_torus(args.cells, args.eps),
            "cylinder": lambda: fixtures.flat_cylinder(args.cells, 4 * args.cells, args.eps),
        }[args.fixture]()
    else:
        raise UsageError("give --input or --fixture")
    target = Path(args.output)
    if not target.is_absolute():
        target = out.dir / target
    write_mesh(target, K)
    print(f"wrote {target} ({K.n_vertices} vertices, {len(K.top)} simplices)")
    return EXIT_OK


def cmd_report(args, out: Output) -> int:
    from .width.certificate import WidthCertificate, check_consistency

    certs = []
    for path in args.certificates:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"cannot read {path}: {err}") from err
        is_cert = isinstance(data, dict) and data.get("kind") in ("upper", "lower") and "method" in data
        if isinstance(data, dict) and "certificates" not in data and not is_cert:
            print(f"skipping {path}: no certificates", file=sys.stderr)
            continue
        items = data.get("certificates", [data]) if isinstance(data, dict) else data
        try:
            certs += [WidthCertificate.from_dict(c) for c in items]
        except (KeyError, TypeError, ValueError, AttributeError) as err:
            raise UsageError(f"{path} is not a certificate file ({err!r})") from err
    bad = check_consistency(certs)
    rows = [
        {"space": c.space, "d": c.d, "kind": c.kind, "value": c.value, "method": c.method} for c in certs
    ]
    out.json("consistency_report.json", {"certificates": rows, "violations": [list(b) for b in bad]})
    for r in rows:
        print(f"{r['space']:<32} d={r['d']} {r['kind']:<5} {r['value']:.6g} [{r['method']}]")
    print(f"{len(bad)} consistency violations")
    return EXIT_OK if not bad else EXIT_CERT


COMMANDS = {
    "triangulate": cmd_triangulate,
    "join": cmd_join,
    "construct": cmd_construct,
    "blowup": cmd_construct,
    "estimate": cmd_certify,
    "certify": cmd_certify,
    "export": cmd_export,
    "report": cmd_report,
}


def _apply_threads() -> None:
    raw = os.environ.get("URYWIDTH_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError as err:
        raise UsageError(f"URYWIDTH_THREADS must be a positive integer (got {raw!r})") from err
    if n < 1:
        raise UsageError(f"URYWIDTH_THREADS must be a positive integer (got {raw!r})")
    for var in THREAD_VARS:
        os.environ[var] = str(n)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        _apply_threads()
        args = parse_args(argv)
    except UsageError as err:
        print(f"urywidth: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as err:  # argparse usage errors and --help
        return int(err.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        out = Output(args.out_dir)
        return COMMANDS[args.command](args, out)
    except UsageError as err:
        print(f"urywidth: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # noqa: BLE001 - every other failure is a build failure
        print(f"urywidth: build failure: {type(err).__name__}: {err}", file=sys.stderr)
        if args.verbose:
            import traceback

            traceback.print_exc()
        return EXIT_BUILD


if __name__ == "__main__":
    sys.exit(main())
