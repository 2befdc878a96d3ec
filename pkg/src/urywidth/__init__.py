"""Desk-scale constructions and certified Urysohn-width estimates."""
from __future__ import annotations

__version__ = "0.1.0"

from .complex import (  # noqa: E402
    ColoredComplex,
    barycentric_subdivide_and_color,
    kuhn_triangulate,
    make_periodic,
)
from .join import build_join, join_map, join_weights, retract  # noqa: E402
from .metric import MetricGraph, build_metric_graph, geodesic_distances  # noqa: E402
from .homology import ChainVector, betti, bound_2chain, dependent_subset  # noqa: E402
from .construct import build_ambient, build_blowup_space, extract_level_set  # noqa: E402

__all__ = [
    "__version__",
    "ColoredComplex",
    "kuhn_triangulate",
    "barycentric_subdivide_and_color",
    "make_periodic",
    "build_join",
    "join_weights",
    "join_map",
    "retract",
    "MetricGraph",
    "build_metric_graph",
    "geodesic_distances",
    "ChainVector",
    "betti",
    "bound_2chain",
    "dependent_subset",
    "build_ambient",
    "extract_level_set",
    "build_blowup_space",
]
