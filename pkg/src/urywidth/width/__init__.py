"""Width certificates: upper bounds from maps, lower bounds from topology."""
from __future__ import annotations

from .certificate import (
    CertificateError,
    WidthCertificate,
    check_consistency,
    register_verifier,
    verify_certificate,
)
from .fibers import AssignmentError, TargetComplex, WindowError, fiber_table, uw_upper_from_map
from .lebesgue import LebesgueError, LebesgueResult, LebesgueWitness, lebesgue_check
from .local import (
    ClassTable,
    LocalWidthReport,
    blowup_class_table,
    class_local_width,
    direct_local_width,
    level_set_class_table,
    local_width_report,
)
from .pipeline import Contradiction, PipelineResult, PipelineStageError, theorem12_pipeline
from .reeb import ReebGraph, build_reeb_graph, uw1_upper_distance_spheres
from .svg import planar_image_svg, reeb_svg
from .winding import (
    WindingError,
    incircle,
    mod2_winding,
    projection_degree_certificate,
    winding_lower_certificate,
)

__all__ = [
    "CertificateError",
    "WidthCertificate",
    "check_consistency",
    "register_verifier",
    "verify_certificate",
    "AssignmentError",
    "WindowError",
    "TargetComplex",
    "fiber_table",
    "uw_upper_from_map",
    "LebesgueError",
    "LebesgueResult",
    "LebesgueWitness",
    "lebesgue_check",
    "ClassTable",
    "LocalWidthReport",
    "blowup_class_table",
    "class_local_width",
    "direct_local_width",
    "level_set_class_table",
    "local_width_report",
    "Contradiction",
    "PipelineResult",
    "PipelineStageError",
    "theorem12_pipeline",
    "ReebGraph",
    "build_reeb_graph",
    "uw1_upper_distance_spheres",
    "planar_image_svg",
    "reeb_svg",
    "WindingError",
    "incircle",
    "mod2_winding",
    "projection_degree_certificate",
    "winding_lower_certificate",
]
