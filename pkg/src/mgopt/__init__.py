"""Optimal eigenvalues of measure Laplacians on finite metric graphs."""

from .graph import (
    Edge,
    GraphPoint,
    MetricGraphModel,
    PointMap,
    build_model,
    degree,
    path_distance,
    rho_diameter,
    scale,
    subdivide_at,
    total_length,
)

__version__ = "0.1.0"

__all__ = [
    "Edge",
    "GraphPoint",
    "MetricGraphModel",
    "PointMap",
    "build_model",
    "degree",
    "path_distance",
    "rho_diameter",
    "scale",
    "subdivide_at",
    "total_length",
]
