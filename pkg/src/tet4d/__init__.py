"""Exact intersection engine for segments, triangles and tetrahedra in R^4."""

from .kernel4d import (
    NEG,
    POS,
    ZERO,
    Contained,
    DegenerateDirection,
    DegeneratePosition,
    DegenerateTetrahedron,
    EmptyIntersection,
    BudgetOutOfRange,
    GeometryError,
    Hyperplane4,
    LineParam,
    Point4,
    Segment4,
    Tetrahedron4,
    Triangle4,
    TwoPlaneParam,
    generic_shear,
    generic_shear_inverse,
    hyperplane_of,
    line_2flat_meet,
    line_param,
    orient5,
    segment_tetra_direct,
    segment_tetra_predicate,
    side_of_hyperplane,
    tri_tri_direct,
    tri_tri_predicate,
    twoplane_param,
)
from .oracle import IntersectionReport, QueryMode

__all__ = [
    "NEG",
    "POS",
    "ZERO",
    "Contained",
    "DegenerateDirection",
    "DegeneratePosition",
    "DegenerateTetrahedron",
    "EmptyIntersection",
    "BudgetOutOfRange",
    "GeometryError",
    "Hyperplane4",
    "IntersectionReport",
    "LineParam",
    "Point4",
    "QueryMode",
    "Segment4",
    "Tetrahedron4",
    "Triangle4",
    "TwoPlaneParam",
    "generic_shear",
    "generic_shear_inverse",
    "hyperplane_of",
    "line_2flat_meet",
    "line_param",
    "orient5",
    "segment_tetra_direct",
    "segment_tetra_predicate",
    "side_of_hyperplane",
    "tri_tri_direct",
    "tri_tri_predicate",
    "twoplane_param",
]
