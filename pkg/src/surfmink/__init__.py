"""Irreducible Minkowski tensors of closed curves on curved surfaces."""

from .approx import (
    PolyChain,
    build_geodesic_polygon,
    build_line_polygon,
    convergence_study,
    ingest_contour,
    sample_curve,
)
from .curves import ParamCurve, flower_curve, geodesic_circle, geodesic_curvature
from .errors import SurfMinkError
from .levelset import TriMesh, extract_zero_levelset, flower_levelset, make_sphere_mesh
from .surfaces import Ellipsoid, Plane, Sphere, Torus, geodesic_distance, geodesic_log
from .tensor import (
    DEFECT_CORRECTED,
    PARALLEL,
    PolygonData,
    SmoothCurveData,
    eigen_spectrum,
    functionals,
    polygon_components,
    shape_measures,
    smooth_components,
)

__version__ = "0.1.0"
