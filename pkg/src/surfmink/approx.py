"""Polygonal approximations of closed surface curves.

Two schemes reduce a closed chain of surface points to :class:`PolygonData`:

* geodesic polygons, with side lengths and turning angles from the
  Riemannian log of the surface;
* straight-line polygons, with chord lengths and turning angles measured
  between chord vectors projected to the tangent plane at each vertex.

The second scheme only needs (possibly approximate) normals, so it also
serves chains cut out of triangulated surfaces or ingested from files.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProjection, TooFewPoints
from .surfaces import _dot
from .tensor import (
    Frame,
    PolygonData,
    SmoothCurveData,
    _check_admissible,
    polygon_components,
    polygon_f_angles,
    smooth_components,
)

logger = logging.getLogger(__name__)

ON_SURFACE = "on_surface"
APPROXIMATE = "approximate"
REFERENCE_RESOLUTION = 8192


@dataclass(frozen=True)
class PolyChain:
    """Closed chain of points with unit normals (circular indexing)."""

    points: np.ndarray
    normals: np.ndarray
    provenance: str = ON_SURFACE
    h: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        nrm = np.asarray(self.normals, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "normals", nrm)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape != nrm.shape:
            raise ValueError("points and normals must both have shape (m, 3)")
        if len(pts) < 3:
            raise TooFewPoints(f"a closed chain needs at least 3 points, got {len(pts)}")
        gaps = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        if np.any(gaps <= 1e-12):
            i = int(np.argmin(gaps))
            raise ValueError(f"consecutive points {i} and {(i + 1) % len(pts)} coincide")
        if np.any(np.abs(np.linalg.norm(nrm, axis=1) - 1.0) > 1e-10):
            raise ValueError("normals must have unit length")

    def __len__(self):
        return len(self.points)

    def reversed(self) -> "PolyChain":
        """Opposite traversal, keeping point 0 first."""
        order = np.r_[0, np.arange(len(self) - 1, 0, -1)]
        return PolyChain(self.points[order], self.normals[order], self.provenance, self.h)


def _signed_angle(v_in, v_out, n):
    return np.arctan2(_dot(n, np.cross(v_in, v_out)), _dot(v_in, v_out))


def sample_curve(curve, q: int) -> PolyChain:
    """Points at ``q`` equal arc-length breakpoints, starting at parameter 0."""
    if q < 3:
        raise ValueError("need q >= 3 segments")
    s = np.arange(q) * (curve.length / q)
    u = curve.param_at(s)
    pts = curve.position(u)
    return PolyChain(pts, curve.surface.normal(pts), ON_SURFACE)


def _orient(build, chain, *args, **kwargs):
    poly = build(chain, *args, **kwargs)
    if poly.total_angle < 0:
        # the region on the left has enclosed curvature above 2 pi; the shape
        # meant is the one on the right, i.e. the reversed traversal
        kwargs.pop("logs", None)
        kwargs.pop("guesses", None)
        poly = build(chain.reversed(), *args, **kwargs)
        poly = PolygonData(poly.turning_angles, poly.lengths, poly.frame, positive=False)
    _check_admissible(poly.total_angle)
    return poly


def geodesic_logs(chain: PolyChain, surface, guard: bool = True, guesses=None):
    """Start and end velocities of the geodesic sides, ``(V, W)``.

    ``V[i] = log_{x_i} x_{i+1}``; ``W[i]`` is the velocity of the same
    geodesic on arrival at ``x_{i+1}``, so ``-W[i] = log_{x_{i+1}} x_i``.
    """
    x = chain.points
    return surface.log(x, np.roll(x, -1, axis=0), guess=guesses, guard=guard,
                       return_end_velocity=True)


def _geodesic_polygon(chain, surface, guard=True, guesses=None, logs=None):
    x = chain.points
    y = np.roll(x, -1, axis=0)
    V, W = logs if logs is not None else geodesic_logs(chain, surface, guard, guesses)
    lengths = np.linalg.norm(V, axis=1)
    # side i arrives at vertex i+1 with velocity W_i and side i+1 leaves with V_{i+1}
    n_next = surface.normal(y)
    alpha = _signed_angle(W, np.roll(V, -1, axis=0), n_next)
    tau = V[0] / lengths[0]
    n0 = surface.normal(x[0])
    return PolygonData(alpha, lengths, Frame(np.cross(tau, n0), tau, n0, x[0]))


def build_geodesic_polygon(chain: PolyChain, surface, guard: bool = True,
                           orient: bool = True, guesses=None, logs=None) -> PolygonData:
    """Geodesic polygon through the chain vertices.

    Side lengths are geodesic distances and turning angles are signed angles
    between the arriving and leaving geodesic tangents, with positive sign
    for a turn towards ``n x tau``-left, i.e. towards the enclosed region of
    a positively oriented curve. Precomputed ``logs`` from
    :func:`geodesic_logs` skip the shooting solves.
    """
    if orient:
        return _orient(_geodesic_polygon, chain, surface, guard=guard, guesses=guesses,
                       logs=logs)
    poly = _geodesic_polygon(chain, surface, guard=guard, guesses=guesses, logs=logs)
    _check_admissible(poly.total_angle)
    return poly


def _line_polygon(chain):
    x = chain.points
    n = chain.normals
    prev = np.roll(x, 1, axis=0) - x
    nxt = np.roll(x, -1, axis=0) - x
    for name, d in (("previous", prev), ("next", nxt)):
        bad = _dot(d, n) ** 2 > 0.5 * _dot(d, d)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise DegenerateProjection(
                f"chord to the {name} point is too steep for the normal at vertex {i}"
            )
    v1 = prev - _dot(prev, n)[:, None] * n
    v2 = nxt - _dot(nxt, n)[:, None] * n
    vertex_alpha = _signed_angle(-v1, v2, n)
    lengths = np.linalg.norm(nxt, axis=1)
    tau = v2[0] / np.linalg.norm(v2[0])
    frame = Frame(np.cross(tau, n[0]), tau, n[0], x[0])
    # the angle at the end of side i sits at vertex i + 1
    return PolygonData(np.roll(vertex_alpha, -1), lengths, frame)


def build_line_polygon(chain: PolyChain, orient: bool = True) -> PolygonData:
    """Straight-line polygon with projected-difference turning angles."""
    if orient:
        return _orient(_line_polygon, chain)
    poly = _line_polygon(chain)
    _check_admissible(poly.total_angle)
    return poly


def ingest_contour(points, normals, smoothing_passes: int = 1) -> PolyChain:
    """Clean an experimental contour.

    Consecutive duplicates are dropped, then each pass replaces every
    position by the mean of itself and its two neighbours.
    """
    pts = np.asarray(points, dtype=float)
    nrm = np.asarray(normals, dtype=float)
    if len(pts) >= 2:
        keep = np.linalg.norm(pts - np.roll(pts, 1, axis=0), axis=1) > 1e-12
        if not keep.any():
            keep[0] = True
        pts, nrm = pts[keep], nrm[keep]
    if len(pts) < 3:
        raise TooFewPoints(f"contour has {len(pts)} distinct points, need 3")
    for _ in range(smoothing_passes):
        pts = (np.roll(pts, 1, axis=0) + pts + np.roll(pts, -1, axis=0)) / 3.0
    nrm = nrm / np.linalg.norm(nrm, axis=1, keepdims=True)
    h = float(np.mean(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)))
    return PolyChain(pts, nrm, APPROXIMATE, h)


# convergence studies ----------------------------------------------------------


@dataclass
class ConsistencyReport:
    """Per-level consistency errors of a polygonal scheme against a smooth curve."""

    scheme: str
    p: int
    reference: dict
    rows: list = field(default_factory=list)

    COLUMNS = ("q", "err_L", "eoc_L", "err_kappa", "eoc_kappa",
               "err_f", "eoc_f", "err_g", "eoc_g")

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)

    def as_rows(self, columns=None):
        columns = columns or self.COLUMNS
        return [[row[c] for c in columns] for row in self.rows]


def eoc(errors, q):
    """Experimental orders of convergence between consecutive levels."""
    errors = np.asarray(errors, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.full(errors.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[1:] = np.log(errors[:-1] / errors[1:]) / np.log(q[1:] / q[:-1])
    return out


def reference_quantities(curve, p: int, n: int = REFERENCE_RESOLUTION):
    """Smooth-curve reference data plus a halved-resolution self check."""
    ref = SmoothCurveData.from_curve(curve, n)
    coarse = SmoothCurveData.from_curve(curve, n // 2)
    g = smooth_components(ref, p).g / ref.length
    g_coarse = smooth_components(coarse, p).g / coarse.length
    drift = float(np.linalg.norm(g - g_coarse))
    if drift > 1e-8:
        logger.warning("reference components drift by %.3g between %d and %d nodes",
                       drift, n // 2, n)
    return ref, g, drift


def convergence_study(curve, surface, scheme: str, levels, p: int = 3,
                      reference=None) -> ConsistencyReport:
    """Errors of ``L, kappa, f, g`` for equal arc-length polygons with ``q`` sides.

    The ``f`` error is the largest deviation between the smooth transport
    angle ``f(s, 0)`` and the constant polygon angle ``f_i`` over every side
    ``[s_i, s_{i+1})``; it is only reported for the geodesic scheme.
    """
    if scheme not in ("geodesic", "line"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if reference is None:
        reference = reference_quantities(curve, p)
    ref, g_ref, drift = reference
    L, kappa = ref.length, ref.total_curvature
    f_ref = (2 * math.pi / kappa) * ref.phi
    report = ConsistencyReport(scheme, p, {"L": L, "kappa": kappa, "g": g_ref,
                                           "reference_drift": drift})
    for q in levels:
        chain = sample_curve(curve, q)
        if scheme == "geodesic":
            poly = build_geodesic_polygon(chain, surface)
        else:
            poly = build_line_polygon(chain)
        g_q = polygon_components(poly, p).g / poly.length
        row = {
            "q": int(q),
            "err_L": abs(L - poly.length),
            "err_kappa": abs(kappa - poly.total_angle),
            "err_g": float(np.linalg.norm(g_ref - g_q)),
            "err_f": math.nan,
        }
        if scheme == "geodesic":
            f_q = polygon_f_angles(poly)
            side = np.minimum((ref.s / (L / q)).astype(int), q - 1)
            row["err_f"] = float(np.max(np.abs(f_ref - f_q[side])))
        report.rows.append(row)
    qs = [r["q"] for r in report.rows]
    for name in ("L", "kappa", "f", "g"):
        rates = eoc([r["err_" + name] for r in report.rows], qs)
        for r, rate in zip(report.rows, rates):
            r["eoc_" + name] = float(rate)
    return report
