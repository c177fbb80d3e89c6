"""Experiment runners behind the command-line subcommands.

Each ``cmd_*`` function is pure given its arguments and returns a
:class:`Report`: one result table plus the plots that go with it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .approx import (
    ConsistencyReport,
    PolyChain,
    build_geodesic_polygon,
    build_line_polygon,
    convergence_study,
    geodesic_logs,
    ingest_contour,
)
from .curves import flower_curve
from .errors import UsageError
from .fileio import ResultTable
from .levelset import extract_zero_levelset, flower_levelset, make_sphere_mesh
from .surfaces import Ellipsoid, Plane, Sphere, Torus
from .tensor import (
    PARALLEL,
    SmoothCurveData,
    eigen_spectrum,
    polygon_components,
    shape_measures,
    transport_angle,
    wrap_angle,
)

FLOWER_CENTER = (math.pi / 2, math.pi / 4)


@dataclass
class Report:
    name: str
    table: ResultTable
    plots: list = field(default_factory=list)


def parallel_map(fn, items, workers: int = 1):
    """``map`` over a bounded process pool; results keep the input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def parse_surface(spec: str):
    """``sphere[:r]``, ``ellipsoid:a1,a2,a3``, ``torus[:R,r]`` or ``plane``."""
    name, _, args = (spec or "sphere").partition(":")
    vals = [float(v) for v in args.split(",") if v.strip()]
    try:
        if name == "sphere":
            return Sphere(*vals)
        if name == "ellipsoid":
            return Ellipsoid(*(vals or [1.6, 1.3, 1.0]))
        if name == "torus":
            return Torus(*vals)
        if name == "plane":
            return Plane()
    except TypeError as exc:
        raise UsageError(f"bad surface parameters in {spec!r}") from exc
    raise UsageError(f"unknown surface {spec!r}")


# regular polygons ---------------------------------------------------------


def regular_polygon_chain(surface, q: int, polar_radius: float = math.pi / 4) -> PolyChain:
    """``q`` points equidistributed on a circle about the north pole.

    On the plane the circle has radius 1 about the origin.
    """
    phi = 2 * math.pi * np.arange(q) / q
    if isinstance(surface, Plane):
        pts = np.column_stack([np.cos(phi), np.sin(phi), np.zeros(q)])
    else:
        pts = surface.chart(np.full(q, polar_radius), phi)[0]
    return PolyChain(pts, surface.normal(pts))


def cmd_regular_polygons(q_range=range(3, 7), p_range=range(1, 7), surface="sphere"):
    surf = parse_surface(surface)
    q_range = list(q_range)
    if any(not 3 <= q <= 12 for q in q_range):
        raise UsageError("q must lie in 3..12")
    table = ResultTable(["q", "p", "mu"])
    series = []
    for q in q_range:
        poly = build_geodesic_polygon(regular_polygon_chain(surf, q), surf)
        mu = shape_measures(poly, p_range)
        for p in p_range:
            table.append([q, p, mu[p]])
        series.append((f"q = {q}", list(p_range), [mu[p] for p in p_range]))
    plot = dict(filename="regular_polygons.svg", series=series, title="regular polygons",
                xlabel="p", ylabel="mu_p", scale="linear")
    return Report("regular_polygons", table, [plot])


# torus triangles ----------------------------------------------------------

TORUS_PHI = (0.0, 1.55, 3.1)
TORUS_START = 0.9 * math.pi
TORUS_MAX_STEP = 0.05 * math.pi


def torus_triangle_chain(torus, theta2: float) -> PolyChain:
    phi = np.array(TORUS_PHI)
    theta = np.array([math.pi, theta2, math.pi])
    pts = torus.chart(phi, theta)[0]
    return PolyChain(pts, torus.normal(pts))


def _continuation_path(targets):
    """Parameter path from ``TORUS_START`` through every target in order."""
    path, record = [], []
    cur = TORUS_START
    for t in targets:
        n = max(1, math.ceil(abs(t - cur) / TORUS_MAX_STEP))
        steps = np.linspace(cur, t, n + 1)[1:] if path else np.linspace(cur, t, n + 1)
        path.extend(float(v) for v in steps)
        record.append(len(path) - 1)
        cur = t
    return path, record


def cmd_torus_sweep(theta2_values=None, R: float = 2.0, r: float = 1.375,
                    ps=range(2, 7)):
    """Geodesic triangles with the middle vertex moved around the tube.

    The middle vertex starts near the inner ring and travels through the
    requested ``theta2`` values in order. Each set of shooting solves starts
    from the previous logs, so every side stays on the branch reached by
    continuous deformation.
    """
    if theta2_values is None:
        theta2_values = np.linspace(0.9, -0.8, 35) * math.pi
    torus = Torus(R, r)
    ps = list(ps)
    table = ResultTable(["theta2", "theta2_over_pi", *[f"mu_{p}" for p in ps],
                         "angle_spread", "edge_spread"])
    path, record = _continuation_path([float(t) for t in theta2_values])
    keep = set(record)
    guess = None
    for k, t2 in enumerate(path):
        chain = torus_triangle_chain(torus, t2)
        logs = geodesic_logs(chain, torus, guard=False, guesses=guess)
        guess = logs[0]
        if k not in keep:
            continue
        poly = build_geodesic_polygon(chain, torus, guard=False, logs=logs)
        mu = shape_measures(poly, ps)
        a = poly.turning_angles
        table.append([t2, t2 / math.pi, *[mu[p] for p in ps],
                      float((a.max() - a.min()) / a.sum()), float(np.ptp(poly.lengths))])
    x = table.column("theta2_over_pi")
    plots = [
        dict(filename="torus_mu.svg", title="torus triangles", xlabel="theta2 / pi",
             ylabel="mu_p", scale="linear",
             series=[(f"mu_{p}", x, table.column(f"mu_{p}")) for p in ps]),
        dict(filename="torus_spread.svg", title="torus triangles", xlabel="theta2 / pi",
             ylabel="spread", scale="linear",
             series=[("angle spread", x, table.column("angle_spread")),
                     ("edge spread", x, table.column("edge_spread"))]),
    ]
    return Report("torus_sweep", table, plots)


# convergence --------------------------------------------------------------


def cmd_convergence(scheme="geodesic", surface="ellipsoid:1.6,1.3,1.0",
                    flower=(0.7, 0.2, 3), levels=(4, 16, 64, 256, 1024), p=3,
                    center=FLOWER_CENTER):
    surf = parse_surface(surface)
    r0, a, omega = flower
    curve = flower_curve(surf, r0, a, omega, center)
    rep: ConsistencyReport = convergence_study(curve, surf, scheme, list(levels), p)
    table = ResultTable(list(ConsistencyReport.COLUMNS), rep.as_rows(),
                        {"L": rep.reference["L"], "kappa": rep.reference["kappa"],
                         "reference_drift": rep.reference["reference_drift"]})
    q = rep.column("q")
    names = ("L", "kappa", "f", "g") if scheme == "geodesic" else ("L", "kappa", "g")
    plot = dict(filename=f"convergence_{scheme}.svg", title=f"{scheme} polygons",
                xlabel="q", ylabel="error", slopes=(-1.0, -2.0),
                series=[(f"err_{n}", q, rep.column("err_" + n)) for n in names])
    return Report(f"convergence_{scheme}", table, [plot])


# levelsets on sphere meshes -----------------------------------------------


def _levelset_level(args):
    level, r0, a, omega, center, ps = args
    mesh = make_sphere_mesh(level)
    chain = extract_zero_levelset(mesh, flower_levelset(mesh, r0, a, omega, center))
    mu = shape_measures(build_line_polygon(chain), ps)
    return mesh.h, len(chain), [mu[p] for p in ps]


def loglog_slope(h, err):
    """Least-squares slope of ``log err`` against ``log h``."""
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def cmd_levelset_study(levels=range(1, 7), flower=(0.5, 0.1, 4), ps=(2, 4, 6),
                       center=FLOWER_CENTER, workers=1):
    levels = list(levels)
    if len(levels) < 3:
        raise UsageError("the levelset study needs at least 3 refinement levels")
    r0, a, omega = flower
    ps = list(ps)
    # the zero set is parametrized by atan2(phi, theta) + pi, a half-turn shift
    curve = flower_curve(Sphere(1.0), r0, a, omega, center, phase=math.pi)
    ref = shape_measures(SmoothCurveData.from_curve(curve), ps)
    rows = parallel_map(_levelset_level,
                        [(lv, r0, a, omega, center, ps) for lv in levels], workers)
    table = ResultTable(["level", "h", "points", *[f"mu_{p}" for p in ps],
                         *[f"err_{p}" for p in ps]])
    for lv, (h, m, mus) in zip(levels, rows):
        table.append([lv, h, m, *mus, *[abs(v - ref[p]) for v, p in zip(mus, ps)]])
    h = np.array(table.column("h"))
    slopes = {}
    for p in ps:
        err = np.array(table.column(f"err_{p}"))
        slopes[p] = loglog_slope(h, err) if np.all(err > 0) else math.nan
    table.meta.update({"reference": {str(p): ref[p] for p in ps},
                       "slopes": {str(p): slopes[p] for p in ps}})
    plot = dict(filename="levelset_errors.svg", title="levelset extraction",
                xlabel="h", ylabel="|mu_h - mu|", slopes=(1.0,),
                series=[(f"p = {p}", h, table.column(f"err_{p}")) for p in ps])
    return Report("levelset_study", table, [plot])


# flower sweeps on the ellipsoid -------------------------------------------

SWEEPS = {
    "amplitude": ("a", (0.0, 0.05, 0.1, 0.15)),
    "radius": ("r0", (0.3, 0.4, 0.5, 0.6)),
    "frequency": ("omega", (3, 4, 5, 6, 7)),
    "position": ("y0", (3 * math.pi / 8, math.pi / 4, math.pi / 8)),
}
SWEEP_BASE = {"r0": 0.4, "a": 0.1, "omega": 5, "y0": math.pi / 4}


def _flower_mu(args):
    params, ps, surface = args
    surf = parse_surface(surface)
    curve = flower_curve(surf, params["r0"], params["a"], params["omega"],
                         (math.pi / 2, params["y0"]))
    mu = shape_measures(SmoothCurveData.from_curve(curve), ps)
    return [mu[p] for p in ps]


def cmd_flower_sweep(which="frequency", values=None, ps=range(2, 11),
                     surface="ellipsoid:1.6,1.3,1.0", workers=1):
    if which not in SWEEPS:
        raise UsageError(f"sweep must be one of {sorted(SWEEPS)}")
    key, default = SWEEPS[which]
    values = list(default if values is None else values)
    ps = list(ps)
    jobs = [({**SWEEP_BASE, key: v}, ps, surface) for v in values]
    rows = parallel_map(_flower_mu, jobs, workers)
    table = ResultTable([key, *[f"mu_{p}" for p in ps]])
    for v, mus in zip(values, rows):
        table.append([v, *mus])
    plot = dict(filename=f"flower_{which}.svg", title=f"flower sweep: {key}",
                xlabel="p", ylabel="mu_p", scale="linear",
                series=[(f"{key} = {v:.4g}", ps, mus) for v, mus in zip(values, rows)])
    return Report(f"flower_{which}", table, [plot])


# contours -----------------------------------------------------------------


def cmd_contour(points, normals, smoothing_passes=1, ps=range(2, 7)):
    """Shape measures and eigen-angles of an ingested contour."""
    chain = ingest_contour(points, normals, smoothing_passes)
    poly = build_line_polygon(chain)
    table = ResultTable(["p", "mu", "angle_minus_0", "direction_defined"])
    mus = []
    for p in ps:
        spec = eigen_spectrum(polygon_components(poly, p))
        table.append([p, spec.mu, float(spec.angles_minus[0]), int(spec.direction_defined)])
        mus.append(spec.mu)
    table.meta.update({"points": len(chain), "smoothing_passes": smoothing_passes,
                       "mean_segment": chain.h, "positive": poly.positive})
    plot = dict(filename="contour_mu.svg", title="contour", xlabel="p", ylabel="mu_p",
                scale="linear", series=[("mu_p", list(ps), mus)])
    return Report("contour", table, [plot])


# transport conventions ----------------------------------------------------


def octant_chain(radius: float = 1.0) -> PolyChain:
    pts = radius * np.eye(3)
    return PolyChain(pts, pts / radius)


def cmd_transport_demo(radius: float = 1.0, offsets: int = 33):
    """Closure angles and shape measures of the octant triangle.

    Parallel transport around the loop fails to close by the enclosed
    curvature; the turned transport closes exactly. ``mu_3`` under parallel
    transport depends on the fiducial point, which is moved along side 0.
    """
    sphere = Sphere(radius)
    poly = build_geodesic_polygon(octant_chain(radius), sphere)
    L = poly.length
    table = ResultTable(["convention", "closure_angle", "mu_3", "mu_4",
                         "mu_3_min", "mu_3_max"])
    t = np.linspace(0.0, poly.lengths[0], offsets, endpoint=False)
    series = []
    for mode in ("defect_corrected", PARALLEL):
        closure = float(wrap_angle(transport_angle(poly, L, mode=mode)))
        mu3 = [polygon_components(poly, 3, off, mode).mu for off in t]
        mu4 = polygon_components(poly, 4, mode=mode).mu
        table.append([mode, closure, mu3[0], mu4, min(mu3), max(mu3)])
        series.append((f"mu_3 {mode}", t, mu3))
    plot = dict(filename="transport_mu3.svg", title="octant triangle",
                xlabel="fiducial offset on side 0", ylabel="mu_3", scale="linear",
                series=series)
    return Report("transport_demo", table, [plot])
