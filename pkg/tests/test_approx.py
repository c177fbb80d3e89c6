import math

import numpy as np
import pytest

from oracles import flat_polygon_oracle, regular_polygon_vertices
from surfmink.approx import (
    APPROXIMATE,
    PolyChain,
    build_geodesic_polygon,
    build_line_polygon,
    convergence_study,
    eoc,
    ingest_contour,
    sample_curve,
)
from surfmink.curves import flower_curve, planar_circle
from surfmink.errors import DegenerateProjection, InadmissibleTotalAngle, TooFewPoints
from surfmink.experiments import octant_chain
from surfmink.surfaces import Plane, Sphere
from surfmink.tensor import polygon_components

UP = np.array([0.0, 0.0, 1.0])


def planar_chain(xy):
    xy = np.asarray(xy, dtype=float)
    pts = np.column_stack([xy, np.zeros(len(xy))])
    return PolyChain(pts, np.tile(UP, (len(xy), 1)))


def staircase_circle(radius, n=4000):
    """4-connected pixel staircase around a rounded circle, z = 0."""
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    grid = np.rint(radius * np.column_stack([np.cos(t), np.sin(t)])).astype(int)
    out = [grid[0]]
    for p in grid[1:]:
        q = out[-1]
        if (p == q).all():
            continue
        if p[0] != q[0] and p[1] != q[1]:
            out.append(np.array([p[0], q[1]]))
        out.append(p)
    while (out[-1] == out[0]).all():
        out.pop()
    if out[0][0] != out[-1][0] and out[0][1] != out[-1][1]:
        out.append(np.array([out[0][0], out[-1][1]]))
    xy = np.array(out, dtype=float)
    return np.column_stack([xy, np.zeros(len(xy))])


def test_octant_geodesic_polygon():
    poly = build_geodesic_polygon(octant_chain(), Sphere())
    assert np.allclose(poly.lengths, math.pi / 2, atol=1e-13)
    assert np.allclose(poly.turning_angles, math.pi / 2, atol=1e-13)
    assert poly.positive


def test_sphere_chords_are_shorter_by_a_cubic_term():
    s = Sphere()
    chain = sample_curve(flower_curve(s), 128)
    geo = build_geodesic_polygon(chain, s)
    line = build_line_polygon(chain)
    gap = geo.lengths - line.lengths
    assert np.all(gap > 0)
    # unit sphere: l - 2 sin(l / 2) = l^3 / 24 + O(l^5)
    assert np.allclose(gap / geo.lengths**3, 1 / 24, rtol=1e-3)


def test_sphere_schemes_share_turning_angles():
    # on the sphere the projected chord is the initial geodesic tangent
    s = Sphere()
    chain = sample_curve(flower_curve(s), 96)
    geo = build_geodesic_polygon(chain, s)
    line = build_line_polygon(chain)
    assert np.allclose(geo.turning_angles, line.turning_angles, atol=1e-12)


def test_turning_angles_approximate_curvature():
    s = Sphere()
    curve = flower_curve(s)
    errs, qs = [], [64, 128, 256]
    for q in qs:
        poly = build_geodesic_polygon(sample_curve(curve, q), s)
        d = curve.length / q
        kg = curve.geodesic_curvature(np.arange(q) * d)
        # angle at vertex j closes side j - 1
        errs.append(np.max(np.abs(np.roll(poly.turning_angles, 1) - kg * d)))
    assert np.all(eoc(errs, qs)[1:] > 1.9)


def test_planar_chain_gives_identical_polygons():
    chain = planar_chain([(0, 0), (3, 0.4), (3.5, 2), (1.2, 3.1), (-0.6, 1.4)])
    geo = build_geodesic_polygon(chain, Plane())
    line = build_line_polygon(chain)
    assert np.allclose(geo.lengths, line.lengths, atol=1e-14)
    assert np.allclose(geo.turning_angles, line.turning_angles, atol=1e-14)
    assert sum(line.turning_angles) == pytest.approx(2 * math.pi)


def test_line_polygon_matches_flat_oracle():
    verts = [(0, 0), (2, -0.3), (2.6, 1.1), (0.4, 2.2)]
    poly = build_line_polygon(planar_chain(verts))
    for p in range(1, 7):
        mu, g = flat_polygon_oracle(verts, p)
        comp = polygon_components(poly, p)
        assert comp.mu == pytest.approx(mu, abs=1e-13)
        assert np.allclose(comp.g, g, atol=1e-13)


def test_reversed_chain_is_reoriented():
    verts = [(0, 0), (2, -0.3), (2.6, 1.1), (0.4, 2.2)]
    fwd = build_line_polygon(planar_chain(verts))
    cw = planar_chain(verts[:1] + verts[:0:-1])
    with pytest.raises(InadmissibleTotalAngle):
        build_line_polygon(cw, orient=False)
    back = build_line_polygon(cw)
    assert not back.positive
    for p in range(2, 6):
        assert polygon_components(back, p).mu == pytest.approx(
            polygon_components(fwd, p).mu, abs=1e-13)
    # a large spherical cap traversed clockwise: the shape is its complement
    chain = octant_chain().reversed()
    poly = build_geodesic_polygon(chain, Sphere())
    assert not poly.positive
    assert polygon_components(poly, 3).mu == pytest.approx(1.0, abs=1e-12)
    assert fwd.positive


def test_steep_chord_raises():
    pts = np.array([[0, 0, 0], [1, 0, 0.0], [1, 0, 2.0]])
    with pytest.raises(DegenerateProjection):
        build_line_polygon(PolyChain(pts, np.tile(UP, (3, 1))))


def test_chain_validation():
    with pytest.raises(TooFewPoints):
        PolyChain(np.zeros((2, 3)), np.tile(UP, (2, 1)))
    with pytest.raises(ValueError):
        planar_chain([(0, 0), (0, 0), (1, 1)])
    with pytest.raises(ValueError):
        PolyChain(np.eye(3), np.full((3, 3), 2.0))


def test_ingest_drops_duplicates():
    xy = [(0, 0), (0, 0), (1, 0), (1, 1), (1, 1), (0, 1), (0, 0)]
    pts = np.column_stack([np.array(xy, float), np.zeros(len(xy))])
    chain = ingest_contour(pts, np.tile(2 * UP, (len(xy), 1)), smoothing_passes=0)
    assert len(chain) == 4 and chain.provenance == APPROXIMATE
    assert np.allclose(chain.normals, UP)
    assert chain.h == pytest.approx(1.0)
    with pytest.raises(TooFewPoints):
        ingest_contour(pts[:2], np.tile(UP, (2, 1)))


def test_zero_passes_is_identity():
    pts = staircase_circle(6)
    chain = ingest_contour(pts, np.tile(UP, (len(pts), 1)), smoothing_passes=0)
    assert np.array_equal(chain.points, pts)


def test_smoothing_keeps_regular_polygons_regular():
    v = regular_polygon_vertices(7, 2.0, 0.3)
    pts = np.column_stack([v, np.zeros(7)])
    chain = ingest_contour(pts, np.tile(UP, (7, 1)), smoothing_passes=1)
    r = np.linalg.norm(chain.points, axis=1)
    shrink = (1 + 2 * math.cos(2 * math.pi / 7)) / 3
    assert np.allclose(r, 2.0 * shrink, atol=1e-14)
    assert np.allclose(np.diff(np.unwrap(np.arctan2(chain.points[:, 1], chain.points[:, 0]))),
                       2 * math.pi / 7, atol=1e-14)


def test_smoothed_diagonal_staircase_stays_within_half_a_pixel():
    k = np.arange(40)
    # closed zig-zag: up the diagonal by unit steps, back along a straight return
    up = np.column_stack([np.repeat(k, 2)[1:], np.repeat(k, 2)[:-1]])
    down = np.column_stack([np.arange(38, 0, -1), np.arange(38, 0, -1) + 0.5])
    xy = np.vstack([up, down]).astype(float)
    pts = np.column_stack([xy, np.zeros(len(xy))])
    chain = ingest_contour(pts, np.tile(UP, (len(xy), 1)), smoothing_passes=1)
    inner = chain.points[2:len(up) - 2]
    dist = np.abs(inner[:, 0] - inner[:, 1]) / math.sqrt(2)
    # offsets alternate between 1/3 and 2/3 of a pixel
    assert np.allclose(np.sort(np.unique(dist.round(12))), [1 / 3 / math.sqrt(2),
                                                            2 / 3 / math.sqrt(2)])
    assert np.max(dist) < 0.5


def test_staircase_circle_smoothing_removes_fourfold_signal():
    pts = staircase_circle(10)
    normals = np.tile(UP, (len(pts), 1))
    raw = build_line_polygon(ingest_contour(pts, normals, smoothing_passes=0))
    smooth = build_line_polygon(ingest_contour(pts, normals, smoothing_passes=1))
    for p in range(2, 7):
        assert polygon_components(smooth, p).mu <= 0.05
    assert polygon_components(raw, 4).mu > polygon_components(smooth, 4).mu


def test_planar_circle_study_is_exact_on_symmetric_components():
    curve = planar_circle(1.0)
    rep = convergence_study(curve, Plane(), "line", [8, 16, 32], p=4)
    assert np.all(rep.column("err_g") < 1e-13)
    assert np.all(rep.column("eoc_L")[1:] > 1.9)
    assert np.isnan(rep.column("err_f")).all()


def test_eoc_of_geometric_sequence():
    rates = eoc([1.0, 0.25, 0.0625], [4, 8, 16])
    assert np.isnan(rates[0]) and np.allclose(rates[1:], 2.0)
