import math

import numpy as np
import pytest

from surfmink.errors import UsageError
from surfmink.experiments import (
    TORUS_MAX_STEP,
    _continuation_path,
    cmd_flower_sweep,
    cmd_regular_polygons,
    cmd_torus_sweep,
    parallel_map,
    parse_surface,
)
from surfmink.curves import flower_curve
from surfmink.surfaces import Ellipsoid, Plane, Sphere
from surfmink.tensor import SmoothCurveData, shape_measures


def test_parse_surface():
    assert isinstance(parse_surface("plane"), Plane)
    assert parse_surface("sphere:2").radius == 2.0
    assert isinstance(parse_surface("ellipsoid:1.6,1.3,1"), Ellipsoid)
    assert parse_surface("torus:3,1").R == 3.0
    for bad in ("cube", "sphere:1,2,3"):
        with pytest.raises(UsageError):
            parse_surface(bad)


def test_parallel_map_keeps_order():
    items = list(range(7, 0, -1))
    assert parallel_map(math.factorial, items, workers=3) == [math.factorial(i) for i in items]


def test_regular_polygon_range_is_checked():
    with pytest.raises(UsageError):
        cmd_regular_polygons([13], [2])


def test_continuation_path_steps_are_bounded():
    path, record = _continuation_path([0.6 * math.pi, -0.8 * math.pi, 0.5 * math.pi])
    assert np.max(np.abs(np.diff(path))) <= TORUS_MAX_STEP + 1e-15
    assert [path[k] for k in record] == pytest.approx([0.6 * math.pi, -0.8 * math.pi,
                                                       0.5 * math.pi])


def test_torus_sweep_is_path_independent_at_shared_points():
    # reaching 0.8 pi directly or via a detour lands on the same geodesic branch
    a = cmd_torus_sweep([0.8 * math.pi]).table
    b = cmd_torus_sweep([0.7 * math.pi, 0.8 * math.pi]).table
    assert a.rows[0] == pytest.approx(b.rows[1], abs=1e-9)


def test_circle_limit_of_the_flower_on_the_sphere():
    # a = 0 gives a chart circle; it tends to a geodesic circle as r0 shrinks
    mu = []
    for r0 in (0.2, 0.1, 0.05):
        curve = flower_curve(Sphere(), r0, 0.0, 5, (math.pi / 2, math.pi / 4))
        mu.append(max(shape_measures(SmoothCurveData.from_curve(curve), range(2, 7)).values()))
    assert mu[-1] < 1e-3
    assert mu[0] / mu[1] > 3.5 and mu[1] / mu[2] > 3.5


def test_circle_limit_on_the_ellipsoid_is_not_isotropic():
    # a chart circle on an anisotropic ellipsoid keeps a two-fold signal
    table = cmd_flower_sweep("amplitude", [0.0], ps=[2]).table
    assert table.rows[0][1] > 0.1
