import math
import xml.dom.minidom

import numpy as np
import pytest

from surfmink.approx import build_line_polygon, ingest_contour
from surfmink.errors import NonManifold, ParseError, TooFewPoints, UsageError
from surfmink.fileio import (
    ExperimentConfig,
    ResultTable,
    emit_table,
    load_contour,
    load_mesh,
    read_table,
    write_contour,
)
from surfmink.plotting import emit_svg_plot
from surfmink.tensor import shape_measures

OCTAHEDRON_OFF = """OFF
# unit octahedron
6 8 0
1 0 0
-1 0 0
0 1 0
0 -1 0
0 0 1
0 0 -1
3 0 2 4
3 2 1 4
3 1 3 4
3 3 0 4
3 2 0 5
3 1 2 5
3 3 1 5
3 0 3 5
"""


def test_octahedron_off(tmp_path):
    path = tmp_path / "oct.off"
    path.write_text(OCTAHEDRON_OFF)
    mesh = load_mesh(path)
    assert len(mesh.vertices) == 6 and len(mesh.triangles) == 8
    assert mesh.h == pytest.approx(math.sqrt(2))
    # by symmetry the averaged normal at each vertex is its position
    assert np.allclose(mesh.vertex_normals, mesh.vertices, atol=1e-15)


def test_recomputed_normals_are_area_weighted(tmp_path):
    path = tmp_path / "bent.off"
    # stretched octahedron: faces differ in area, so weighting matters
    text = OCTAHEDRON_OFF.replace("0 0 1\n", "0 0 2\n")
    path.write_text(text)
    mesh = load_mesh(path)
    v, t = mesh.vertices, mesh.triangles
    k = 0
    acc = np.zeros(3)
    for tri in t:
        if k in tri:
            a, b, c = v[tri]
            acc += np.cross(b - a, c - a)  # twice the area times the unit normal
    assert np.allclose(mesh.vertex_normals[k], acc / np.linalg.norm(acc), atol=1e-15)


def test_obj_with_normals(tmp_path):
    lines = ["v 1 0 0", "v -1 0 0", "v 0 1 0", "v 0 -1 0", "v 0 0 1", "v 0 0 -1"]
    lines += ["vn 1 0 0", "vn -1 0 0", "vn 0 1 0", "vn 0 -1 0", "vn 0 0 1", "vn 0 0 -1"]
    for tri in ((0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
                (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)):
        lines.append("f " + " ".join(f"{i + 1}//{i + 1}" for i in tri))
    path = tmp_path / "oct.obj"
    path.write_text("\n".join(lines) + "\n")
    mesh = load_mesh(path)
    assert np.allclose(mesh.vertex_normals, mesh.vertices)


def test_dangling_edge_is_non_manifold(tmp_path):
    body = OCTAHEDRON_OFF.splitlines()
    body[2] = "6 7 0"
    path = tmp_path / "open.off"
    path.write_text("\n".join(body[:-1]) + "\n")
    with pytest.raises(NonManifold) as info:
        load_mesh(path)
    assert info.value.edge is not None


def test_parse_error_names_the_line(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text(OCTAHEDRON_OFF.replace("0 -1 0", "0 minus 0"))
    with pytest.raises(ParseError) as info:
        load_mesh(path)
    assert info.value.line == 7


def test_contour_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(9, 3))
    nrm = rng.normal(size=(9, 3))
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    path = tmp_path / "c.csv"
    write_contour(path, pts, nrm)
    p2, n2 = load_contour(path)
    assert np.array_equal(p2, pts) and np.array_equal(n2, nrm)


def test_contour_rows_and_errors(tmp_path):
    path = tmp_path / "three.csv"
    path.write_text("1,0,0,2,0,0\n0,1,0,0,1,0\n0,0,1,0,0,1\n")
    pts, nrm = load_contour(path)
    assert len(pts) == 3 and np.allclose(nrm[0], [1, 0, 0])
    path.write_text("x,y,z,nx,ny,nz\n1,0,0,1,0,0\n0,1,0,0,0,0\n0,0,1,0,0,1\n")
    with pytest.raises(ParseError) as info:
        load_contour(path)
    assert info.value.line == 3
    path.write_text("1,0,0,1,0,0\n0,1,0,0,1,0\n")
    with pytest.raises(TooFewPoints):
        load_contour(path)


def test_synthetic_octant_contour(tmp_path):
    t = np.linspace(0, math.pi / 2, 200, endpoint=False)
    arcs = [np.column_stack([np.cos(t), np.sin(t), 0 * t]),
            np.column_stack([0 * t, np.cos(t), np.sin(t)]),
            np.column_stack([np.sin(t), 0 * t, np.cos(t)])]
    pts = np.vstack(arcs)
    path = tmp_path / "octant.csv"
    write_contour(path, pts, pts)
    chain = ingest_contour(*load_contour(path), smoothing_passes=0)
    mu = shape_measures(build_line_polygon(chain), [3])[3]
    assert mu == pytest.approx(1.0, abs=1e-3)


def test_config_validation_and_hash(tmp_path):
    base = ExperimentConfig(experiment="x", p=[2, 3], levels=[1, 2])
    h0 = base.config_hash()
    assert ExperimentConfig(experiment="x", p=[2, 3], levels=[1, 2]).config_hash() == h0
    for change in ({"experiment": "y"}, {"surface": "torus"}, {"curve": "c"},
                   {"scheme": "line"}, {"p": [2, 4]}, {"levels": [1, 3]},
                   {"out": "o"}, {"seed": 1}, {"passes": 2}, {"workers": 2},
                   {"extra": {"k": "v"}}):
        kw = dict(experiment="x", p=[2, 3], levels=[1, 2])
        kw.update(change)
        assert ExperimentConfig(**kw).config_hash() != h0
    for bad in ({"p": [0]}, {"p": [17]}, {"levels": [2, 2]}, {"scheme": "spline"},
                {"extra": {"contour": str(tmp_path / "missing.csv")}}):
        with pytest.raises(UsageError):
            ExperimentConfig(**bad)


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# sweep\nexperiment = flower-sweep\np = 2..4\nlevels = 1,2,5\nomega = 6\n")
    cfg = ExperimentConfig.load(path)
    assert cfg.p == [2, 3, 4] and cfg.levels == [1, 2, 5]
    assert cfg.get("omega", kind=int) == 6
    path.write_text("experiment flower\n")
    with pytest.raises(ParseError) as info:
        ExperimentConfig.load(path)
    assert info.value.line == 1


def test_table_bytes_are_deterministic(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    table = ResultTable(["q", "err"], [[8, 0.1], [16, 1 / 3]], {"config_hash": "abc"})
    a = emit_table(table, tmp_path / "a.csv").read_bytes()
    b = emit_table(table, tmp_path / "b.csv").read_bytes()
    assert a == b
    assert a.decode().splitlines()[2] == "16,0.33333333333333331"
    back = read_table(tmp_path / "a.csv")
    assert back.rows[1][1] == 1 / 3
    meta = (tmp_path / "a.csv.meta.json").read_text()
    assert '"config_hash": "abc"' in meta and "1970-01-01" in meta
    with pytest.raises(ValueError):
        table.append([1])


def test_svg_plots(tmp_path):
    empty = emit_svg_plot([], tmp_path / "empty.svg", title="nothing")
    doc = xml.dom.minidom.parse(str(empty))
    assert doc.documentElement.tagName == "svg"
    h = np.array([0.5, 0.25, 0.125])
    path = emit_svg_plot([("p = 2", h, h**2)], tmp_path / "one.svg")
    again = emit_svg_plot([("p = 2", h, h**2)], tmp_path / "two.svg")
    xml.dom.minidom.parse(str(path))
    assert path.read_bytes() == again.read_bytes()
