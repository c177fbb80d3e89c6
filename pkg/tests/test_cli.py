import math

import numpy as np
import pytest

from surfmink.cli import main
from surfmink.fileio import read_table, write_contour


@pytest.fixture(autouse=True)
def fixed_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    monkeypatch.delenv("SURFMINK_OUT", raising=False)


def test_regular_polygons_on_the_plane(tmp_path):
    rc = main(["regular-polygons", "--surface", "plane", "--levels", "4",
               "--p", "2..4", "--out", str(tmp_path)])
    assert rc == 0
    table = read_table(tmp_path / "regular_polygons.csv")
    mu = dict(zip(table.column("p"), table.column("mu")))
    assert mu[4] == pytest.approx(1.0, abs=1e-12)
    assert mu[2] < 1e-12
    assert (tmp_path / "regular_polygons.csv.meta.json").exists()


def test_rerun_is_byte_identical(tmp_path):
    runs = []
    for _ in range(2):
        assert main(["transport-demo", "--out", str(tmp_path)]) == 0
        runs.append([(tmp_path / name).read_bytes() for name in
                     ("transport_demo.csv", "transport_demo.csv.meta.json")])
    assert runs[0] == runs[1]
    # the output directory is part of the config, so only the data must agree
    assert main(["transport-demo", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "transport_demo.csv").read_bytes() == runs[0][0]


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("SURFMINK_OUT", str(tmp_path / "env"))
    assert main(["transport-demo", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "transport_demo.csv").exists()
    assert not (tmp_path / "flag").exists()


def test_levelset_study_writes_svg(tmp_path):
    assert main(["levelset-study", "--levels", "1,2,3", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "levelset_errors.svg").read_text().lstrip().startswith("<?xml")


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["levelset-study", "--levels", "1,2", "--out", str(tmp_path)]) == 2
    assert "levelset" in capsys.readouterr().err
    assert main(["regular-polygons", "--p", "0", "--out", str(tmp_path)]) == 2
    assert main(["contour", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2
    assert main(["transport-demo", "--config", str(tmp_path / "nope.cfg")]) == 2
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 2


def test_computation_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0,0,0,0,1\n1,0,0,0,0,1\n2,0,0,0,0,0\n")
    assert main(["contour", str(bad), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "ParseError" in err and "bad.csv:3:" in err


def test_contour_command(tmp_path):
    t = np.linspace(0, 2 * math.pi, 60, endpoint=False)
    pts = np.column_stack([np.cos(t), np.sin(t), 0 * t])
    path = tmp_path / "circle.csv"
    write_contour(path, pts, np.tile([0, 0, 1.0], (60, 1)))
    assert main(["contour", str(path), "--passes", "0", "--out", str(tmp_path)]) == 0
    table = read_table(tmp_path / "contour.csv")
    mu = dict(zip(table.column("p"), table.column("mu")))
    assert set(mu) == {2, 3, 4, 5, 6}
    assert max(mu.values()) < 1e-12


def test_config_file_supplies_settings(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"out = {tmp_path / 'cfg'}\nsurface = sphere\nlevels = 3,5\np = 5\n")
    assert main(["regular-polygons", "--config", str(cfg)]) == 0
    table = read_table(tmp_path / "cfg" / "regular_polygons.csv")
    assert table.column("q") == [3.0, 5.0] and table.column("p") == [5.0, 5.0]
    assert table.column("mu") == pytest.approx([0.0, 1.0], abs=1e-8)
