"""Mesh and contour readers, experiment configs and result tables."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import IoError, ParseError, TooFewPoints, UsageError
from .levelset import TriMesh


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


# meshes -------------------------------------------------------------------


def _content_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.readlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    for no, line in enumerate(raw, start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def _floats(tokens, n, no, path):
    try:
        vals = [float(t) for t in tokens[:n]]
    except ValueError as exc:
        raise ParseError(f"expected {n} numbers", line=no, path=path) from exc
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise ParseError(f"expected {n} finite numbers", line=no, path=path)
    return vals


def _read_off(path):
    lines = _content_lines(path)
    try:
        no, head = next(lines)
    except StopIteration:
        raise ParseError("empty file", path=path) from None
    has_normals = head[0] == "NOFF"
    if head[0] not in ("OFF", "NOFF"):
        raise ParseError("missing OFF header", line=no, path=path)
    head = head[1:]
    if not head:
        try:
            no, head = next(lines)
        except StopIteration:
            raise ParseError("missing element counts", path=path) from None
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise ParseError("bad element counts", line=no, path=path) from None
    width = 6 if has_normals else 3
    verts, faces = [], []
    for _ in range(nv):
        try:
            no, tok = next(lines)
        except StopIteration:
            raise ParseError("unexpected end of vertex list", path=path) from None
        verts.append(_floats(tok, width, no, path))
    for _ in range(nf):
        try:
            no, tok = next(lines)
        except StopIteration:
            raise ParseError("unexpected end of face list", path=path) from None
        if tok[0] != "3" or len(tok) < 4:
            raise ParseError("only triangle faces are supported", line=no, path=path)
        try:
            faces.append([int(t) for t in tok[1:4]])
        except ValueError:
            raise ParseError("bad face index", line=no, path=path) from None
        if any(not 0 <= i < nv for i in faces[-1]):
            raise ParseError("face index out of range", line=no, path=path)
    v = np.array(verts, dtype=float).reshape(-1, width)
    return v[:, :3], np.array(faces, dtype=np.int64).reshape(-1, 3), (v[:, 3:] if has_normals else None)


def _read_obj(path):
    verts, normals, faces = [], [], []
    for no, tok in _content_lines(path):
        kind = tok[0]
        if kind == "v":
            verts.append(_floats(tok[1:], 3, no, path))
        elif kind == "vn":
            normals.append(_floats(tok[1:], 3, no, path))
        elif kind == "f":
            if len(tok) != 4:
                raise ParseError("only triangle faces are supported", line=no, path=path)
            idx = []
            for t in tok[1:]:
                try:
                    i = int(t.split("/")[0])
                except ValueError:
                    raise ParseError(f"bad face index {t!r}", line=no, path=path) from None
                i = i - 1 if i > 0 else len(verts) + i
                if not 0 <= i < len(verts):
                    raise ParseError("face index out of range", line=no, path=path)
                idx.append(i)
            faces.append(idx)
    nrm = np.array(normals, dtype=float) if len(normals) == len(verts) and normals else None
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3), nrm


def load_mesh(path) -> TriMesh:
    """Read a closed triangle mesh from an OFF or OBJ file.

    Normals found in the file are used when there is one per vertex,
    otherwise they are computed as area-weighted face averages.
    """
    path = Path(path)
    if path.suffix.lower() == ".obj":
        v, t, n = _read_obj(path)
    else:
        v, t, n = _read_off(path)
    if len(t) == 0:
        raise ParseError("mesh has no faces", path=path)
    return TriMesh(v, t, n)


# contours -----------------------------------------------------------------

CONTOUR_COLUMNS = ("x", "y", "z", "nx", "ny", "nz")


def load_contour(path):
    """Read a closed contour CSV with columns ``x,y,z,nx,ny,nz``.

    Returns
    -------
    points, normals : ndarray
        Arrays of shape ``(m, 3)``; normals are rescaled to unit length.
    """
    path = Path(path)
    pts, nrm = [], []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    for no, row in enumerate(rows, start=1):
        row = [c.strip() for c in row]
        if not row or not any(row) or row[0].startswith("#"):
            continue
        if no == 1 and row[0].lower() == "x":
            continue
        vals = _floats(row, 6, no, path)
        if len(row) != 6:
            raise ParseError("expected 6 columns", line=no, path=path)
        n = np.array(vals[3:])
        norm = np.linalg.norm(n)
        if norm < 1e-300:
            raise ParseError("normal has zero length", line=no, path=path)
        pts.append(vals[:3])
        # leave unit normals untouched so that files round-trip bit for bit
        nrm.append(n if abs(norm - 1.0) <= 4e-16 else n / norm)
    if len(pts) < 3:
        raise TooFewPoints(f"{path} holds {len(pts)} points, need 3")
    return np.array(pts), np.array(nrm)


def write_contour(path, points, normals):
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CONTOUR_COLUMNS)
            for x, n in zip(np.asarray(points), np.asarray(normals)):
                w.writerow([_fmt(float(c)) for c in (*x, *n)])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# configuration ------------------------------------------------------------


def _int_list(text):
    """Parse ``"2,3,4"`` or a range ``"2..6"``."""
    out = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


@dataclass
class ExperimentConfig:
    """Flat key-value experiment description.

    Unknown keys are kept verbatim in ``extra`` so that subcommands can read
    their own parameters (flower parameters, sweep values, file paths).
    """

    experiment: str = ""
    surface: str = ""
    curve: str = ""
    scheme: str = "geodesic"
    p: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    out: str = "."
    seed: int = 0
    passes: int = 1
    workers: int = 1
    extra: dict = field(default_factory=dict)

    _FILE_KEYS = ("contour", "mesh")

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scheme not in ("geodesic", "line"):
            raise UsageError(f"scheme must be 'geodesic' or 'line', got {self.scheme!r}")
        if any(not 1 <= p <= 16 for p in self.p):
            raise UsageError("ranks must lie in 1..16")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise UsageError("levels must be strictly increasing")
        if self.passes < 0 or self.workers < 1:
            raise UsageError("passes must be >= 0 and workers >= 1")
        for key in self._FILE_KEYS:
            if key in self.extra and not Path(self.extra[key]).exists():
                raise UsageError(f"{key} file {self.extra[key]!r} does not exist")

    @classmethod
    def from_mapping(cls, items: dict) -> "ExperimentConfig":
        kw = {"extra": {}}
        for key, value in items.items():
            if key in ("p", "levels"):
                kw[key] = _int_list(value) if isinstance(value, str) else list(value)
            elif key in ("seed", "passes", "workers"):
                kw[key] = int(value)
            elif key in ("experiment", "surface", "curve", "scheme", "out"):
                kw[key] = str(value)
            else:
                kw["extra"][key] = value
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        items = {}
        for no, tok in _content_lines(path):
            line = " ".join(tok)
            if "=" not in line:
                raise ParseError("expected 'key = value'", line=no, path=path)
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ParseError("empty key", line=no, path=path)
            items[key] = value
        return cls.from_mapping(items)

    def get(self, key, default=None, kind=str):
        value = self.extra.get(key, default)
        return value if value is None or not isinstance(value, str) else kind(value)

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


# result tables ------------------------------------------------------------


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("table rows must match the column count")

    def append(self, row):
        if len(row) != len(self.columns):
            raise ValueError("table rows must match the column count")
        self.rows.append(list(row))

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def emit_table(table: ResultTable, path) -> Path:
    """Write ``table`` as CSV plus a ``.meta.json`` sidecar.

    The CSV holds only the data, so identical inputs give identical bytes;
    the config hash and the timestamp go to the sidecar.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.columns)
            for row in table.rows:
                w.writerow([_fmt(c) for c in row])
        meta = dict(table.meta)
        stamp = os.environ.get("SOURCE_DATE_EPOCH")
        when = (_dt.datetime.fromtimestamp(int(stamp), _dt.timezone.utc) if stamp
                else _dt.datetime.now(_dt.timezone.utc))
        meta.setdefault("timestamp", when.isoformat(timespec="seconds"))
        with open(path.with_name(path.name + ".meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def read_table(path) -> ResultTable:
    """Read a CSV written by :func:`emit_table`; numbers come back as floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = [[float(c) for c in r] for r in rows[1:]]
    return ResultTable(rows[0], body)
