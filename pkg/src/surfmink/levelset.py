"""Triangulated surfaces and piecewise linear zero-levelsets.

The zero set of a per-vertex field is cut out of a triangle mesh edge by
edge and chained into a closed :class:`~surfmink.approx.PolyChain` with the
negative region on the left of the traversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .approx import APPROXIMATE, PolyChain
from .errors import ChartSingularity, MultipleComponents, NonManifold, OpenChain

LEVELSET_EPS = 1e-12


def _face_cross(vertices, triangles):
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    return np.cross(b - a, c - a)


def area_weighted_normals(vertices, triangles):
    """Vertex normals as the area-weighted mean of incident face normals."""
    cross = _face_cross(vertices, triangles)
    acc = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(acc, triangles[:, k], cross)
    norm = np.linalg.norm(acc, axis=1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("vertex without incident area")
    return acc / norm


@dataclass(frozen=True)
class TriMesh:
    """Oriented triangle mesh with per-vertex unit normals.

    Every undirected edge must be used at most twice and with opposite
    directions. ``closed`` additionally requires exactly two uses.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_normals: np.ndarray | None = None
    closed: bool = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must have shape (n, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("triangles must have shape (m, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        self._check_manifold()
        if self.vertex_normals is None:
            nrm = area_weighted_normals(v, t)
        else:
            nrm = np.asarray(self.vertex_normals, dtype=float)
            if nrm.shape != v.shape:
                raise ValueError("vertex_normals must match vertices")
            nrm = nrm / np.linalg.norm(nrm, axis=1, keepdims=True)
        object.__setattr__(self, "vertex_normals", nrm)

    def _check_manifold(self):
        directed = {}
        for tri in self.triangles:
            for k in range(3):
                e = (int(tri[k]), int(tri[(k + 1) % 3]))
                if e[0] == e[1]:
                    raise NonManifold("degenerate triangle", edge=e)
                if e in directed:
                    raise NonManifold(f"edge {e} used twice in the same direction", edge=e)
                directed[e] = True
        for a, b in directed:
            if (b, a) not in directed and self.closed:
                raise NonManifold(f"edge {(a, b)} has a single incident triangle",
                                  edge=(a, b))

    @property
    def h(self) -> float:
        """Maximal edge length."""
        v, t = self.vertices, self.triangles
        lens = [np.linalg.norm(v[t[:, (k + 1) % 3]] - v[t[:, k]], axis=1) for k in range(3)]
        return float(np.max(lens))

    @property
    def area(self) -> float:
        return float(0.5 * np.sum(np.linalg.norm(_face_cross(self.vertices, self.triangles), axis=1)))


def _octahedron():
    v = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    t = np.array([[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
                  [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]])
    return v, t


def _subdivide(vertices, triangles):
    verts = list(vertices)
    mid = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in mid:
            mid[key] = len(verts)
            verts.append(0.5 * (vertices[a] + vertices[b]))
        return mid[key]

    out = []
    for a, b, c in triangles:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    return np.array(verts), np.array(out)


def make_sphere_mesh(level: int, radius: float = 1.0) -> TriMesh:
    """Octahedron refined ``level`` times by 1-to-4 splits, projected to the sphere."""
    if level < 0:
        raise ValueError("level must be non-negative")
    v, t = _octahedron()
    for _ in range(level):
        v, t = _subdivide(v, t)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return TriMesh(radius * v, t)


def planar_grid_mesh(n: int, extent: float = 1.0) -> TriMesh:
    """Open triangulated square ``[-extent, extent]^2`` in the plane ``z = 0``."""
    xs = np.linspace(-extent, extent, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    v = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    t = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return TriMesh(v, t, closed=False)


@dataclass(frozen=True)
class LevelsetField:
    """Per-vertex scalar field, nudged away from exact zeros at construction."""

    values: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.values, dtype=float).copy()
        if not np.all(np.isfinite(rho)):
            raise ValueError("levelset values must be finite")
        scale = max(float(np.max(np.abs(rho))), 1.0) if rho.size else 1.0
        eps = LEVELSET_EPS * scale
        rho[np.abs(rho) < eps] = eps
        object.__setattr__(self, "values", rho)


def flower_levelset(mesh: TriMesh, r0: float, a: float, omega: float,
                    center=(math.pi / 2, math.pi / 4)) -> LevelsetField:
    """Signed chart distance to a flower curve, negative inside."""
    x = mesh.vertices
    x0, y0 = center
    rad = np.linalg.norm(x, axis=1)
    theta = np.arccos(np.clip(x[:, 2] / rad, -1.0, 1.0)) - x0
    phi = np.arctan2(x[:, 1], x[:, 0]) - y0
    t = np.arctan2(phi, theta) + math.pi
    rho = np.hypot(theta, phi) - (r0 - a * np.sin(omega * t))
    field = LevelsetField(rho)
    cut = _crossing_triangles(mesh, field.values)
    near = np.unique(mesh.triangles[cut])
    pole = np.hypot(x[near, 0], x[near, 1]) / rad[near]
    if np.any(pole < 1e-8):
        raise ChartSingularity("zero set runs through the pole of the spherical chart")
    return field


def _crossing_triangles(mesh, rho):
    s = rho[mesh.triangles] < 0
    n_neg = s.sum(axis=1)
    return (n_neg > 0) & (n_neg < 3)


def extract_zero_levelset(mesh: TriMesh, field: LevelsetField) -> PolyChain:
    """Closed chain of edge cuts of the zero set, negative region on the left."""
    rho = field.values
    V, N = mesh.vertices, mesh.vertex_normals
    succ = {}
    for tri in mesh.triangles[_crossing_triangles(mesh, rho)]:
        start = end = None
        for k in range(3):
            i, j = int(tri[k]), int(tri[(k + 1) % 3])
            key = (min(i, j), max(i, j))
            if rho[i] < 0 < rho[j]:
                start = key
            elif rho[j] < 0 < rho[i]:
                end = key
        succ[start] = end
    if not succ:
        raise OpenChain("field has no zero crossing on the mesh")
    first = min(succ)
    order = [first]
    seen = {first}
    cur = first
    while True:
        nxt = succ.get(cur)
        if nxt is None:
            raise OpenChain(f"zero set leaves the mesh at edge {cur}")
        if nxt == first:
            break
        if nxt in seen:
            raise OpenChain(f"zero-set walk revisits edge {nxt}")
        seen.add(nxt)
        order.append(nxt)
        cur = nxt
    if len(order) != len(succ):
        raise MultipleComponents(
            f"zero set has more than one loop ({len(order)} of {len(succ)} cuts chained)"
        )
    e = np.array(order)
    ra, rb = rho[e[:, 0]][:, None], rho[e[:, 1]][:, None]
    w = ra / (ra - rb)
    pts = (rb * V[e[:, 0]] - ra * V[e[:, 1]]) / (rb - ra)
    nrm = (1 - w) * N[e[:, 0]] + w * N[e[:, 1]]
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    return PolyChain(pts, nrm, APPROXIMATE, mesh.h)


def _polygon_area(pts):
    cross = np.cross(pts[1:-1] - pts[0], pts[2:] - pts[0])
    return 0.5 * np.linalg.norm(cross.sum(axis=0))


def clipped_area(mesh: TriMesh, field: LevelsetField) -> float:
    """Mesh area of the region where the field is negative."""
    rho = field.values
    V, T = mesh.vertices, mesh.triangles
    neg = rho[T] < 0
    inside = neg.all(axis=1)
    area = 0.5 * float(np.sum(np.linalg.norm(_face_cross(V, T[inside]), axis=1)))
    for tri in T[_crossing_triangles(mesh, rho)]:
        poly = []
        for k in range(3):
            i, j = int(tri[k]), int(tri[(k + 1) % 3])
            if rho[i] < 0:
                poly.append(V[i])
            if (rho[i] < 0) != (rho[j] < 0):
                poly.append((rho[j] * V[i] - rho[i] * V[j]) / (rho[j] - rho[i]))
        area += _polygon_area(np.array(poly))
    return area
