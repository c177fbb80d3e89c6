"""Surface backends: points, normals, tangent projection, exp/log maps.

Every backend is immutable. All geometric methods accept a single point of
shape ``(3,)`` or a batch of shape ``(n, 3)`` and broadcast accordingly.

The plane and the sphere have closed-form geodesics. Ellipsoids and tori
integrate the geodesic equation of the embedded surface,

    x'' = -(v^T H v / |grad F|^2) grad F,

with a classical RK4 step followed by a closest-point projection, and solve
the boundary value problem for the Riemannian log by Newton shooting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CutLocus, NoConvergence, StepFailure, UnsupportedOnMesh

SHOOT_TOL = 1e-10
SHOOT_MAXITER = 50
ODE_MIN_STEPS = 64
ODE_MAX_H = 0.01


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _unit(a):
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def tangent_basis(normal):
    """Return two unit vectors ``(e1, e2)`` with ``(e1, e2, normal)`` right-handed."""
    normal = np.asarray(normal, dtype=float)
    helper = np.zeros_like(normal)
    # pick the coordinate axis least aligned with the normal
    idx = np.argmin(np.abs(normal), axis=-1)
    np.put_along_axis(helper, idx[..., None], 1.0, axis=-1)
    e1 = _unit(helper - _dot(helper, normal)[..., None] * normal)
    e2 = np.cross(normal, e1)
    return e1, e2


@dataclass(frozen=True)
class SurfacePoint:
    position: np.ndarray
    normal: np.ndarray
    chart: tuple | None = None


@dataclass(frozen=True)
class TangentVector:
    base: SurfacePoint
    vec: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.vec, dtype=dtype)

    @property
    def norm(self):
        return float(np.linalg.norm(self.vec))


class Surface:
    """Common interface of all surface backends."""

    kind = "abstract"

    def normal(self, x):
        raise NotImplementedError

    def closest_point(self, x):
        raise NotImplementedError

    def residual(self, x):
        raise NotImplementedError

    def injectivity_bound(self) -> float:
        return math.inf

    def point(self, x, chart=None) -> SurfacePoint:
        x = np.asarray(x, dtype=float)
        return SurfacePoint(x, self.normal(x), chart)

    def project(self, v, x):
        """Orthogonal projection of ``v`` onto the tangent plane at ``x``."""
        n = self.normal(x)
        v = np.asarray(v, dtype=float)
        return v - _dot(v, n)[..., None] * n

    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y, guess=None, guard=True, return_end_velocity=False):
        raise NotImplementedError

    def distance(self, x, y, guard=True):
        return np.linalg.norm(self.log(x, y, guard=guard), axis=-1)

    def scaled(self, factor: float) -> "Surface":
        raise NotImplementedError


class Plane(Surface):
    """The plane ``z = 0`` with normal ``+e3``."""

    kind = "plane"

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        n = np.zeros_like(x)
        n[..., 2] = 1.0
        return n

    def closest_point(self, x):
        x = np.array(x, dtype=float)
        x[..., 2] = 0.0
        return x

    def residual(self, x):
        return np.asarray(x, dtype=float)[..., 2]

    def exp(self, x, v):
        return np.asarray(x, dtype=float) + np.asarray(v, dtype=float)

    def log(self, x, y, guess=None, guard=True, return_end_velocity=False):
        V = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        return (V, V.copy()) if return_end_velocity else V

    def scaled(self, factor):
        return self

    def chart(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        zero = np.zeros_like(u)
        one = np.ones_like(u)
        X = np.stack([u, v, zero], axis=-1)
        Xu = np.stack([one, zero, zero], axis=-1)
        Xv = np.stack([zero, one, zero], axis=-1)
        Z = np.zeros_like(X)
        return X, Xu, Xv, Z, Z, Z

    def __repr__(self):
        return "Plane()"


class ImplicitSurface(Surface):
    """Closed surface ``F(x) = 0`` with outward gradient.

    Subclasses provide ``_grad`` and ``_hess_quad`` (the quadratic form
    ``v^T H v`` of the Hessian of ``F``) plus a closest-point map.
    """

    def _grad(self, x):
        raise NotImplementedError

    def _hess_quad(self, x, v):
        raise NotImplementedError

    @property
    def scale(self) -> float:
        return 1.0

    def normal(self, x):
        return _unit(self._grad(np.asarray(x, dtype=float)))

    def _accel(self, x, v):
        g = self._grad(x)
        coef = self._hess_quad(x, v) / _dot(g, g)
        return -coef[..., None] * g

    def _flow_group(self, x, v, n):
        h = 1.0 / n
        speed = np.linalg.norm(v, axis=-1, keepdims=True)
        for _ in range(n):
            k1x = v
            k1v = self._accel(x, v)
            k2x = v + 0.5 * h * k1v
            k2v = self._accel(x + 0.5 * h * k1x, k2x)
            k3x = v + 0.5 * h * k2v
            k3v = self._accel(x + 0.5 * h * k2x, k3x)
            k4x = v + h * k3v
            k4v = self._accel(x + h * k3x, k4x)
            x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            x = self.closest_point(x)
            nrm = self.normal(x)
            v = v - _dot(v, nrm)[..., None] * nrm
            vn = np.linalg.norm(v, axis=-1, keepdims=True)
            v = np.where(vn > 0, v * (speed / np.where(vn > 0, vn, 1.0)), v)
        return x, v

    @staticmethod
    def step_count(length):
        # h <= ODE_MAX_H, rounded up to a multiple of ODE_MIN_STEPS to keep the
        # number of distinct step groups in a batch small
        length = np.asarray(length, dtype=float)
        blocks = np.maximum(1.0, np.ceil(length / (ODE_MAX_H * ODE_MIN_STEPS)))
        return (ODE_MIN_STEPS * blocks).astype(int)

    def flow(self, x, v, steps=None):
        """Integrate the geodesic ODE for unit time from ``x`` with velocity ``v``.

        Returns the end point and the end velocity. Rows are grouped by step
        count so every row is integrated exactly as it would be alone.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        x, v = np.broadcast_arrays(x, v)
        if steps is None:
            steps = self.step_count(np.linalg.norm(v, axis=-1) / self.scale)
        steps = np.broadcast_to(steps, x.shape[:1])
        out_x = np.empty_like(x)
        out_v = np.empty_like(v)
        for n in np.unique(steps):
            rows = steps == n
            out_x[rows], out_v[rows] = self._flow_group(x[rows], v[rows], int(n))
        if not (np.all(np.isfinite(out_x)) and np.all(np.isfinite(out_v))):
            raise StepFailure(f"geodesic integration diverged on {self!r}")
        return out_x, out_v

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        y, _ = self.flow(x, v)
        return y.reshape(np.broadcast_shapes(x.shape, np.shape(v)))

    def log(self, x, y, guess=None, guard=True, return_end_velocity=False):
        """Riemannian log by Newton shooting on the initial velocity.

        The unknown is the initial velocity in a tangent basis at ``x``; the
        residual is the miss distance projected on the tangent plane at
        ``y``. The Jacobian is formed by forward differences.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out_shape = np.broadcast_shapes(x.shape, y.shape)
        X = np.atleast_2d(np.broadcast_to(x, out_shape)).copy()
        Y = np.atleast_2d(np.broadcast_to(y, out_shape)).copy()
        nx = self.normal(X)
        e1, e2 = tangent_basis(nx)
        f1, f2 = tangent_basis(self.normal(Y))
        if guess is None:
            d = Y - X
            v0 = d - _dot(d, nx)[:, None] * nx
            vn = np.linalg.norm(v0, axis=-1, keepdims=True)
            v0 = v0 / np.where(vn > 0, vn, 1.0) * np.linalg.norm(d, axis=-1, keepdims=True)
        else:
            v0 = self.project(np.atleast_2d(np.broadcast_to(guess, out_shape)), X)
        c = np.stack([_dot(v0, e1), _dot(v0, e2)], axis=-1)
        tol = SHOOT_TOL * max(1.0, self.scale)
        done = np.zeros(len(X), dtype=bool)
        end_v = np.zeros_like(X)
        for _ in range(SHOOT_MAXITER + 1):
            act = np.flatnonzero(~done)
            if act.size == 0:
                break
            V = c[act, :1] * e1[act] + c[act, 1:] * e2[act]
            steps = self.step_count(np.linalg.norm(V, axis=-1) / self.scale)
            Z, VZ = self.flow(X[act], V, steps)
            miss = Z - Y[act]
            err = np.linalg.norm(miss, axis=-1)
            ok = err <= tol
            end_v[act[ok]] = VZ[ok]
            done[act[ok]] = True
            act, V, steps, Z, miss = act[~ok], V[~ok], steps[~ok], Z[~ok], miss[~ok]
            if act.size == 0:
                break
            cn = np.linalg.norm(c[act], axis=-1)
            eps = 1e-7 * np.maximum(cn, 1e-3 * self.scale)
            Z1, _ = self.flow(X[act], V + eps[:, None] * e1[act], steps)
            Z2, _ = self.flow(X[act], V + eps[:, None] * e2[act], steps)
            fa, fb = f1[act], f2[act]
            R = np.stack([_dot(miss, fa), _dot(miss, fb)], axis=-1)
            d1 = (Z1 - Z) / eps[:, None]
            d2 = (Z2 - Z) / eps[:, None]
            J = np.empty((act.size, 2, 2))
            J[:, 0, 0] = _dot(d1, fa)
            J[:, 1, 0] = _dot(d1, fb)
            J[:, 0, 1] = _dot(d2, fa)
            J[:, 1, 1] = _dot(d2, fb)
            det = np.linalg.det(J)
            jn = np.einsum("nij,nij->n", J, J)
            if np.any(np.abs(det) < 1e-10 * jn):
                raise CutLocus("shooting Jacobian is singular (conjugate point)")
            dc = -np.linalg.solve(J, R[..., None])[..., 0]
            # cap the update to keep the iteration in the basin of the start guess
            dn = np.linalg.norm(dc, axis=-1)
            cap = np.maximum(0.5 * cn, 0.05 * self.scale)
            dc *= np.minimum(1.0, cap / np.where(dn > 0, dn, 1.0))[:, None]
            c[act] += dc
        if not done.all():
            raise NoConvergence(
                f"log shooting on {self!r} did not converge in {SHOOT_MAXITER} iterations"
            )
        V = c[:, :1] * e1 + c[:, 1:] * e2
        if guard:
            dist = np.linalg.norm(V, axis=-1)
            bound = self.injectivity_bound()
            if np.any(dist >= bound):
                raise CutLocus(
                    f"geodesic distance {dist.max():.6g} exceeds injectivity bound {bound:.6g}"
                )
        V = V.reshape(out_shape)
        if return_end_velocity:
            return V, end_v.reshape(out_shape)
        return V


class Sphere(ImplicitSurface):
    """Sphere of given radius centred at the origin, with analytic exp/log."""

    kind = "sphere"

    def __init__(self, radius: float = 1.0):
        if not radius > 0:
            raise ValueError("sphere radius must be positive")
        self.radius = float(radius)

    @property
    def scale(self):
        return self.radius

    def _grad(self, x):
        return 2.0 * x

    def _hess_quad(self, x, v):
        return 2.0 * _dot(v, v)

    def normal(self, x):
        return _unit(np.asarray(x, dtype=float))

    def closest_point(self, x):
        return self.radius * _unit(np.asarray(x, dtype=float))

    def residual(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1) - self.radius

    def injectivity_bound(self):
        return math.pi * self.radius

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        speed = np.linalg.norm(v, axis=-1, keepdims=True)
        ang = speed / self.radius
        safe = np.where(speed > 0, speed, 1.0)
        return np.cos(ang) * x + self.radius * np.sin(ang) * v / safe

    def log(self, x, y, guess=None, guard=True, return_end_velocity=False):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r2 = self.radius**2
        perp = y - (_dot(x, y) / r2)[..., None] * x
        pn = np.linalg.norm(perp, axis=-1, keepdims=True)
        ang = np.arctan2(np.linalg.norm(np.cross(x, y), axis=-1), _dot(x, y))[..., None]
        if guard and np.any(ang[..., 0] >= math.pi * (1 - 1e-12)):
            raise CutLocus("antipodal points have no unique geodesic")
        V = self.radius * ang * perp / np.where(pn > 0, pn, 1.0)
        if return_end_velocity:
            # velocity at y of the geodesic with initial velocity V
            speed = np.linalg.norm(V, axis=-1, keepdims=True)
            u = V / np.where(speed > 0, speed, 1.0)
            end = (-np.sin(ang) * x / self.radius + np.cos(ang) * u) * speed
            return V, end
        return V

    def scaled(self, factor):
        return Sphere(self.radius * factor)

    def chart(self, theta, phi):
        return Ellipsoid(self.radius, self.radius, self.radius).chart(theta, phi)

    def __repr__(self):
        return f"Sphere({self.radius:g})"


class Ellipsoid(ImplicitSurface):
    """Axis-aligned ellipsoid ``sum (x_i / a_i)^2 = 1``."""

    kind = "ellipsoid"

    def __init__(self, a1: float, a2: float, a3: float):
        axes = np.array([a1, a2, a3], dtype=float)
        if not np.all(axes > 0):
            raise ValueError("ellipsoid semi-axes must be positive")
        self.axes = axes
        self._inv2 = 1.0 / axes**2

    @property
    def scale(self):
        return float(self.axes.min())

    def _F(self, x):
        return _dot(x * x, np.broadcast_to(self._inv2, x.shape)) - 1.0

    def _grad(self, x):
        return 2.0 * x * self._inv2

    def _hess_quad(self, x, v):
        return 2.0 * _dot(v * v, np.broadcast_to(self._inv2, v.shape))

    def closest_point(self, x):
        # Newton along the gradient; lands on the surface, not exactly the foot point
        x = np.array(x, dtype=float)
        for _ in range(8):
            F = self._F(x)
            if np.all(np.abs(F) < 1e-15):
                break
            g = self._grad(x)
            x = x - (F / _dot(g, g))[..., None] * g
        return x

    def residual(self, x):
        return self._F(np.asarray(x, dtype=float))

    def injectivity_bound(self):
        return math.pi * float(self.axes.min()) / 2.0

    def scaled(self, factor):
        return Ellipsoid(*(self.axes * factor))

    def chart(self, theta, phi):
        """Spherical-angle chart and its first and second derivatives."""
        a1, a2, a3 = self.axes
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        z = np.zeros_like(st * sp)
        X = np.stack([a1 * st * cp, a2 * st * sp, a3 * ct + z], axis=-1)
        Xt = np.stack([a1 * ct * cp, a2 * ct * sp, -a3 * st + z], axis=-1)
        Xp = np.stack([-a1 * st * sp, a2 * st * cp, z], axis=-1)
        Xtt = np.stack([-a1 * st * cp, -a2 * st * sp, -a3 * ct + z], axis=-1)
        Xtp = np.stack([-a1 * ct * sp, a2 * ct * cp, z], axis=-1)
        Xpp = np.stack([-a1 * st * cp, -a2 * st * sp, z], axis=-1)
        return X, Xt, Xp, Xtt, Xtp, Xpp

    def __repr__(self):
        a1, a2, a3 = self.axes
        return f"Ellipsoid({a1:g}, {a2:g}, {a3:g})"


class Torus(ImplicitSurface):
    """Torus of revolution about the z-axis, major radius R, tube radius r."""

    kind = "torus"

    def __init__(self, R: float = 2.0, r: float = 1.375):
        if not R > r > 0:
            raise ValueError("torus radii must satisfy R > r > 0")
        self.R = float(R)
        self.r = float(r)

    @property
    def scale(self):
        return self.r

    def _grad(self, x):
        rho = np.hypot(x[..., 0], x[..., 1])
        k = 2.0 * (rho - self.R) / rho
        return np.stack([k * x[..., 0], k * x[..., 1], 2.0 * x[..., 2]], axis=-1)

    def _hess_quad(self, x, v):
        rho = np.hypot(x[..., 0], x[..., 1])
        vx = v[..., 0] * x[..., 0] + v[..., 1] * x[..., 1]
        vh2 = v[..., 0] ** 2 + v[..., 1] ** 2
        return 2.0 * (
            vx**2 / rho**2 + (rho - self.R) * (vh2 / rho - vx**2 / rho**3)
        ) + 2.0 * v[..., 2] ** 2

    def closest_point(self, x):
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])[..., None]
        c = np.concatenate([self.R * x[..., :2] / rho, np.zeros_like(rho)], axis=-1)
        return c + self.r * _unit(x - c)

    def residual(self, x):
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        return np.hypot(rho - self.R, x[..., 2]) - self.r

    def injectivity_bound(self):
        # half the inner equator length caps the injectivity radius as well
        return min(math.pi * self.r / 2.0, math.pi * (self.R - self.r))

    def scaled(self, factor):
        return Torus(self.R * factor, self.r * factor)

    def chart(self, phi, theta):
        """Chart ``(phi, theta) -> ((R + r cos theta) cos phi, ..., r sin theta)``."""
        R, r = self.R, self.r
        sp, cp = np.sin(phi), np.cos(phi)
        st, ct = np.sin(theta), np.cos(theta)
        w = R + r * ct
        z = np.zeros_like(sp * st)
        X = np.stack([w * cp, w * sp, r * st + z], axis=-1)
        Xp = np.stack([-w * sp, w * cp, z], axis=-1)
        Xt = np.stack([-r * st * cp, -r * st * sp, r * ct + z], axis=-1)
        Xpp = np.stack([-w * cp, -w * sp, z], axis=-1)
        Xpt = np.stack([r * st * sp, -r * st * cp, z], axis=-1)
        Xtt = np.stack([-r * ct * cp, -r * ct * sp, -r * st + z], axis=-1)
        return X, Xp, Xt, Xpp, Xpt, Xtt

    def __repr__(self):
        return f"Torus(R={self.R:g}, r={self.r:g})"


@dataclass(frozen=True)
class MeshSurface(Surface):
    """Triangulated surface; only positions and averaged vertex normals."""

    mesh: object = field(repr=False)
    kind = "trimesh"

    def normal(self, x):
        idx = self.vertex_index(x)
        return self.mesh.vertex_normals[idx]

    def vertex_index(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = np.linalg.norm(self.mesh.vertices[None, :, :] - x[:, None, :], axis=-1)
        idx = np.argmin(d, axis=1)
        if np.any(d[np.arange(len(x)), idx] > 1e-12):
            raise UnsupportedOnMesh("normals are only defined at mesh vertices")
        return idx if np.ndim(x) > 1 and len(idx) > 1 else idx[0]

    def closest_point(self, x):
        raise UnsupportedOnMesh("closest-point projection is not available on meshes")

    def residual(self, x):
        raise UnsupportedOnMesh("meshes have no implicit equation")

    def exp(self, x, v):
        raise UnsupportedOnMesh("exp map is not available on triangulated surfaces")

    def log(self, x, y, guess=None, guard=True, return_end_velocity=False):
        raise UnsupportedOnMesh("log map is not available on triangulated surfaces")


# module-level operations ----------------------------------------------------


def project_to_tangent(v, at: SurfacePoint) -> TangentVector:
    """Return ``v - <v, n> n`` at the given surface point."""
    v = np.asarray(v, dtype=float)
    n = np.asarray(at.normal, dtype=float)
    return TangentVector(at, v - np.dot(v, n) * n)


def geodesic_log(surface: Surface, x, y, guard=True) -> TangentVector:
    px = x if isinstance(x, SurfacePoint) else surface.point(x)
    py = y.position if isinstance(y, SurfacePoint) else np.asarray(y, dtype=float)
    return TangentVector(px, surface.log(px.position, py, guard=guard))


def geodesic_distance(surface: Surface, x, y, guard=True) -> float:
    return geodesic_log(surface, x, y, guard=guard).norm


def solve_geodesic(surface: Surface, x, direction, length: float) -> SurfacePoint:
    """Walk along the geodesic from ``x`` in unit ``direction`` for ``length``."""
    x = x.position if isinstance(x, SurfacePoint) else np.asarray(x, dtype=float)
    d = np.asarray(direction.vec if isinstance(direction, TangentVector) else direction,
                   dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-10:
        raise ValueError("initial direction must have unit length")
    if length < 0:
        raise ValueError("length must be non-negative")
    return surface.point(surface.exp(x, length * d))
