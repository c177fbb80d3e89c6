"""Closed parametrized curves on surfaces.

A :class:`ParamCurve` carries position, velocity and acceleration
evaluators for a general-speed parametrization on ``[0, T]``. Arc-length
quantities are obtained from a Gauss-Legendre cell table, which keeps
cumulative integrals accurate to round-off rather than to the O(h^2) of a
cumulative trapezoid.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateVelocity
from .surfaces import Surface, _dot

ARC_TABLE_SIZE = 8192
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class CellIntegral:
    """Cumulative integral ``u -> int_0^u g`` of a smooth function on ``[0, T]``."""

    def __init__(self, g, T: float, cells: int = ARC_TABLE_SIZE):
        self.g = g
        self.T = float(T)
        self.h = self.T / cells
        self.cells = cells
        left = np.arange(cells) * self.h
        nodes = left[:, None] + 0.5 * self.h * (_GL_X[None, :] + 1.0)
        vals = g(nodes.ravel()).reshape(nodes.shape)
        cell = 0.5 * self.h * vals @ _GL_W
        self.table = np.concatenate([[0.0], np.cumsum(cell)])

    @property
    def total(self) -> float:
        return float(self.table[-1])

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        j = np.clip(np.floor(u / self.h).astype(int), 0, self.cells - 1)
        a = j * self.h
        half = 0.5 * (u - a)
        nodes = a[..., None] + half[..., None] * (_GL_X + 1.0)
        part = half * (self.g(nodes.reshape(-1)).reshape(nodes.shape) @ _GL_W)
        return self.table[j] + part


class ParamCurve:
    """Closed curve ``u -> gamma(u)`` on a surface, ``u`` in ``[0, T]``.

    Parameters
    ----------
    surface : Surface
        Surface the curve lies on; supplies the normal field.
    position, velocity, acceleration : callable
        Vectorized evaluators ``(m,) -> (m, 3)``.
    period : float
        Parameter length ``T``.
    """

    def __init__(self, surface: Surface, position, velocity, acceleration,
                 period: float = 2 * math.pi, validate: bool = True):
        self.surface = surface
        self.position = position
        self.velocity = velocity
        self.acceleration = acceleration
        self.period = float(period)
        if validate:
            self._validate()
        self.arc = CellIntegral(self.speed, self.period)

    def _validate(self):
        ends = self.position(np.array([0.0, self.period]))
        if np.linalg.norm(ends[0] - ends[1]) > 1e-10:
            raise ValueError("curve is not closed")
        u = np.linspace(0.0, self.period, 4096, endpoint=False)
        if np.min(self.speed(u)) < 1e-10:
            raise DegenerateVelocity("curve velocity vanishes on the sample grid")

    def speed(self, u):
        return np.linalg.norm(self.velocity(np.asarray(u, dtype=float)), axis=-1)

    @property
    def length(self) -> float:
        return self.arc.total

    def frame(self, u):
        """Right-handed frame ``(nu, tau, n)`` with ``nu = tau x n``."""
        u = np.asarray(u, dtype=float)
        vel = self.velocity(u)
        sp = np.linalg.norm(vel, axis=-1, keepdims=True)
        if np.any(sp < 1e-10):
            raise DegenerateVelocity("curve velocity vanishes")
        tau = vel / sp
        n = self.surface.normal(self.position(u))
        # remove round-off so that the frame is exactly orthonormal
        tau = tau - _dot(tau, n)[..., None] * n
        tau /= np.linalg.norm(tau, axis=-1, keepdims=True)
        nu = np.cross(tau, n)
        return nu, tau, n

    def geodesic_curvature_u(self, u):
        """``k_g = -gamma_ss . nu`` evaluated at parameter values ``u``."""
        u = np.asarray(u, dtype=float)
        vel = self.velocity(u)
        acc = self.acceleration(u)
        sp2 = _dot(vel, vel)
        if np.any(sp2 < 1e-20):
            raise DegenerateVelocity("curve velocity vanishes")
        nu, tau, _ = self.frame(u)
        # arc-length acceleration, tangential part of acc removed
        acc_s = (acc - _dot(acc, tau)[..., None] * tau) / sp2[..., None]
        return -_dot(acc_s, nu)

    def param_at(self, s):
        """Parameter values at arc lengths ``s`` (Newton on the cell table)."""
        s = np.asarray(s, dtype=float)
        L = self.length
        s_mod = np.mod(s, L)
        wraps = np.floor_divide(s, L)
        tab = self.arc.table
        j = np.clip(np.searchsorted(tab, s_mod, side="right") - 1, 0, self.arc.cells - 1)
        frac = (s_mod - tab[j]) / np.maximum(tab[j + 1] - tab[j], 1e-300)
        u = (j + frac) * self.arc.h
        for _ in range(30):
            err = self.arc(u) - s_mod
            u = u - err / self.speed(u)
            if np.all(np.abs(err) < 1e-14 * max(1.0, L)):
                break
        return u + wraps * self.period

    def geodesic_curvature(self, s):
        return self.geodesic_curvature_u(self.param_at(s))


def chart_curve(surface, coords, period=2 * math.pi, validate=True) -> ParamCurve:
    """Curve given in a surface chart.

    ``coords(t)`` returns ``((a, a', a''), (b, b', b''))``, the two chart
    coordinates and their first two derivatives.
    """

    def position(t):
        (a, _, _), (b, _, _) = coords(t)
        return surface.chart(a, b)[0]

    def velocity(t):
        (a, da, _), (b, db, _) = coords(t)
        _, Xa, Xb, _, _, _ = surface.chart(a, b)
        return Xa * da[..., None] + Xb * db[..., None]

    def acceleration(t):
        (a, da, dda), (b, db, ddb) = coords(t)
        _, Xa, Xb, Xaa, Xab, Xbb = surface.chart(a, b)
        return (Xaa * (da * da)[..., None] + 2.0 * Xab * (da * db)[..., None]
                + Xbb * (db * db)[..., None] + Xa * dda[..., None] + Xb * ddb[..., None])

    return ParamCurve(surface, position, velocity, acceleration, period, validate)


def flower_coords(r0, a, omega, center=(math.pi / 2, math.pi / 4), phase=0.0):
    """Chart coordinates of the flower curve ``r(t) = r0 - a sin(omega (t + phase))``."""
    x0, y0 = center

    def coords(t):
        t = np.asarray(t, dtype=float)
        w = omega * (t + phase)
        r = r0 - a * np.sin(w)
        dr = -a * omega * np.cos(w)
        ddr = a * omega**2 * np.sin(w)
        c, s = np.cos(t), np.sin(t)
        th = (x0 + r * c, dr * c - r * s, ddr * c - 2 * dr * s - r * c)
        ph = (y0 + r * s, dr * s + r * c, ddr * s + 2 * dr * c - r * s)
        return th, ph

    return coords


def flower_curve(surface, r0=0.7, a=0.2, omega=3, center=(math.pi / 2, math.pi / 4),
                 phase=0.0) -> ParamCurve:
    """Flower curve in the spherical-angle chart of a sphere or ellipsoid."""
    return chart_curve(surface, flower_coords(r0, a, omega, center, phase))


def geodesic_circle(sphere, polar_radius: float) -> ParamCurve:
    """Circle of constant polar angle, traversed positively about the north pole."""

    def coords(t):
        t = np.asarray(t, dtype=float)
        z = np.zeros_like(t)
        return (polar_radius + z, z, z), (t, 1.0 + z, z)

    return chart_curve(sphere, coords)


def planar_circle(radius: float = 1.0, center=(0.0, 0.0)) -> ParamCurve:
    from .surfaces import Plane

    cx, cy = center

    def coords(t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(t), np.sin(t)
        return (cx + radius * c, -radius * s, -radius * c), (cy + radius * s, radius * c, -radius * s)

    return chart_curve(Plane(), coords)


def geodesic_curvature(curve: ParamCurve, s) -> np.ndarray:
    """Geodesic curvature at arc-length positions ``s``."""
    return curve.geodesic_curvature(s)
