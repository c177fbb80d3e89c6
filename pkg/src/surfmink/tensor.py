"""Irreducible surface Minkowski tensors of closed curves.

Turned (defect-corrected) transport maps the co-normal at arc position
``s`` into the frame at the fiducial position ``t`` rotated by

    f(s, t) = 2 pi / kappa * int_t^s k_g,

where ``kappa`` is the total geodesic curvature. The rank-``p`` irreducible
tensor then has the two independent components

    g1 = int cos(p f) ds,    g2 = int sin(p f) ds,

and ``mu_p = |(g1, g2)| / L``. Geodesic polygons concentrate ``k_g`` in the
vertex turning angles, which turns the integrals into finite sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InadmissibleTotalAngle, W0Unavailable
from .surfaces import TangentVector, SurfacePoint

EPS_ADM = 1e-6
EPS_DIR = 1e-12

DEFECT_CORRECTED = "defect_corrected"
PARALLEL = "parallel"
_MODES = (DEFECT_CORRECTED, PARALLEL)


def wrap_angle(a):
    """Map angles to ``(-pi, pi]``."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + math.pi, 2 * math.pi) - math.pi
    return np.where(w == -math.pi, math.pi, w)


@dataclass(frozen=True)
class Frame:
    """Right-handed tangent frame ``(nu, tau, n)`` at the fiducial point."""

    nu: np.ndarray
    tau: np.ndarray
    n: np.ndarray
    position: np.ndarray | None = None

    def vector(self, angle):
        """Tangent vector ``cos(angle) nu + sin(angle) tau``."""
        angle = np.asarray(angle, dtype=float)[..., None]
        return np.cos(angle) * self.nu + np.sin(angle) * self.tau

    def transformed(self, rotation=None, scale=1.0):
        rot = np.eye(3) if rotation is None else np.asarray(rotation)
        pos = None if self.position is None else scale * rot @ self.position
        return Frame(rot @ self.nu, rot @ self.tau, rot @ self.n, pos)


def _check_mode(mode):
    if mode not in _MODES:
        raise ValueError(f"unknown transport mode {mode!r}; expected one of {_MODES}")


def _check_admissible(total):
    if not total > EPS_ADM:
        raise InadmissibleTotalAngle(
            f"total turning {total:.6g} <= {EPS_ADM:g}: enclosed curvature is not below 2*pi"
        )


@dataclass(frozen=True)
class PolygonData:
    """Geodesic polygon reduced to its turning angles and side lengths.

    ``turning_angles[i]`` is the signed turning angle at the *end* of side
    ``i``, i.e. between side ``i`` and side ``i + 1`` (cyclically). Side 0
    starts at the fiducial point.
    """

    turning_angles: np.ndarray
    lengths: np.ndarray
    frame: Frame | None = None
    positive: bool = True

    def __post_init__(self):
        a = np.asarray(self.turning_angles, dtype=float)
        l = np.asarray(self.lengths, dtype=float)
        object.__setattr__(self, "turning_angles", a)
        object.__setattr__(self, "lengths", l)
        if a.ndim != 1 or a.shape != l.shape:
            raise ValueError("turning_angles and lengths must be 1-d of equal size")
        if a.size < 3:
            raise ValueError(f"a polygon needs at least 3 sides, got {a.size}")
        if not np.all(l > 0):
            raise ValueError("side lengths must be positive")

    @property
    def q(self) -> int:
        return self.lengths.size

    @property
    def length(self) -> float:
        return float(self.lengths.sum())

    @property
    def total_angle(self) -> float:
        return float(self.turning_angles.sum())

    def rolled(self, k: int) -> "PolygonData":
        """Same polygon with side ``k`` as the first side (frame dropped)."""
        return PolygonData(np.roll(self.turning_angles, -k), np.roll(self.lengths, -k),
                           None, self.positive)


@dataclass(frozen=True)
class SmoothCurveData:
    """Geodesic curvature samples of a smooth closed curve on an arc grid.

    Attributes
    ----------
    s : ndarray
        Arc positions of the quadrature nodes in ``[0, L)``.
    kg : ndarray
        Geodesic curvature at the nodes.
    weights : ndarray
        Quadrature weights in arc length, summing to ``L``.
    phi : ndarray
        Accumulated curvature ``int_0^s k_g`` at the nodes.
    length, total_curvature : float
    frame : Frame, optional
        Frame at ``s = 0``.
    """

    s: np.ndarray
    kg: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    length: float
    total_curvature: float
    frame: Frame | None = None
    accumulated: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.s.size < 16:
            raise ValueError("need at least 16 grid points")
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("arc grid must be strictly increasing")

    @classmethod
    def from_curve(cls, curve, n: int = 8192) -> "SmoothCurveData":
        """Sample a :class:`~surfmink.curves.ParamCurve` on ``n`` uniform parameter nodes.

        The integrands are smooth and periodic in the parameter, so the
        trapezoid weights ``speed * T / n`` integrate them spectrally.
        """
        from .curves import CellIntegral

        T = curve.period
        u = np.arange(n) * (T / n)
        speed = curve.speed(u)
        kg = curve.geodesic_curvature_u(u)
        cum = CellIntegral(lambda x: curve.geodesic_curvature_u(x) * curve.speed(x), T)
        s = curve.arc(u)
        nu, tau, nrm = curve.frame(np.array([0.0]))
        frame = Frame(nu[0], tau[0], nrm[0], curve.position(np.array([0.0]))[0])

        def accumulated(x):
            return cum(curve.param_at(x))

        return cls(s, kg, speed * (T / n), cum(u), curve.length, cum.total, frame, accumulated)

    @classmethod
    def from_samples(cls, s, kg, length, frame=None) -> "SmoothCurveData":
        """Build from curvature samples on a periodic arc grid ``0 <= s < L``."""
        s = np.asarray(s, dtype=float)
        kg = np.asarray(kg, dtype=float)
        ext = np.append(s, length)
        ds = np.diff(ext)
        weights = 0.5 * (ds + np.roll(ds, 1))
        k_ext = np.append(kg, kg[0])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * ds * (k_ext[1:] + k_ext[:-1]))])
        total = float(cum[-1])
        periodic = CubicSpline(ext, cum - total * ext / length, bc_type="periodic")

        def accumulated(x):
            return periodic(x) + total * np.asarray(x) / length

        return cls(s, kg, weights, cum[:-1], float(length), total, frame, accumulated)

    def accumulated_curvature(self, x):
        """``int_0^x k_g`` for arbitrary ``x``, extended periodically by ``kappa``."""
        x = np.asarray(x, dtype=float)
        L = self.length
        # keep x == L on the upper branch so that a full loop accumulates kappa
        wraps = np.floor(x / L)
        xm = x - wraps * L
        return self.accumulated(xm) + wraps * self.total_curvature


@dataclass(frozen=True)
class IrreducibleMT:
    """Independent components ``(g1, g2)`` of a rank-``p`` irreducible tensor."""

    p: int
    g1: float
    g2: float
    length: float
    frame: Frame | None = None

    @property
    def g(self) -> np.ndarray:
        return np.array([self.g1, self.g2])

    @property
    def mu(self) -> float:
        return math.hypot(self.g1, self.g2) / self.length


@dataclass(frozen=True)
class ShapeSpectrum:
    p: int
    mu: float
    eigenvalue: float
    angles_plus: np.ndarray
    angles_minus: np.ndarray
    direction_defined: bool
    eigenvectors_plus: np.ndarray | None = None
    eigenvectors_minus: np.ndarray | None = None


@dataclass(frozen=True)
class MinkowskiFunctionals:
    W0: float | None
    W1: float
    W2: float


# polygons -------------------------------------------------------------------


def polygon_f_angles(data: PolygonData, mode: str = DEFECT_CORRECTED) -> np.ndarray:
    """Transport angles ``f_i`` of the sides, ``f_0 = 0``.

    With the turned transport, ``f_i = 2 pi / sum(alpha) * sum_{j<i} alpha_j``.
    With plain parallel transport the prefactor is dropped.
    """
    _check_mode(mode)
    partial = np.concatenate([[0.0], np.cumsum(data.turning_angles[:-1])])
    if mode == PARALLEL:
        return partial
    total = data.total_angle
    _check_admissible(total)
    return (2 * math.pi / total) * partial


def _loop_angle(data, mode):
    if mode == PARALLEL:
        return data.total_angle
    return 2 * math.pi


def polygon_components(data: PolygonData, p: int, offset: float = 0.0,
                       mode: str = DEFECT_CORRECTED) -> IrreducibleMT:
    """Components ``g = sum_i l_i (cos p f_i, sin p f_i)``.

    ``offset`` moves the fiducial point a distance ``offset`` along side 0;
    the part of side 0 behind the fiducial point is then reached only after
    a full loop.
    """
    if p < 1:
        raise ValueError("rank p must be >= 1")
    f = polygon_f_angles(data, mode)
    l = data.lengths.copy()
    if not 0.0 <= offset < l[0]:
        raise ValueError("offset must lie on the first side")
    l[0] -= offset
    z = np.sum(l * np.exp(1j * p * f)) + offset * np.exp(1j * p * _loop_angle(data, mode))
    return IrreducibleMT(p, float(z.real), float(z.imag), data.length, data.frame)


# smooth curves ----------------------------------------------------------------


def smooth_f(data: SmoothCurveData, s, t: float = 0.0, mode: str = DEFECT_CORRECTED):
    """Transport angle ``f(s, t)`` for ``s`` in ``[t, t + L]``."""
    _check_mode(mode)
    s = np.asarray(s, dtype=float)
    phi = data.accumulated_curvature(s) - data.accumulated_curvature(t)
    if mode == PARALLEL:
        return phi
    _check_admissible(data.total_curvature)
    return (2 * math.pi / data.total_curvature) * phi


def smooth_components(data: SmoothCurveData, p: int, t: float = 0.0,
                      mode: str = DEFECT_CORRECTED) -> IrreducibleMT:
    """Quadrature of ``(cos p f, sin p f)`` over one loop starting at ``t``."""
    if p < 1:
        raise ValueError("rank p must be >= 1")
    _check_mode(mode)
    phi_t = float(data.accumulated_curvature(t)) if t else 0.0
    phi = data.phi - phi_t
    # nodes behind the fiducial point are reached after a full loop
    phi = np.where(data.s < t, phi + data.total_curvature, phi)
    if mode == DEFECT_CORRECTED:
        _check_admissible(data.total_curvature)
        f = (2 * math.pi / data.total_curvature) * phi
    else:
        f = phi
    z = np.sum(data.weights * np.exp(1j * p * f))
    frame = data.frame if not t else None
    return IrreducibleMT(p, float(z.real), float(z.imag), data.length, frame)


# spectrum ---------------------------------------------------------------------


def _unit_circle_angles(a):
    """Angles in ``[0, 2 pi)``; round-off just below ``2 pi`` maps to 0."""
    a = np.mod(a, 2 * math.pi)
    a[a > 2 * math.pi * (1 - 1e-14)] = 0.0
    return a


def eigen_spectrum(mt: IrreducibleMT) -> ShapeSpectrum:
    """Eigenvalue, normalized eigenvalue and eigen-directions.

    Angles are measured from ``nu`` towards ``tau`` at the fiducial point
    and reported in ``[0, 2 pi)``; consecutive angles differ by ``2 pi / p``.
    Below ``EPS_DIR * L`` the direction is flagged undefined.
    """
    if not mt.length > 0:
        raise ValueError("curve length must be positive")
    p = mt.p
    lam = math.hypot(mt.g1, mt.g2)
    base = math.atan2(mt.g2, mt.g1)
    n = np.arange(p)
    plus = _unit_circle_angles(base / p + 2 * math.pi * n / p)
    minus = _unit_circle_angles((base + math.pi) / p + 2 * math.pi * n / p)
    defined = lam >= EPS_DIR * mt.length
    ev_plus = ev_minus = None
    if mt.frame is not None and defined:
        ev_plus = mt.frame.vector(plus)
        ev_minus = mt.frame.vector(minus)
    if not defined:
        plus = np.full(p, np.nan)
        minus = np.full(p, np.nan)
    return ShapeSpectrum(p, min(1.0, lam / mt.length), lam, plus, minus, defined,
                         ev_plus, ev_minus)


def shape_measures(data, ps=range(2, 7), mode: str = DEFECT_CORRECTED) -> dict:
    """``{p: mu_p}`` for polygon or smooth-curve data."""
    comp = polygon_components if isinstance(data, PolygonData) else smooth_components
    return {p: comp(data, p, mode=mode).mu for p in ps}


# transport --------------------------------------------------------------------


def transport_angle(data, s, t: float = 0.0, mode: str = DEFECT_CORRECTED):
    """Angle of the co-normal at ``s`` after transport to ``t``.

    For polygons ``t`` must be 0 (start of side 0) and ``s = L`` denotes the
    completed loop.
    """
    if isinstance(data, PolygonData):
        if t != 0.0:
            raise ValueError("polygon transport is defined into the start of side 0")
        s = np.asarray(s, dtype=float)
        f = polygon_f_angles(data, mode)
        edges = np.cumsum(data.lengths)
        idx = np.searchsorted(edges, s, side="right")
        full = np.append(f, _loop_angle(data, mode))
        return full[np.minimum(idx, data.q)]
    return smooth_f(data, s, t, mode)


def transport_conormal(data, s, t: float = 0.0, mode: str = DEFECT_CORRECTED):
    """Transported co-normal ``sin(f) tau + cos(f) nu`` at the fiducial point.

    Returns a :class:`TangentVector` when the data carry a frame, otherwise
    the coefficient pair ``(cos f, sin f)`` in the ``(nu, tau)`` basis.
    """
    f = transport_angle(data, s, t, mode)
    frame = data.frame
    if frame is None or t != 0.0:
        return np.stack([np.cos(f), np.sin(f)], axis=-1)
    base = SurfacePoint(frame.position, frame.n) if frame.position is not None else None
    return TangentVector(base, frame.vector(f))


# functionals ------------------------------------------------------------------


def functionals(data, surface=None, area: float | None = None) -> MinkowskiFunctionals:
    """Length, total curvature and (where available) enclosed area.

    ``W0`` comes from ``area`` if given, otherwise from Gauss-Bonnet on a
    sphere of radius ``r``: ``W0 = r^2 (2 pi - W2)``.
    """
    if isinstance(data, PolygonData):
        W1, W2 = data.length, data.total_angle
    else:
        W1, W2 = data.length, data.total_curvature
    if area is not None:
        W0 = float(area)
    elif surface is not None and getattr(surface, "kind", None) == "sphere":
        W0 = surface.radius**2 * (2 * math.pi - W2)
    else:
        raise W0Unavailable("enclosed area is only available on spheres or mesh regions")
    return MinkowskiFunctionals(W0, W1, W2)


# perturbation -----------------------------------------------------------------


def perturb_polygon(data: PolygonData, k: int, betas, inside: bool = False,
                    split=None) -> PolygonData:
    """Insert a vertex on side ``k``.

    ``betas`` are the turning angles of the small triangle formed by the
    endpoints of side ``k`` and the new vertex. ``split`` gives the lengths
    of the two replacement sides (default: halves of side ``k``). As the
    triangle degenerates (``betas -> (-pi, 0, -pi)`` for an outer vertex,
    ``(pi, 0, pi)`` for an inner one) the original polygon is recovered.
    """
    q = data.q
    if not 0 <= k < q:
        raise IndexError(f"side index {k} out of range for {q} sides")
    b1, b2, b3 = betas
    sgn = -1.0 if inside else 1.0
    a = data.turning_angles
    l = data.lengths
    if split is None:
        split = (0.5 * l[k], 0.5 * l[k])
    la, lb = split
    angles = list(a)
    lengths = list(l)
    angles[k - 1] = float(wrap_angle(a[k - 1] + b1 + sgn * math.pi))
    end = float(wrap_angle(a[k] + b3 + sgn * math.pi))
    angles[k:k + 1] = [b2, end]
    lengths[k:k + 1] = [la, lb]
    out = PolygonData(np.array(angles), np.array(lengths), data.frame, data.positive)
    _check_admissible(out.total_angle)
    return out
