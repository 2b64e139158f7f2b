"""Geodesic circles on the flat, hyperbolic and spherical planes.

A billiard trajectory leaving the boundary of a geodesic circle at angle
``theta`` (measured from the tangent) travels along a geodesic chord and
hits the boundary again after the boundary coordinate has advanced by the
arc length ``gamma(theta) * h``, where ``gamma`` is the central angle
subtended by the chord and ``2 * pi * h`` is the circumference.

In the right triangle formed by the centre, the departure point and the
midpoint of the chord, the hypotenuse is the radius ``r0`` and the angle at
the departure point is ``pi/2 - theta``.  The trigonometry of constant
curvature gives ``cot(gamma/2) = c * cot(theta)`` with ``c`` equal to ``1``,
``cosh(r0)`` or ``cos(r0)``, hence ``gamma = 2 * atan2(sin(theta), c*cos(theta))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveRadius, SphericalRadiusTooLarge, ThetaOutOfRange

__all__ = [
    "SurfaceKind",
    "CircleTable",
    "make_table",
    "central_angle",
    "central_angle_derivative",
    "flight_arc",
    "advance",
    "chord_oracle",
]


class SurfaceKind(enum.Enum):
    """Simply connected surface of constant curvature."""

    FLAT = 0
    HYPERBOLIC = -1
    SPHERICAL = 1

    @property
    def curvature(self) -> int:
        return self.value

    @classmethod
    def parse(cls, name: str | SurfaceKind) -> SurfaceKind:
        if isinstance(name, cls):
            return name
        try:
            return cls[str(name).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown surface kind {name!r}") from None


@dataclass(frozen=True)
class CircleTable:
    """A geodesic circle of radius ``r0``; build it with :func:`make_table`."""

    kind: SurfaceKind
    r0: float
    h: float = field(init=False)
    # ratio between cot(gamma/2) and cot(theta)
    chord_factor: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind is SurfaceKind.FLAT:
            h, c = self.r0, 1.0
        elif self.kind is SurfaceKind.HYPERBOLIC:
            h, c = math.sinh(self.r0), math.cosh(self.r0)
        else:
            h, c = math.sin(self.r0), math.cos(self.r0)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "chord_factor", c)

    @property
    def L(self) -> float:
        """Circumference ``2 pi h``."""
        return 2.0 * math.pi * self.h

    @property
    def max_derivative(self) -> float:
        """Supremum of ``gamma'`` over ``(0, pi)``."""
        c = self.chord_factor
        return 2.0 * max(c, 1.0 / c)

    def as_dict(self) -> dict:
        return {"surface": self.kind.name.lower(), "r0": self.r0, "h": self.h, "L": self.L}


def make_table(kind: SurfaceKind | str, r0: float) -> CircleTable:
    """Validate ``r0`` and build the table.

    Raises
    ------
    NonPositiveRadius
        if ``r0 <= 0``.
    SphericalRadiusTooLarge
        if the surface is spherical and ``r0 >= pi/2``; such a circle is not
        convex as seen from the disc it bounds.
    """
    kind = SurfaceKind.parse(kind)
    r0 = float(r0)
    if not r0 > 0.0:
        raise NonPositiveRadius(f"radius must be positive, got {r0}")
    if kind is SurfaceKind.SPHERICAL and r0 >= math.pi / 2:
        raise SphericalRadiusTooLarge(f"spherical radius must be < pi/2, got {r0}")
    return CircleTable(kind, r0)


# Scalars take pure-math paths; arrays are handled elementwise by numpy.


def _is_scalar(x) -> bool:
    return isinstance(x, (float, int)) or np.ndim(x) == 0


def _check_theta(theta):
    if _is_scalar(theta):
        ok = 0.0 < theta < math.pi
    else:
        t = np.asarray(theta, dtype=float)
        ok = bool(np.all((t > 0.0) & (t < math.pi)))
    if not ok:
        raise ThetaOutOfRange(f"angle must lie in (0, pi), got {theta}")


def _gamma(table: CircleTable, theta):
    """Central angle without range validation."""
    if table.kind is SurfaceKind.FLAT:
        return 2.0 * theta
    if _is_scalar(theta):
        return 2.0 * math.atan2(math.sin(theta), table.chord_factor * math.cos(theta))
    return 2.0 * np.arctan2(np.sin(theta), table.chord_factor * np.cos(theta))


def _gamma_prime(table: CircleTable, theta):
    if table.kind is SurfaceKind.FLAT:
        return 2.0 if _is_scalar(theta) else np.full(np.shape(theta), 2.0)
    c = table.chord_factor
    if _is_scalar(theta):
        return 2.0 * c / ((c * math.cos(theta)) ** 2 + math.sin(theta) ** 2)
    return 2.0 * c / ((c * np.cos(theta)) ** 2 + np.sin(theta) ** 2)


def central_angle(table: CircleTable, theta):
    """Central angle ``gamma(theta)`` in ``(0, 2 pi)`` of the chord leaving at ``theta``.

    Works elementwise on arrays.  On the flat table ``gamma = 2 theta``
    exactly.
    """
    _check_theta(theta)
    return _gamma(table, theta)


def central_angle_derivative(table: CircleTable, theta):
    """``gamma'(theta) = 2c / (c^2 cos^2 theta + sin^2 theta)``; always positive."""
    _check_theta(theta)
    return _gamma_prime(table, theta)


def flight_arc(table: CircleTable, theta):
    """Boundary arc length ``gamma(theta) * h`` covered between two collisions."""
    _check_theta(theta)
    return _gamma(table, theta) * table.h


def advance(s, delta, L):
    """Move boundary coordinate ``s`` forward by ``delta`` on a circle of length ``L``.

    The result is in ``[0, L)``; ``fmod`` is exact, and the rare case where
    rounding lands on ``L`` itself is folded back to ``0``.
    """
    if _is_scalar(s) and _is_scalar(delta):
        r = math.fmod(s + delta, L)
        if r < 0.0:
            r += L
        return 0.0 if r >= L else r
    r = np.fmod(np.add(s, delta), L)
    r = np.where(r < 0.0, r + L, r)
    return np.where(r >= L, 0.0, r)


# -- independent oracle ------------------------------------------------------


def _azimuth(x: float, y: float) -> float:
    return math.atan2(y, x) % (2.0 * math.pi)


def chord_oracle(table: CircleTable, theta: float) -> float:
    """Central angle of the chord, from an explicit model of the surface.

    Flat: plane coordinates.  Spherical: unit sphere in R^3 with the centre
    at the north pole.  Hyperbolic: upper sheet of the hyperboloid
    ``x0^2 - x1^2 - x2^2 = 1`` with the Minkowski form.  In each model the
    departure point sits at azimuth 0, the initial direction is built from
    the unit tangent of the circle and the inward unit normal, the geodesic
    is followed until it is again at distance ``r0`` from the centre, and
    the azimuth of the exit point is returned.
    """
    _check_theta(theta)
    r0 = table.r0
    ct, st = math.cos(theta), math.sin(theta)
    if table.kind is SurfaceKind.FLAT:
        p = np.array([r0, 0.0])
        d = ct * np.array([0.0, 1.0]) + st * np.array([-1.0, 0.0])
        # |p + t d|^2 = r0^2  ->  t = -2 p.d
        t = -2.0 * p.dot(d)
        q = p + t * d
        return _azimuth(q[0], q[1])

    if table.kind is SurfaceKind.SPHERICAL:
        north = np.array([0.0, 0.0, 1.0])
        p = np.array([math.sin(r0), 0.0, math.cos(r0)])
        tangent = np.cross(north, p)
        tangent /= np.linalg.norm(tangent)
        inward = np.cross(p, tangent)  # unit, tangent to the sphere, toward the pole
        d = ct * tangent + st * inward
        # X(t) = cos t p + sin t d ; X.north = cos r0 for t > 0
        a, b = p.dot(north), d.dot(north)
        t = 2.0 * math.atan2(b, a)  # nonzero root of a cos t + b sin t = a
        q = math.cos(t) * p + math.sin(t) * d
        return _azimuth(q[0], q[1])

    eta = np.diag([1.0, 1.0, -1.0])  # coordinates (x1, x2, x0)

    def mink(u, v):
        return float(u @ eta @ v)

    centre = np.array([0.0, 0.0, 1.0])
    p = np.array([math.sinh(r0), 0.0, math.cosh(r0)])
    tangent = np.array([0.0, 1.0, 0.0])
    # inward normal: tangent to the sheet at p, orthogonal to the tangent, pointing to the centre
    inward = centre + mink(centre, p) * p
    inward /= math.sqrt(mink(inward, inward))
    d = ct * tangent + st * inward
    # X(t) = cosh t p + sinh t d ; -<X, centre> = cosh r0 for t > 0
    a, b = -mink(p, centre), -mink(d, centre)
    t = 2.0 * math.atanh(-b / a)  # nonzero root of a cosh t + b sinh t = a
    q = math.cosh(t) * p + math.sinh(t) * d
    return _azimuth(q[0], q[1])
