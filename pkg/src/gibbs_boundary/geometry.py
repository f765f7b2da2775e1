"""Polar representation of star-shaped regions in the unit image frame.

Pixel locations live in ``Omega = [-1/2, 1/2]^2``.  A star-shaped region is
described by a radial function ``theta -> r`` measured from a reference
point, so that ``Gamma = {x : r(x) <= gamma(theta(x))}``.  Any callable that
maps an array of angles to an array of positive radii is accepted wherever a
curve is expected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidCurveError

TWO_PI = 2.0 * math.pi
QUADRATURE_POINTS = 4096
DIAMETER = math.sqrt(2.0)  # diameter of Omega

RadialCurve = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Frame:
    reference_point: tuple[float, float] = (0.0, 0.0)
    angle_origin: float = 0.0

    def __post_init__(self):
        x, y = self.reference_point
        if not (-0.5 < x < 0.5 and -0.5 < y < 0.5):
            raise ValueError(f"reference point {self.reference_point} is not interior to Omega")


DEFAULT_FRAME = Frame()


@dataclass(frozen=True)
class ConstantCurve:
    """Circle of fixed radius about the frame reference point."""

    radius: float

    def __call__(self, theta):
        return np.full(np.shape(theta), float(self.radius))


@dataclass(frozen=True)
class EllipseShape:
    center: tuple[float, float]
    rotation: float
    semi_axis_major: float
    semi_axis_minor: float

    def radius(self, theta, frame: Frame = DEFAULT_FRAME):
        return ellipse_radius(theta, self, frame)

    def curve(self, frame: Frame = DEFAULT_FRAME) -> RadialCurve:
        return lambda theta: ellipse_radius(theta, self, frame)

    @property
    def area(self) -> float:
        return math.pi * self.semi_axis_major * self.semi_axis_minor


@dataclass(frozen=True)
class TriangleShape:
    """Equilateral triangle whose centroid sits on the frame reference point.

    ``orientation`` is the polar angle of one vertex.
    """

    height: float
    orientation: float = math.pi / 2

    def __post_init__(self):
        if self.height <= 0:
            raise ValueError("triangle height must be positive")

    def radius(self, theta, frame: Frame = DEFAULT_FRAME):
        return triangle_radius(theta, self)

    def curve(self, frame: Frame = DEFAULT_FRAME) -> RadialCurve:
        return lambda theta: triangle_radius(theta, self)

    @property
    def area(self) -> float:
        return self.height**2 / math.sqrt(3.0)


def to_polar(points, frame: Frame = DEFAULT_FRAME):
    """Polar coordinates ``(theta, r)`` of one point or an ``(n, 2)`` array.

    ``theta`` is normalised to ``[0, 2*pi)``; the reference point itself maps
    to ``(0, 0)``.
    """
    p = np.asarray(points, dtype=float)
    dx = p[..., 0] - frame.reference_point[0]
    dy = p[..., 1] - frame.reference_point[1]
    r = np.hypot(dx, dy)
    theta = np.mod(np.arctan2(dy, dx) - frame.angle_origin, TWO_PI)
    theta = np.where(r == 0.0, 0.0, theta)
    # mod can round up to exactly 2*pi for tiny negative angles
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    if p.ndim == 1:
        return float(theta), float(r)
    return theta, r


def contains(curve: RadialCurve, points, frame: Frame = DEFAULT_FRAME):
    """Membership in the star-shaped region bounded by ``curve``.

    Points exactly on the boundary count as inside.
    """
    theta, r = to_polar(points, frame)
    inside = np.asarray(r) <= np.asarray(curve(np.atleast_1d(theta))).reshape(np.shape(theta))
    if np.ndim(inside) == 0:
        return bool(inside)
    return inside


def ellipse_radius(theta, shape: EllipseShape, frame: Frame = DEFAULT_FRAME):
    """Distance from the frame reference to the ellipse along each angle.

    Solves the quadratic ``A r^2 + B r + C = 0`` obtained by substituting the
    ray ``reference + r * direction`` into the ellipse equation.
    """
    theta = np.asarray(theta, dtype=float)
    cos_rot, sin_rot = math.cos(shape.rotation), math.sin(shape.rotation)
    px = frame.reference_point[0] - shape.center[0]
    py = frame.reference_point[1] - shape.center[1]
    # reference point in the ellipse's principal axes
    pu = cos_rot * px + sin_rot * py
    pv = -sin_rot * px + cos_rot * py
    a2 = shape.semi_axis_major**2
    b2 = shape.semi_axis_minor**2
    c_term = pu * pu / a2 + pv * pv / b2 - 1.0
    if c_term >= 0.0:
        raise InvalidCurveError("frame reference point is not strictly inside the ellipse")

    phi = theta + frame.angle_origin
    dx, dy = np.cos(phi), np.sin(phi)
    du = cos_rot * dx + sin_rot * dy
    dv = -sin_rot * dx + cos_rot * dy
    a_term = du * du / a2 + dv * dv / b2
    b_term = 2.0 * (pu * du / a2 + pv * dv / b2)
    disc = b_term * b_term - 4.0 * a_term * c_term
    return (-b_term + np.sqrt(disc)) / (2.0 * a_term)


def triangle_radius(theta, shape: TriangleShape):
    """Centroid-to-boundary distance of an equilateral triangle.

    The inradius is ``height / 3``; along a direction at angular offset
    ``phi`` from the nearest edge normal the boundary is ``inradius / cos(phi)``.
    """
    theta = np.asarray(theta, dtype=float)
    sector = TWO_PI / 3.0
    # edge normals point opposite to the vertices
    normal = shape.orientation + math.pi
    phi = np.mod(theta - normal + sector / 2.0, sector) - sector / 2.0
    return (shape.height / 3.0) / np.cos(phi)


def quadrature_grid(n: int = QUADRATURE_POINTS) -> np.ndarray:
    return np.arange(n) * (TWO_PI / n)


def _curve_values(curve: RadialCurve, theta: np.ndarray) -> np.ndarray:
    values = np.asarray(curve(theta), dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidCurveError("curve produced non-finite radii")
    return values


def symm_diff_area(curve_a: RadialCurve, curve_b: RadialCurve, n: int = QUADRATURE_POINTS) -> float:
    """Area of the symmetric difference of two star-shaped regions.

    Uses ``(1/2) int |a - b| |a + b| dtheta`` with the periodic trapezoid rule
    on ``n`` equally spaced angles.
    """
    theta = quadrature_grid(n)
    a = _curve_values(curve_a, theta)
    b = _curve_values(curve_b, theta)
    integrand = np.abs(a - b) * np.abs(a + b)
    return 0.5 * float(np.sum(integrand)) * (TWO_PI / n)


def region_difference_areas(truth: RadialCurve, curve: RadialCurve, n: int = QUADRATURE_POINTS):
    """Return ``(area(truth minus curve), area(curve minus truth))``."""
    theta = quadrature_grid(n)
    t = _curve_values(truth, theta)
    c = _curve_values(curve, theta)
    h = TWO_PI / n
    missed = 0.5 * float(np.sum(np.clip(t * t - c * c, 0.0, None))) * h
    extra = 0.5 * float(np.sum(np.clip(c * c - t * t, 0.0, None))) * h
    return missed, extra


def l1_distance(curve_a: RadialCurve, curve_b: RadialCurve, n: int = QUADRATURE_POINTS) -> float:
    theta = quadrature_grid(n)
    return float(np.sum(np.abs(_curve_values(curve_a, theta) - _curve_values(curve_b, theta)))) * (TWO_PI / n)
