"""Weighted misclassification losses and the conditions that make them work.

The continuous loss is ``k * 1(y > z, x outside) + c * 1(y <= z, x inside)``.
The binary loss ``h * 1(y = +1, outside) + 1(y = -1, inside)`` is the special
case ``c = 1, k = h, z = 0`` on intensities in ``{-1, +1}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataError
from .geometry import DEFAULT_FRAME, Frame, contains

IDENTIFIABILITY_TOL = 1e-9
SCALING_TOL = 1e-6


class Verdict(enum.Enum):
    VALID = "valid"
    BOUNDARY = "boundary"
    INVALID = "invalid"


@dataclass(frozen=True)
class LossSpec:
    c: float
    k: float
    z: float = 0.0

    def __post_init__(self):
        if not (self.c > 0 and self.k > 0):
            raise ValueError(f"loss weights must be positive, got c={self.c}, k={self.k}")

    @classmethod
    def binary(cls, h: float) -> "LossSpec":
        return cls(c=1.0, k=float(h), z=0.0)

    @property
    def ratio(self) -> float:
        return self.k / (self.k + self.c)

    def as_tuple(self):
        return (self.c, self.k, self.z)


@dataclass(frozen=True)
class CdfPair:
    """Inside and outside intensity CDFs evaluated at the threshold ``z``.

    For binary data these are ``P(y = -1)`` inside and outside.
    """

    f_in: float
    f_out: float

    def __post_init__(self):
        if not (0.0 <= self.f_in <= 1.0 and 0.0 <= self.f_out <= 1.0):
            raise ValueError("CDF values must lie in [0, 1]")

    @classmethod
    def from_binary(cls, p_in: float, p_out: float) -> "CdfPair":
        """Build from ``P(y = +1)`` inside and outside."""
        return cls(1.0 - p_in, 1.0 - p_out)


def point_loss(x, y, curve, spec: LossSpec, frame: Frame = DEFAULT_FRAME) -> float:
    inside = contains(curve, x, frame)
    if y <= spec.z:
        return spec.c if inside else 0.0
    return 0.0 if inside else spec.k


def loss_counts(data, curve, spec: LossSpec, frame: Frame = DEFAULT_FRAME):
    """Return ``(#{y <= z, inside}, #{y > z, outside})``."""
    y = np.asarray(data.y, dtype=float)
    if y.size == 0:
        raise EmptyDataError("dataset has no pixels")
    inside = contains(curve, data.x, frame)
    low = y <= spec.z
    return int(np.count_nonzero(low & inside)), int(np.count_nonzero(~low & ~inside))


def total_loss(data, curve, spec: LossSpec, frame: Frame = DEFAULT_FRAME) -> float:
    """``n * R_n``: the summed loss over all pixels."""
    a, b = loss_counts(data, curve, spec, frame)
    return spec.c * a + spec.k * b


def empirical_risk(data, curve, spec: LossSpec, frame: Frame = DEFAULT_FRAME) -> float:
    n = np.size(data.y)
    return total_loss(data, curve, spec, frame) / n


def _compare(value, threshold, tol):
    """-1 if value < threshold (beyond tol), 0 if equal within tol, +1 otherwise."""
    if abs(value - threshold) <= tol:
        return 0
    return -1 if value < threshold else 1


def check_identifiability(spec: LossSpec, cdf: CdfPair, tol: float = IDENTIFIABILITY_TOL) -> Verdict:
    """Verdict on ``F_in(z) < k / (k + c) < F_out(z)``.

    One inequality may hold with equality (BOUNDARY); the risk is still
    minimised at the true region in that case.
    """
    lower = _compare(cdf.f_in, spec.ratio, tol)
    upper = _compare(spec.ratio, cdf.f_out, tol)
    if lower == -1 and upper == -1:
        return Verdict.VALID
    if lower <= 0 and upper <= 0 and (lower, upper) != (0, 0):
        return Verdict.BOUNDARY
    return Verdict.INVALID


def scaling_bounds(c: float, k: float):
    """``((e^k - 1) / (e^(c+k) - 1), (e^k - 1) / (e^k - e^-c))``.

    The inside CDF must sit below the first value and the outside CDF above
    the second.
    """
    num = math.expm1(k)
    lower = num / math.expm1(c + k)
    upper = num / (math.exp(k) - math.exp(-c))
    return lower, upper


def check_scaling_assumption(spec: LossSpec, cdf: CdfPair, tol: float = SCALING_TOL) -> Verdict:
    lower, upper = scaling_bounds(spec.c, spec.k)
    first = _compare(cdf.f_in, lower, tol)
    second = _compare(upper, cdf.f_out, tol)
    if first == -1 and second == -1:
        return Verdict.VALID
    if first <= 0 and second <= 0:
        return Verdict.BOUNDARY
    return Verdict.INVALID
