"""Free-knot cubic B-spline radial curves with a value-closure constraint.

Knots are stored as one extended, strictly increasing sequence: three fixed
outer knots on each side and ``D`` inner knots running from ``0`` to ``2*pi``.
Basis function ``j`` (0-based) is supported on ``[knots[j], knots[j+4]]``, so
a curve with ``D`` inner knots has ``D + 2`` coefficients.  Coefficient ``0``
is never free: it is solved so that ``gamma(0) == gamma(2*pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateClosureError, InfeasibleClosureError, InvalidCurveError

TWO_PI = 2.0 * math.pi
ORDER = 4
OUTER_LEFT = (-2.0, -1.0, -0.5)
OUTER_RIGHT = (TWO_PI + 0.5, TWO_PI + 1.0, TWO_PI + 2.0)
CLOSURE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class KnotVector:
    inner: np.ndarray
    outer_left: tuple = OUTER_LEFT
    outer_right: tuple = OUTER_RIGHT
    full: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        inner = np.asarray(self.inner, dtype=float)
        inner.setflags(write=False)
        object.__setattr__(self, "inner", inner)
        if inner.size < ORDER:
            raise ValueError(f"need at least {ORDER} inner knots, got {inner.size}")
        if inner[0] != 0.0 or inner[-1] != TWO_PI:
            raise ValueError("inner knots must start at 0 and end at 2*pi")
        full = np.concatenate([self.outer_left, inner, self.outer_right]).astype(float)
        if np.any(np.diff(full) <= 0.0):
            raise ValueError("extended knot sequence must be strictly increasing")
        full.setflags(write=False)
        object.__setattr__(self, "full", full)

    @property
    def D(self) -> int:
        return int(self.inner.size)

    @property
    def n_basis(self) -> int:
        return self.full.size - ORDER

    @property
    def free(self) -> np.ndarray:
        """Inner knots that may be moved, added or removed."""
        return self.inner[1:-1]

    @classmethod
    def uniform(cls, D: int) -> "KnotVector":
        inner = np.linspace(0.0, TWO_PI, D)
        inner[-1] = TWO_PI
        return cls(inner)

    @classmethod
    def from_free(cls, free) -> "KnotVector":
        return cls(np.concatenate([[0.0], np.asarray(free, dtype=float), [TWO_PI]]))

    def __eq__(self, other):
        return isinstance(other, KnotVector) and np.array_equal(self.full, other.full)

    def __hash__(self):
        return hash(self.full.tobytes())


def basis_eval(knots, order: int, index: int, theta: float) -> float:
    """Cox-de Boor recursion for one basis function, ``0/0 := 0``.

    ``knots`` is any nondecreasing sequence; ``index`` is 0-based with support
    ``[knots[index], knots[index + order]]``.  Order 1 uses half-open
    intervals so the basis sums to one at interior knots.
    """
    t = np.asarray(knots.full if isinstance(knots, KnotVector) else knots, dtype=float)
    if order < 1:
        raise ValueError("order must be positive")
    if not 0 <= index <= t.size - order - 1:
        raise IndexError(f"basis index {index} out of range for {t.size} knots at order {order}")
    return _cox_de_boor(t, order, index, float(theta))


def _cox_de_boor(t, order, i, x):
    if order == 1:
        return 1.0 if t[i] <= x < t[i + 1] else 0.0
    left_den = t[i + order - 1] - t[i]
    right_den = t[i + order] - t[i + 1]
    left = 0.0 if left_den == 0.0 else (x - t[i]) / left_den * _cox_de_boor(t, order - 1, i, x)
    right = 0.0 if right_den == 0.0 else (t[i + order] - x) / right_den * _cox_de_boor(t, order - 1, i + 1, x)
    return left + right


def basis_row(knots: KnotVector, theta: float) -> np.ndarray:
    """All ``n_basis`` cubic basis values at one angle (dense)."""
    row = np.zeros(knots.n_basis)
    s = _kernels.find_span(knots.full, float(theta))
    vals = np.empty(4)
    _kernels.basis_at(knots.full, s, float(theta), vals)
    row[s - 3 : s + 1] = vals
    return row


def closure_weights(knots: KnotVector) -> np.ndarray:
    """Weights ``w`` such that the closed curve has ``beta[0] = w @ beta``.

    ``w[0]`` is zero.  Raises DegenerateClosureError if the first basis
    function cannot be used to close the curve.
    """
    at_start = basis_row(knots, 0.0)
    at_end = basis_row(knots, TWO_PI)
    denom = at_start[0] - at_end[0]
    if abs(denom) < 1e-12:
        raise DegenerateClosureError("first basis function takes equal values at 0 and 2*pi")
    w = (at_end - at_start) / denom
    w[0] = 0.0
    return w


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Closed radial curve ``gamma(theta) = sum_j beta_j B_j(theta)``."""

    knots: KnotVector
    coefficients: np.ndarray
    order: int = ORDER

    def __post_init__(self):
        beta = np.array(self.coefficients, dtype=float)
        beta.setflags(write=False)
        object.__setattr__(self, "coefficients", beta)
        if self.order != ORDER:
            raise ValueError("only cubic (order 4) curves are supported")
        if beta.shape != (self.knots.n_basis,):
            raise ValueError(f"expected {self.knots.n_basis} coefficients, got {beta.shape}")
        if not np.all(beta > 0.0):
            raise InvalidCurveError("spline coefficients must be positive")

    @property
    def D(self) -> int:
        return self.knots.D

    def __call__(self, theta):
        return curve_eval(self, theta)

    def closure_gap(self) -> float:
        ends = curve_eval(self, np.array([0.0, TWO_PI]))
        return float(abs(ends[0] - ends[1]))

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "inner_knots": self.knots.inner.tolist(),
            "outer_knots": list(self.knots.outer_left) + list(self.knots.outer_right),
            "coefficients": self.coefficients.tolist(),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "BoundaryCurve":
        outer = [float(v) for v in record["outer_knots"]]
        knots = KnotVector(record["inner_knots"], tuple(outer[:3]), tuple(outer[3:]))
        return cls(knots, np.asarray(record["coefficients"], dtype=float), int(record.get("order", ORDER)))

    def __eq__(self, other):
        return (
            isinstance(other, BoundaryCurve)
            and self.knots == other.knots
            and np.array_equal(self.coefficients, other.coefficients)
        )

    def __hash__(self):
        return hash((self.knots, self.coefficients.tobytes()))


def curve_eval(curve: BoundaryCurve, theta):
    """Evaluate the curve at scalar or array angles in ``[0, 2*pi]``."""
    scalar = np.ndim(theta) == 0
    th = np.ascontiguousarray(np.atleast_1d(theta), dtype=float).ravel()
    out = np.empty(th.size)
    _kernels.evaluate(curve.knots.full, curve.coefficients, th, out)
    if np.any(out <= 0.0) or not np.all(np.isfinite(out)):
        raise InvalidCurveError("curve evaluated to a non-positive radius")
    if scalar:
        return float(out[0])
    return out.reshape(np.shape(theta))


def solve_closure(knots: KnotVector, free_coefficients) -> BoundaryCurve:
    """Complete ``free_coefficients`` (``beta[1:]``) with the closing ``beta[0]``."""
    free = np.asarray(free_coefficients, dtype=float)
    if free.shape != (knots.n_basis - 1,):
        raise ValueError(f"expected {knots.n_basis - 1} free coefficients, got {free.shape}")
    w = closure_weights(knots)
    beta0 = float(w[1:] @ free)
    if beta0 <= 0.0:
        raise InfeasibleClosureError(f"closure requires first coefficient {beta0:.6g} <= 0")
    return BoundaryCurve(knots, np.concatenate([[beta0], free]))
