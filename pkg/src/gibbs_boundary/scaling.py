"""Data-driven choice of the loss parameters ``(c, k, z)``.

For each threshold on a quantile grid: fix ``k/(k+c)`` to the fraction of
intensities at or below it, fit a rough boundary by simulated annealing,
and estimate the inside/outside CDFs at the threshold from that boundary.
The threshold with the widest CDF gap wins, and ``(c, k)`` are set so that
both scaling inequalities hold with equality at the estimated CDF values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateDataError,
    DegenerateRegionError,
    GibbsBoundaryError,
    NoGapError,
    ScalingFailureError,
    SolverFailureError,
    ThresholdOutsideDataError,
)
from .geometry import DEFAULT_FRAME, Frame, contains
from .loss import CdfPair, LossSpec, scaling_bounds
from .sampler import ChainState, PixelData
from .model import PriorSpec
from .spline import BoundaryCurve, KnotVector

GRID_SIZE = 19
SA_BUDGET = 20_000
SA_COOLING = 0.999
SA_RESTARTS = 3
SA_T0 = 1.0
SA_STEP_SD = 0.02
POINT_ESTIMATE_D = 12
# a fitted region holding fewer pixels than this fraction gives CDF estimates
# from a handful of pixels; at thresholds where the inside is not brighter the
# risk minimiser collapses to such a sliver
MIN_REGION_FRACTION = 0.01


def child_seeds(seed, n: int) -> list:
    """``n`` independent child sequences of ``seed`` (int or ``SeedSequence``).

    Unlike ``SeedSequence.spawn`` this does not mutate the parent, so the same
    parent always yields the same children.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + (i,)) for i in range(n)]


@dataclass
class GridRecord:
    z: float
    c: float = math.nan
    k: float = math.nan
    f_in: float = math.nan
    f_out: float = math.nan
    gap: float = math.nan
    error: str | None = None

    def to_dict(self):
        return {
            "z": self.z, "c": self.c, "k": self.k,
            "f_in": self.f_in, "f_out": self.f_out, "gap": self.gap, "error": self.error,
        }


@dataclass
class ScalingReport:
    chosen: LossSpec
    records: list
    point_estimate: BoundaryCurve
    chosen_index: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "c": self.chosen.c,
            "k": self.chosen.k,
            "z": self.chosen.z,
            "chosen_index": self.chosen_index,
            "grid": [rec.to_dict() for rec in self.records],
            "point_estimate": self.point_estimate.to_dict(),
            **self.meta,
        }


def z_grid(y, g: int = GRID_SIZE) -> np.ndarray:
    """Empirical quantiles of ``y`` at levels ``i / (g + 1)``, deduplicated."""
    y = np.asarray(getattr(y, "y", y), dtype=float)
    if g < 2:
        raise ValueError("grid needs at least two thresholds")
    if y.size == 0 or np.all(y == y.flat[0]):
        raise DegenerateDataError("intensities are constant; no thresholds to choose from")
    levels = np.arange(1, g + 1) / (g + 1)
    return np.unique(np.quantile(y, levels))


def ratio_ck(y, z: float):
    """``(c, k)`` with ``c + k = 1`` and ``k / (k + c)`` equal to the fraction ``y <= z``."""
    y = np.asarray(getattr(y, "y", y), dtype=float)
    frac = float(np.count_nonzero(y <= z)) / y.size
    if frac <= 0.0 or frac >= 1.0:
        raise ThresholdOutsideDataError(f"threshold {z} does not split the intensities")
    return 1.0 - frac, frac


def best_constant_radius(pixels: PixelData, spec: LossSpec) -> float:
    """Exact minimiser of the loss over circles about the reference point."""
    order = np.argsort(pixels.r, kind="stable")
    r = pixels.r[order]
    low = pixels.low[order]
    # radius between r[i-1] and r[i] puts the first i pixels inside
    inside_low = np.concatenate([[0], np.cumsum(low)])
    outside_high = np.concatenate([[0], np.cumsum(~low)[::-1]])[::-1]
    loss = spec.c * inside_low + spec.k * outside_high
    i = int(np.argmin(loss))
    if i == 0:
        return 0.5 * r[0] if r[0] > 0 else 1e-3
    if i == r.size:
        return r[-1] + 1e-3
    return 0.5 * (r[i - 1] + r[i]) if r[i] > r[i - 1] else r[i - 1]


def fit_point_estimate(data, spec: LossSpec, budget: int = SA_BUDGET, seed=0,
                       restarts: int = SA_RESTARTS, frame: Frame = DEFAULT_FRAME,
                       pixels: PixelData | None = None) -> BoundaryCurve:
    """Approximate empirical-risk minimiser over splines with 12 uniform knots.

    Starts from the best circle and runs simulated annealing on single
    coefficients with geometric cooling; returns the best curve seen over
    ``restarts`` independent runs.
    """
    pixels = PixelData(data, spec, frame) if pixels is None else pixels
    knots = KnotVector.uniform(POINT_ESTIMATE_D)
    radius = best_constant_radius(pixels, spec)
    start = np.full(knots.n_basis, radius)
    temps = SA_T0 * SA_COOLING ** np.arange(budget)
    prior = PriorSpec()
    best_curve, best_loss = None, math.inf
    for child in child_seeds(seed, restarts):
        rng = np.random.default_rng(child)
        state = ChainState(knots, start, pixels, prior)
        best_coef = state.coef.copy()
        best_energy = np.array([state.loss(spec)])
        steps = rng.integers(1, knots.n_basis, size=budget).astype(np.int64)
        normals = rng.standard_normal(budget)
        uniforms = rng.random(budget)
        _kernels.coordinate_sweep(
            state.coef, state.closure, state.range_lo, state.range_hi,
            state.span, state.vals, pixels.r, pixels.low, state.gamma, state.inside, state.counts,
            steps, normals, uniforms, temps, SA_STEP_SD,
            spec.c, spec.k, 0.0, 0.0, best_coef, best_energy,
        )
        if best_energy[0] < best_loss:
            best_loss = float(best_energy[0])
            best_curve = BoundaryCurve(knots, best_coef)
    return best_curve


def estimate_f(data, curve, z: float, frame: Frame = DEFAULT_FRAME,
               min_fraction: float = MIN_REGION_FRACTION) -> CdfPair:
    """Sample proportions of ``y <= z`` inside and outside ``curve``.

    Either region holding fewer than ``max(1, min_fraction * n)`` pixels is
    treated as degenerate.
    """
    y = np.asarray(data.y, dtype=float)
    inside = contains(curve, data.x, frame)
    n_in = int(np.count_nonzero(inside))
    n_out = y.size - n_in
    least = max(1, math.ceil(min_fraction * y.size))
    if n_in < least or n_out < least:
        raise DegenerateRegionError(
            f"estimated region splits the pixels {n_in}/{n_out}; each side needs at least {least}"
        )
    low = y <= z
    return CdfPair(np.count_nonzero(low & inside) / n_in, np.count_nonzero(low & ~inside) / n_out)


def _log_residual(u, a, b):
    c, k = math.exp(u[0]), math.exp(u[1])
    lower, upper = scaling_bounds(c, k)
    return np.array([math.log(lower) - math.log(a), math.log1p(-upper) - math.log1p(-b)])


def solve_ck(a: float, b: float, tol: float = 1e-8, max_iter: int = 100):
    """Positive ``(c, k)`` making both scaling inequalities equalities.

    Solves ``a = (e^k-1)/(e^(c+k)-1)`` and ``b = (e^k-1)/(e^k-e^-c)`` by damped
    Newton iteration in ``(log c, log k)`` with a central-difference Jacobian.
    """
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
        raise ValueError(f"CDF values must lie strictly inside (0, 1), got {a}, {b}")
    if a >= b:
        raise NoGapError(f"no CDF gap: inside {a} >= outside {b}")

    def residual(u):
        c, k = math.exp(u[0]), math.exp(u[1])
        lower, upper = scaling_bounds(c, k)
        return np.array([lower - a, upper - b])

    u = np.array([0.0, 0.0])
    r_log = _log_residual(u, a, b)
    h = 1e-6
    for _ in range(max_iter):
        if np.max(np.abs(residual(u))) <= tol:
            return math.exp(u[0]), math.exp(u[1])
        jac = np.empty((2, 2))
        for col in range(2):
            step = np.zeros(2)
            step[col] = h
            jac[:, col] = (_log_residual(u + step, a, b) - _log_residual(u - step, a, b)) / (2 * h)
        try:
            direction = np.linalg.solve(jac, -r_log)
        except np.linalg.LinAlgError:
            break
        norm = np.linalg.norm(r_log)
        t = 1.0
        while t > 1e-8:
            trial = u + t * direction
            try:
                r_trial = _log_residual(trial, a, b)
            except (ValueError, OverflowError, ZeroDivisionError):
                r_trial = None
            if r_trial is not None and np.all(np.isfinite(r_trial)) and np.linalg.norm(r_trial) < norm:
                u, r_log = trial, r_trial
                break
            t *= 0.5
        else:
            break
    res = float(np.max(np.abs(residual(u))))
    if res <= tol:
        return math.exp(u[0]), math.exp(u[1])
    raise SolverFailureError(f"Newton iteration did not converge (residual {res:.3g})", residual=res)


def estimate_ckz(data, g: int = GRID_SIZE, budget: int = SA_BUDGET, restarts: int = SA_RESTARTS,
                 seed=0, frame: Frame = DEFAULT_FRAME, binary: bool | None = None) -> ScalingReport:
    """Full threshold search; binary data use the single threshold ``z = 0``."""
    y = np.asarray(data.y, dtype=float)
    binary = bool(np.all((y == 1.0) | (y == -1.0))) if binary is None else binary
    grid = np.array([0.0]) if binary else z_grid(y, g)
    records, curves = [], []
    seeds = child_seeds(seed, grid.size)
    for j, z in enumerate(grid):
        rec = GridRecord(float(z))
        curve = None
        try:
            rec.c, rec.k = ratio_ck(y, z)
            spec = LossSpec(rec.c, rec.k, float(z))
            curve = fit_point_estimate(data, spec, budget, seeds[j], restarts, frame)
            cdf = estimate_f(data, curve, z, frame)
            rec.f_in, rec.f_out = cdf.f_in, cdf.f_out
            rec.gap = cdf.f_out - cdf.f_in
        except GibbsBoundaryError as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        records.append(rec)
        curves.append(curve)

    best = None
    for j, rec in enumerate(records):
        if rec.error is None and (best is None or rec.gap > records[best].gap):
            best = j
    if best is None:
        raise ScalingFailureError("every threshold on the grid failed")
    rec = records[best]
    try:
        c, k = solve_ck(rec.f_in, rec.f_out)
    except (ValueError, GibbsBoundaryError) as exc:
        raise ScalingFailureError(f"could not solve for (c, k) at z={rec.z}: {exc}") from exc
    return ScalingReport(LossSpec(c, k, rec.z), records, curves[best], best, {"binary": binary})
