"""Posterior summaries: pointwise mean curve, uniform credible band, error."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyChainError
from .geometry import symm_diff_area
from .spline import TWO_PI, curve_eval

SUMMARY_GRID = 200
SD_FLOOR = 1e-12


def theta_grid(n: int = SUMMARY_GRID) -> np.ndarray:
    return np.arange(n) * (TWO_PI / n)


@dataclass
class CurveGrid:
    theta: np.ndarray
    radii: np.ndarray  # one row per draw
    mean: np.ndarray
    sd: np.ndarray

    @property
    def n_draws(self) -> int:
        return self.radii.shape[0]


@dataclass
class CredibleBand:
    lower: np.ndarray
    upper: np.ndarray
    level: float
    tau: float
    u: np.ndarray  # standardised sup-deviation of each draw


class MeanCurve:
    """Pointwise posterior mean of a list of curves, evaluable at any angle.

    Runs of the same curve object (rejected moves) are weighted instead of
    re-evaluated.
    """

    def __init__(self, draws):
        if not draws:
            raise EmptyChainError("chain has no draws")
        self.curves, self.weights = [], []
        for curve in draws:
            if self.curves and self.curves[-1] is curve:
                self.weights[-1] += 1
            else:
                self.curves.append(curve)
                self.weights.append(1)
        self.n = len(draws)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        scalar = theta.ndim == 0
        flat = np.atleast_1d(theta).ravel()
        acc = np.zeros(flat.size)
        for curve, w in zip(self.curves, self.weights):
            acc += w * curve_eval(curve, flat)
        acc /= self.n
        return float(acc[0]) if scalar else acc.reshape(theta.shape)


def posterior_mean_curve(chain, theta=None) -> CurveGrid:
    """Per-angle mean and (population) standard deviation of the draw radii."""
    draws = getattr(chain, "draws", chain)
    if len(draws) == 0:
        raise EmptyChainError("chain has no draws")
    theta = theta_grid() if theta is None else np.asarray(theta, dtype=float)
    if hasattr(chain, "radii"):
        radii = chain.radii(theta)
    else:
        radii = np.array([curve_eval(curve, theta) for curve in draws])
    # moments about the first draw, so identical draws give exactly zero spread
    offset = radii - radii[0]
    return CurveGrid(theta, radii, radii[0] + offset.mean(axis=0), offset.std(axis=0))


def uniform_credible_band(grid: CurveGrid, level: float = 0.95) -> CredibleBand:
    """``mean +/- tau * sd`` with ``tau`` the empirical ``level`` quantile of the
    per-draw maxima ``u_i = max_theta |r_i - mean| / sd``.

    The quantile is the sorted value at 1-based index ``ceil(level * N)``.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    sd = np.maximum(grid.sd, SD_FLOOR)
    u = np.max(np.abs(grid.radii - grid.mean) / sd, axis=1)
    n = u.size
    # guard against level * n landing a hair above an integer
    idx = min(max(math.ceil(level * n - 1e-9), 1), n) - 1
    tau = float(np.sort(u)[idx])
    return CredibleBand(grid.mean - tau * grid.sd, grid.mean + tau * grid.sd, level, tau, u)


def boundary_error(curve, truth) -> float:
    """Area of the symmetric difference between two star-shaped regions."""
    return symm_diff_area(curve, truth)


@dataclass
class Summary:
    grid: CurveGrid
    band: CredibleBand
    error: float | None
    acceptance_rates: dict

    def to_dict(self) -> dict:
        return {
            "error": self.error,
            "tau": self.band.tau,
            "level": self.band.level,
            "n_draws": self.grid.n_draws,
            "theta": self.grid.theta.tolist(),
            "mean": self.grid.mean.tolist(),
            "sd": self.grid.sd.tolist(),
            "lower": self.band.lower.tolist(),
            "upper": self.band.upper.tolist(),
            "acceptance_rates": self.acceptance_rates,
        }


def summarize(chain, truth=None, level: float = 0.95, theta=None) -> Summary:
    """Mean curve and band on the summary grid; error against ``truth`` if given.

    The error uses the exact posterior mean curve rather than the gridded one.
    """
    grid = posterior_mean_curve(chain, theta)
    band = uniform_credible_band(grid, level)
    error = None
    if truth is not None:
        error = boundary_error(MeanCurve(chain.draws), truth)
    return Summary(grid, band, error, dict(getattr(chain, "acceptance_rates", {})))
