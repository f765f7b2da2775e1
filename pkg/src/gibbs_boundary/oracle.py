"""Independent references for the test suite.

Nothing in the production path imports this module.  The functions here
re-derive quantities by the most direct route available (closed forms,
exhaustive search, cell counting, plain Monte Carlo) and deliberately avoid
the quadrature and cached-count machinery they are used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DEFAULT_FRAME, Frame
from .loss import CdfPair, LossSpec


@dataclass(frozen=True)
class RiskGapInputs:
    """Areas of the two one-sided differences between a candidate and the truth."""

    lam_in_not_out: float  # truth minus candidate
    lam_out_not_in: float  # candidate minus truth
    cdf: CdfPair
    spec: LossSpec

    def __post_init__(self):
        if self.lam_in_not_out < 0 or self.lam_out_not_in < 0:
            raise ValueError("areas must be non-negative")


def risk_gap_continuous(inp: RiskGapInputs) -> float:
    """``R(candidate) - R(truth)`` for pixels uniform on the unit square."""
    c, k = inp.spec.c, inp.spec.k
    f_in, f_out = inp.cdf.f_in, inp.cdf.f_out
    missed = k - k * f_in - c * f_in
    extra = c * f_out - k + k * f_out
    return inp.lam_in_not_out * missed + inp.lam_out_not_in * extra


def risk_gap_binary(lam_in_not_out: float, lam_out_not_in: float, p_in: float, p_out: float, h: float) -> float:
    """Binary-data risk gap; ``p_in``/``p_out`` are the probabilities of ``+1``."""
    return lam_in_not_out * (h * p_in + p_in - 1.0) + lam_out_not_in * (1.0 - p_out - h * p_out)


def bracket_factors(spec: LossSpec, cdf: CdfPair):
    """The two per-area factors of ``E exp(-(loss difference))``."""
    c, k = spec.c, spec.k
    a1 = math.exp(-k) * (1.0 - cdf.f_in) + math.exp(c) * cdf.f_in
    a2 = math.exp(-c) * cdf.f_out + math.exp(k) * (1.0 - cdf.f_out)
    return a1, a2


def kappa_rho(spec: LossSpec, cdf: CdfPair):
    kappa = max(bracket_factors(spec, cdf))
    return kappa, 1.0 - kappa


def expected_exp_loss_gap(inp: RiskGapInputs) -> float:
    """``E exp(-(loss_candidate - loss_truth))`` for one uniform pixel."""
    if inp.lam_in_not_out + inp.lam_out_not_in > 1.0 + 1e-12:
        raise ValueError("symmetric difference cannot exceed the unit square")
    a1, a2 = bracket_factors(inp.spec, inp.cdf)
    outside = 1.0 - inp.lam_in_not_out - inp.lam_out_not_in
    return outside + a1 * inp.lam_in_not_out + a2 * inp.lam_out_not_in


def closed_form_ck(a: float, b: float):
    """Explicit solution of the two scaling equalities."""
    if not 0.0 < a < b < 1.0:
        raise ValueError("need 0 < a < b < 1")
    return math.log(b / a), math.log((1.0 - a) / (1.0 - b))


# geometry by counting ------------------------------------------------------

def _polar(x1, x2, frame: Frame):
    dx = x1 - frame.reference_point[0]
    dy = x2 - frame.reference_point[1]
    theta = np.mod(np.arctan2(dy, dx) - frame.angle_origin, 2.0 * math.pi)
    return np.hypot(dx, dy), theta


def _radii(curve, theta):
    return np.broadcast_to(np.asarray(curve(theta), dtype=float), theta.shape)


def grid_count_area(curve_a, curve_b, frame: Frame = DEFAULT_FRAME, resolution: int = 2000) -> float:
    """Fraction of cell centres of a ``resolution^2`` grid on the unit square
    lying in exactly one of the two regions."""
    if resolution < 100:
        raise ValueError("resolution must be at least 100")
    centers = (np.arange(resolution) + 0.5) / resolution - 0.5
    hits = 0
    for x1 in np.array_split(centers, max(1, resolution // 200)):
        g1, g2 = np.meshgrid(x1, centers, indexing="ij")
        r, theta = _polar(g1.ravel(), g2.ravel(), frame)
        in_a = r <= _radii(curve_a, theta)
        in_b = r <= _radii(curve_b, theta)
        hits += int(np.count_nonzero(in_a != in_b))
    return hits / resolution**2


def brute_force_risk_argmin(data, spec: LossSpec, radii, frame: Frame = DEFAULT_FRAME) -> float:
    """Constant radius with least summed loss; ties go to the smaller radius."""
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii.size == 0:
        raise ValueError("candidate family is empty")
    x = np.asarray(data.x, dtype=float)
    r, _ = _polar(x[:, 0], x[:, 1], frame)
    low = np.asarray(data.y) <= spec.z
    losses = [spec.c * np.sum(low & (r <= rad)) + spec.k * np.sum(~low & (r > rad)) for rad in radii]
    return float(radii[int(np.argmin(losses))])


# Monte Carlo -----------------------------------------------------------------

def mc_loss_difference(truth, curve, spec: LossSpec, cdf: CdfPair, n: int = 1_000_000, seed=0,
                       frame: Frame = DEFAULT_FRAME):
    """Per-pixel ``loss_curve - loss_truth`` under uniform pixels.

    The thresholded intensity ``y <= z`` is drawn directly as a Bernoulli with
    the inside or outside CDF value, which is all the loss depends on.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 0.5, size=(n, 2))
    r, theta = _polar(x[:, 0], x[:, 1], frame)
    in_truth = r <= _radii(truth, theta)
    in_curve = r <= _radii(curve, theta)
    low = rng.random(n) < np.where(in_truth, cdf.f_in, cdf.f_out)

    def loss(inside):
        return np.where(low, np.where(inside, spec.c, 0.0), np.where(inside, 0.0, spec.k))

    return loss(in_curve) - loss(in_truth)


def mc_mean(samples):
    """Sample mean and its standard error."""
    samples = np.asarray(samples, dtype=float)
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(samples.size))


def mc_risk_gap(truth, curve, spec, cdf, n=1_000_000, seed=0, frame=DEFAULT_FRAME):
    return mc_mean(mc_loss_difference(truth, curve, spec, cdf, n, seed, frame))


def mc_exp_loss_gap(truth, curve, spec, cdf, n=1_000_000, seed=0, frame=DEFAULT_FRAME):
    return mc_mean(np.exp(-mc_loss_difference(truth, curve, spec, cdf, n, seed, frame)))
