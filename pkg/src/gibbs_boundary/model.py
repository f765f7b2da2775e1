"""Hierarchical prior over spline curves and the unnormalised Gibbs posterior.

Prior: ``D ~ Poisson(mu_D)`` truncated to ``[D_min, D_max]``; the ``D - 2``
free inner knots are ordered uniforms on ``(0, 2*pi)``; every coefficient is
iid ``Exponential(mu_beta)``.  The Gibbs kernel is
``-n * R_n(curve) + log prior(curve)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import DEFAULT_FRAME, Frame
from .loss import LossSpec, total_loss
from .spline import BoundaryCurve

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PriorSpec:
    mu_D: float = 12.0
    mu_beta: float = 10.0
    D_min: int = 4
    D_max: int = 40
    # whether the closure-solved first coefficient carries its own
    # exponential prior factor
    include_closure_coefficient: bool = True

    def __post_init__(self):
        if not (self.mu_D > 0 and self.mu_beta > 0):
            raise ValueError("prior rates must be positive")
        if not 4 <= self.D_min <= self.D_max:
            raise ValueError("need 4 <= D_min <= D_max")

    def log_poisson(self, D: int) -> float:
        return D * math.log(self.mu_D) - self.mu_D - math.lgamma(D + 1)

    def log_knot_density(self, D: int) -> float:
        free = D - 2
        return math.lgamma(free + 1) - free * math.log(TWO_PI)

    def log_coefficient(self, beta: float) -> float:
        if beta <= 0.0:
            return -math.inf
        return math.log(self.mu_beta) - self.mu_beta * beta


def log_prior(curve: BoundaryCurve, prior: PriorSpec) -> float:
    D = curve.D
    if not prior.D_min <= D <= prior.D_max:
        return -math.inf
    beta = curve.coefficients
    if (beta <= 0.0).any():
        return -math.inf
    if not prior.include_closure_coefficient:
        beta = beta[1:]
    log_beta = beta.size * math.log(prior.mu_beta) - prior.mu_beta * float(beta.sum())
    return prior.log_poisson(D) + prior.log_knot_density(D) + log_beta


def log_gibbs_kernel(curve: BoundaryCurve, data, spec: LossSpec, prior: PriorSpec,
                     frame: Frame = DEFAULT_FRAME) -> float:
    lp = log_prior(curve, prior)
    loss = total_loss(data, curve, spec, frame)
    if lp == -math.inf:
        return -math.inf
    return -loss + lp
