"""Boundary detection in noisy images with a loss-based (Gibbs) posterior.

The boundary of a star-shaped region is a closed cubic B-spline in polar
coordinates; posterior draws come from reversible-jump MCMC over the knot
count, knot positions and coefficients.
"""

from .datagen import Dataset, generate, preset_scenario, read_dataset, write_dataset
from .geometry import DEFAULT_FRAME, Frame, symm_diff_area
from .loss import CdfPair, LossSpec, Verdict
from .model import PriorSpec
from .sampler import Chain, SamplerConfig, run_chain
from .scaling import estimate_ckz, solve_ck
from .spline import BoundaryCurve, KnotVector
from .summary import boundary_error, posterior_mean_curve, summarize, uniform_credible_band

__version__ = "0.1.0"

__all__ = [
    "BoundaryCurve", "CdfPair", "Chain", "DEFAULT_FRAME", "Dataset", "Frame", "KnotVector",
    "LossSpec", "PriorSpec", "SamplerConfig", "Verdict", "boundary_error", "estimate_ckz",
    "generate", "posterior_mean_curve", "preset_scenario", "read_dataset", "run_chain",
    "solve_ck", "summarize", "symm_diff_area", "uniform_credible_band", "write_dataset",
]
