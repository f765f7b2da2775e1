"""Reversible-jump MCMC over free-knot spline boundaries.

One iteration is a Metropolis-within-Gibbs sweep over the free spline
coefficients followed by one birth, death or relocation move on the inner
knots.  The closure coefficient is re-solved after every change.

Birth draws the new knot uniformly on ``(0, 2*pi)`` and the new coefficient
from its exponential prior, so in the acceptance ratio the coefficient's
prior and proposal densities cancel and the Jacobian is one.  What remains
is the loss difference, the Poisson ratio ``mu_D / (D + 1)``, the closure
coefficient's prior ratio and the ratio of move probabilities.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import EmptyDataError, InfeasibleClosureError
from .geometry import DEFAULT_FRAME, Frame, to_polar
from .loss import LossSpec
from .model import PriorSpec, log_prior
from .spline import TWO_PI, BoundaryCurve, KnotVector, closure_weights, curve_eval

log = logging.getLogger(__name__)

INIT_D = 12
INIT_COEFFICIENT = 0.1
SUMMARY_GRID = 200
MOVES = ("birth", "death", "relocate")


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 4000
    burn_in: int = 1000
    beta_proposal_sd: float = 0.10
    # (birth, death, relocate); all zeros freezes the number of knots
    move_probabilities: tuple = (1 / 3, 1 / 3, 1 / 3)
    seed: int = 0

    def __post_init__(self):
        probs = tuple(float(p) for p in self.move_probabilities)
        object.__setattr__(self, "move_probabilities", probs)
        if len(probs) != 3 or min(probs) < 0:
            raise ValueError("move_probabilities needs three nonnegative entries")
        total = sum(probs)
        if total != 0.0 and abs(total - 1.0) > 1e-12:
            raise ValueError("move probabilities must sum to 1 (or all be 0)")
        if self.beta_proposal_sd <= 0:
            raise ValueError("proposal sd must be positive")
        if self.n_samples < 1 or self.burn_in < 0:
            raise ValueError("need n_samples >= 1 and burn_in >= 0")


class PixelData:
    """Pixels in polar form, sorted by angle, with the threshold indicator."""

    def __init__(self, data, spec: LossSpec, frame: Frame = DEFAULT_FRAME):
        y = np.asarray(data.y, dtype=float)
        if y.size == 0:
            raise EmptyDataError("dataset has no pixels")
        theta, r = to_polar(np.asarray(data.x, dtype=float).reshape(-1, 2), frame)
        order = np.argsort(theta, kind="stable")
        self.theta = np.ascontiguousarray(theta[order])
        self.r = np.ascontiguousarray(r[order])
        self.y = y[order]
        self.low = self.y <= spec.z
        self.spec = spec
        self.frame = frame

    @property
    def n(self) -> int:
        return int(self.theta.size)

    def ranges(self, knots: KnotVector):
        """Pixel index range of each basis function's support."""
        full = knots.full
        lo = np.searchsorted(self.theta, full[:-4], side="left")
        hi = np.searchsorted(self.theta, full[4:], side="left")
        return lo.astype(np.int64), hi.astype(np.int64)


class ChainState:
    """Current curve plus per-pixel caches and exact loss counts."""

    def __init__(self, knots: KnotVector, coef, pixels: PixelData, prior: PriorSpec):
        n = pixels.n
        self.knots = knots
        self.coef = np.array(coef, dtype=float)
        self.span = np.empty(n, dtype=np.int64)
        self.vals = np.empty((n, 4))
        self.gamma = np.empty(n)
        self.inside = np.empty(n, dtype=np.bool_)
        self.counts = np.zeros(2, dtype=np.int64)
        self._prepare(pixels, prior)

    def _prepare(self, pixels, prior):
        self.closure = closure_weights(self.knots)
        self.range_lo, self.range_hi = pixels.ranges(self.knots)
        a, b = _kernels.refresh(self.knots.full, self.coef, pixels.theta, pixels.r, pixels.low,
                                self.span, self.vals, self.gamma, self.inside)
        self.counts[:] = (a, b)
        self.log_prior = log_prior(self.curve, prior)

    @property
    def D(self) -> int:
        return self.knots.D

    @property
    def curve(self) -> BoundaryCurve:
        return BoundaryCurve(self.knots, self.coef.copy())

    def loss(self, spec: LossSpec) -> float:
        return spec.c * float(self.counts[0]) + spec.k * float(self.counts[1])

    def log_kernel(self, spec: LossSpec) -> float:
        return -self.loss(spec) + self.log_prior

    def copy(self) -> "ChainState":
        other = object.__new__(ChainState)
        for name, value in self.__dict__.items():
            setattr(other, name, value.copy() if isinstance(value, np.ndarray) else value)
        return other

    def check_caches(self, pixels: PixelData, prior: PriorSpec, tol: float = 1e-9) -> None:
        fresh = ChainState(self.knots, self.coef, pixels, prior)
        assert np.array_equal(fresh.counts, self.counts), (fresh.counts, self.counts)
        assert abs(fresh.log_prior - self.log_prior) <= tol
        assert np.max(np.abs(fresh.gamma - self.gamma), initial=0.0) <= tol


def init_state(pixels: PixelData, prior: PriorSpec = PriorSpec()) -> ChainState:
    """Twelve evenly spaced inner knots and all coefficients equal to 0.1."""
    knots = KnotVector.uniform(INIT_D)
    coef = np.full(knots.n_basis, INIT_COEFFICIENT)
    beta0 = float(closure_weights(knots)[1:] @ coef[1:])
    if beta0 <= 0.0:
        raise InfeasibleClosureError("initial closure infeasible")
    coef[0] = beta0
    return ChainState(knots, coef, pixels, prior)


def step_beta(state: ChainState, pixels: PixelData, spec: LossSpec, prior: PriorSpec,
              rng: np.random.Generator, sd: float = 0.10) -> int:
    """One in-order Metropolis sweep over ``beta[1:]``; returns acceptances."""
    nb = state.coef.size
    steps = np.arange(1, nb, dtype=np.int64)
    normals = rng.standard_normal(nb - 1)
    uniforms = rng.random(nb - 1)
    temps = np.ones(nb - 1)
    accepted = _kernels.coordinate_sweep(
        state.coef, state.closure, state.range_lo, state.range_hi,
        state.span, state.vals, pixels.r, pixels.low, state.gamma, state.inside, state.counts,
        steps, normals, uniforms, temps, sd,
        spec.c, spec.k, prior.mu_beta, 1.0 if prior.include_closure_coefficient else 0.0,
        np.empty(0), np.empty(1),
    )
    state.log_prior = log_prior(state.curve, prior)
    return int(accepted)


def move_probabilities(D: int, prior: PriorSpec, base=(1 / 3, 1 / 3, 1 / 3)):
    """Birth/death/relocate probabilities at ``D``, shifted away from the bounds."""
    birth, death, relocate = base
    if D >= prior.D_max:
        relocate += birth
        birth = 0.0
    if D <= prior.D_min:
        relocate += death
        death = 0.0
    return birth, death, relocate


@dataclass
class Proposal:
    knots: KnotVector
    coef: np.ndarray
    log_q_ratio: float  # log q(reverse) - log q(forward), excluding prior terms


def _close(knots: KnotVector, coef: np.ndarray):
    w = closure_weights(knots)
    coef = coef.copy()
    coef[0] = float(w[1:] @ coef[1:])
    return coef if coef[0] > 0.0 else None


def propose_birth(state: ChainState, prior: PriorSpec, rng, base) -> Proposal | None:
    D = state.D
    knot = rng.uniform(0.0, TWO_PI)
    u = rng.exponential(1.0 / prior.mu_beta)
    full = state.knots.full
    if knot <= 0.0 or np.any(full == knot):
        return None
    p = int(np.searchsorted(full, knot))
    knots = KnotVector.from_free(np.insert(state.knots.free, p - 4, knot))
    coef = _close(knots, np.insert(state.coef, p - 2, u))
    if coef is None:
        return None
    b_now = move_probabilities(D, prior, base)[0]
    d_next = move_probabilities(D + 1, prior, base)[1]
    log_forward = math.log(b_now) - math.log(TWO_PI) + math.log(prior.mu_beta) - prior.mu_beta * u
    log_reverse = math.log(d_next) - math.log(D - 1)
    return Proposal(knots, coef, log_reverse - log_forward)


def propose_death(state: ChainState, prior: PriorSpec, rng, base) -> Proposal | None:
    D = state.D
    which = int(rng.integers(D - 2))
    p = which + 4  # position of the free knot in the extended sequence
    removed = state.coef[p - 2]
    knots = KnotVector.from_free(np.delete(state.knots.free, which))
    coef = _close(knots, np.delete(state.coef, p - 2))
    if coef is None:
        return None
    d_now = move_probabilities(D, prior, base)[1]
    b_prev = move_probabilities(D - 1, prior, base)[0]
    log_forward = math.log(d_now) - math.log(D - 2)
    log_reverse = math.log(b_prev) - math.log(TWO_PI) + math.log(prior.mu_beta) - prior.mu_beta * removed
    return Proposal(knots, coef, log_reverse - log_forward)


def propose_relocate(state: ChainState, prior: PriorSpec, rng, base) -> Proposal | None:
    inner = state.knots.inner
    which = int(rng.integers(1, inner.size - 1))
    knot = rng.uniform(inner[which - 1], inner[which + 1])
    if knot <= inner[which - 1] or knot >= inner[which + 1]:
        return None
    free = state.knots.free.copy()
    free[which - 1] = knot
    knots = KnotVector.from_free(free)
    coef = _close(knots, state.coef)
    if coef is None:
        return None
    return Proposal(knots, coef, 0.0)


_PROPOSERS = {"birth": propose_birth, "death": propose_death, "relocate": propose_relocate}


def jump_move(state: ChainState, pixels: PixelData, spec: LossSpec, prior: PriorSpec,
              rng: np.random.Generator, base=(1 / 3, 1 / 3, 1 / 3), move: str | None = None):
    """Attempt one trans-dimensional move; returns ``(move, accepted)``.

    ``move`` forces the move type (used in tests); a forced move that is not
    available at the current ``D`` is rejected.
    """
    if sum(base) == 0.0 and move is None:
        return None, False
    probs = move_probabilities(state.D, prior, base)
    if move is None:
        move = MOVES[int(np.searchsorted(np.cumsum(probs), rng.random() * sum(probs), side="right"))]
    if probs[MOVES.index(move)] == 0.0:
        return move, False

    proposal = _PROPOSERS[move](state, prior, rng, base)
    u = rng.random()
    if proposal is None:
        return move, False
    candidate = ChainState(proposal.knots, proposal.coef, pixels, prior)
    log_alpha = candidate.log_kernel(spec) - state.log_kernel(spec) + proposal.log_q_ratio
    if log_alpha >= 0.0 or u < math.exp(log_alpha):
        state.__dict__.update(candidate.__dict__)
        if state.D in (prior.D_min, prior.D_max):
            log.warning("number of inner knots reached its bound D=%d", state.D)
        return move, True
    return move, False


def birth_log_acceptance(state: ChainState, proposal: Proposal, pixels: PixelData,
                         spec: LossSpec, prior: PriorSpec) -> float:
    """Log acceptance ratio of a prepared proposal (exposed for checking)."""
    candidate = ChainState(proposal.knots, proposal.coef, pixels, prior)
    return candidate.log_kernel(spec) - state.log_kernel(spec) + proposal.log_q_ratio


@dataclass
class Chain:
    draws: list
    acceptance: dict
    config: SamplerConfig
    seed: int
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.draws)

    @property
    def acceptance_rates(self) -> dict:
        return {name: (acc / att if att else 0.0) for name, (acc, att) in self.acceptance.items()}

    @property
    def D_trace(self) -> np.ndarray:
        return np.array([curve.D for curve in self.draws])

    def radii(self, theta) -> np.ndarray:
        """Matrix of draw radii, one row per draw."""
        theta = np.asarray(theta, dtype=float)
        if not self.draws:
            return np.empty((0, theta.size))
        out = np.empty((len(self.draws), theta.size))
        previous = None
        for i, curve in enumerate(self.draws):
            if curve is previous:
                out[i] = out[i - 1]
            else:
                out[i] = curve_eval(curve, theta)
            previous = curve
        return out

    def header(self) -> dict:
        return {
            "config": asdict(self.config),
            "seed": self.seed,
            "n_draws": len(self.draws),
            "acceptance": {k: list(v) for k, v in self.acceptance.items()},
            "acceptance_rates": self.acceptance_rates,
            **self.meta,
        }


def run_chain(data, spec: LossSpec, prior: PriorSpec = PriorSpec(), config: SamplerConfig = SamplerConfig(),
              frame: Frame = DEFAULT_FRAME, pixels: PixelData | None = None, callback=None) -> Chain:
    """``burn_in + n_samples`` iterations; keeps the post-burn-in curves."""
    pixels = PixelData(data, spec, frame) if pixels is None else pixels
    rng = np.random.default_rng(config.seed)
    state = init_state(pixels, prior)
    acceptance = {"beta": [0, 0], "birth": [0, 0], "death": [0, 0], "relocate": [0, 0]}
    draws = []
    curve = None
    for it in range(config.burn_in + config.n_samples):
        nb = state.coef.size
        acc = step_beta(state, pixels, spec, prior, rng, config.beta_proposal_sd)
        acceptance["beta"][0] += acc
        acceptance["beta"][1] += nb - 1
        move, ok = jump_move(state, pixels, spec, prior, rng, config.move_probabilities)
        if move is not None:
            acceptance[move][0] += int(ok)
            acceptance[move][1] += 1
        if acc or ok:
            curve = None
        if it >= config.burn_in:
            if curve is None:
                curve = state.curve
            draws.append(curve)
        if callback is not None:
            callback(it, state)
    return Chain(draws, acceptance, config, config.seed)


# persistence ----------------------------------------------------------------

def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def write_chain(chain: Chain, path, grid_points: int = SUMMARY_GRID) -> None:
    """CSV of draws plus a JSON header next to it (``<stem>.json``)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    theta = np.arange(grid_points) * (TWO_PI / grid_points)
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump({**chain.header(), "theta_grid_points": grid_points}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    radius_cols = ",".join(f"r{i:03d}" for i in range(grid_points))
    with open(path, "w") as fh:
        fh.write(f"draw,D,inner_knots,coefficients,{radius_cols}\n")
        cached = None
        for idx, curve in enumerate(chain.draws):
            if cached is None or cached[0] is not curve:
                radii = ",".join(f"{v:.12g}" for v in curve_eval(curve, theta))
                cached = (curve, f"{curve.D},{_fmt(curve.knots.inner)},{_fmt(curve.coefficients)},{radii}")
            fh.write(f"{idx},{cached[1]}\n")


def read_chain(path) -> Chain:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    draws = []
    with open(path) as fh:
        next(fh)
        for line in fh:
            parts = line.rstrip("\n").split(",")
            inner = [float(v) for v in parts[2].split()]
            coef = [float(v) for v in parts[3].split()]
            draws.append(BoundaryCurve(KnotVector(inner), np.array(coef)))
    cfg = header["config"]
    cfg["move_probabilities"] = tuple(cfg["move_probabilities"])
    acceptance = {k: list(v) for k, v in header["acceptance"].items()}
    meta = {k: v for k, v in header.items()
            if k not in ("config", "seed", "n_draws", "acceptance", "acceptance_rates", "theta_grid_points")}
    return Chain(draws, acceptance, SamplerConfig(**cfg), header["seed"], meta)
