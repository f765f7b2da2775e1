"""Synthetic images for the binary (B1-B4) and continuous (C1-C4) scenarios.

Pixels come from a jittered ``m x m`` grid on ``[-1/2, 1/2]^2``; intensities
are drawn from one law inside the true region and another outside.  All
randomness flows through ``numpy.random.default_rng`` seeded explicitly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import stats

from .errors import DatasetValidationError, UnknownScenarioError
from .geometry import DEFAULT_FRAME, EllipseShape, Frame, TriangleShape, contains


# intensity laws -----------------------------------------------------------

@dataclass(frozen=True)
class Bernoulli:
    """Binary intensity: +1 with probability ``p``, otherwise -1."""

    p: float

    def sample(self, rng, size):
        return np.where(rng.random(size) < self.p, 1.0, -1.0)

    def cdf(self, z):
        if z < -1.0:
            return 0.0
        return 1.0 - self.p if z < 1.0 else 1.0

    def mean(self):
        return 2.0 * self.p - 1.0


@dataclass(frozen=True)
class Normal:
    mean_: float
    sd: float

    def sample(self, rng, size):
        return rng.normal(self.mean_, self.sd, size)

    def cdf(self, z):
        return float(stats.norm.cdf(z, self.mean_, self.sd))

    def mean(self):
        return self.mean_


@dataclass(frozen=True)
class NormalMixture:
    weights: tuple
    components: tuple

    def sample(self, rng, size):
        choice = rng.choice(len(self.weights), size=size, p=np.asarray(self.weights))
        out = np.empty(size)
        for idx, comp in enumerate(self.components):
            mask = choice == idx
            out[mask] = comp.sample(rng, int(mask.sum()))
        return out

    def cdf(self, z):
        return float(sum(w * comp.cdf(z) for w, comp in zip(self.weights, self.components)))

    def mean(self):
        return float(sum(w * comp.mean() for w, comp in zip(self.weights, self.components)))


@dataclass(frozen=True)
class NoncentralT:
    """Student t with ``df`` degrees of freedom shifted by ``nc`` before scaling."""

    df: float
    nc: float = 0.0

    def sample(self, rng, size):
        z = rng.standard_normal(size)
        v = rng.chisquare(self.df, size)
        return (z + self.nc) / np.sqrt(v / self.df)

    def cdf(self, z):
        if self.nc == 0.0:
            return float(stats.t.cdf(z, self.df))
        return float(stats.nct.cdf(z, self.df, self.nc))

    def mean(self):
        if self.df <= 1:
            return math.nan
        return self.nc * math.sqrt(self.df / 2.0) * math.gamma((self.df - 1) / 2) / math.gamma(self.df / 2)


IntensityLaw = Union[Bernoulli, Normal, NormalMixture, NoncentralT]


# scenarios ----------------------------------------------------------------

ELLIPSE = EllipseShape(center=(0.1, 0.1), rotation=math.radians(60.0), semi_axis_major=0.35, semi_axis_minor=0.25)
TRIANGLE = TriangleShape(height=0.5)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    shape: Union[EllipseShape, TriangleShape]
    m: int
    inside: IntensityLaw
    outside: IntensityLaw

    @property
    def binary(self) -> bool:
        return isinstance(self.inside, Bernoulli)

    def truth(self, frame: Frame = DEFAULT_FRAME):
        return self.shape.curve(frame)

    def cdf_pair(self, z: float):
        from .loss import CdfPair

        return CdfPair(self.inside.cdf(z), self.outside.cdf(z))


def _continuous(name, shape, inside, outside, m=100):
    return ScenarioSpec(name, shape, m, inside, outside)


PRESETS = {
    "B1": ScenarioSpec("B1", ELLIPSE, 100, Bernoulli(0.5), Bernoulli(0.2)),
    "B2": ScenarioSpec("B2", TRIANGLE, 100, Bernoulli(0.5), Bernoulli(0.2)),
    "B3": ScenarioSpec("B3", ELLIPSE, 500, Bernoulli(0.25), Bernoulli(0.2)),
    "B4": ScenarioSpec("B4", TRIANGLE, 500, Bernoulli(0.25), Bernoulli(0.2)),
    "C1": _continuous("C1", ELLIPSE, Normal(4.0, 1.5), Normal(1.0, 1.0)),
    "C2": _continuous("C2", TRIANGLE, Normal(4.0, 1.5), Normal(1.0, 1.0)),
    # N(2, 10) and N(0, 5) are standard deviations; this reproduces the
    # published optimal (c, k, z) for this case.
    "C3": _continuous(
        "C3", ELLIPSE,
        NormalMixture((0.2, 0.8), (Normal(2.0, 10.0), Normal(0.0, 1.0))),
        Normal(0.0, 5.0),
    ),
    "C4": _continuous("C4", ELLIPSE, NoncentralT(3.0, 1.0), NoncentralT(3.0, 0.0)),
}


def preset_scenario(name: str) -> ScenarioSpec:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise UnknownScenarioError(f"unknown scenario {name!r}; expected one of {sorted(PRESETS)}") from None


# datasets -----------------------------------------------------------------

@dataclass(eq=False)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    scenario: Optional[str] = None
    seed: Optional[int] = None
    m: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1, 2)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("x and y must have the same number of records")

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def binary(self) -> bool:
        return self.n > 0 and bool(np.all((self.y == 1.0) | (self.y == -1.0)))

    def sidecar(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "m": self.m, "n": self.n, "binary": self.binary}


def sample_pixels(m: int, seed) -> np.ndarray:
    """Cell-centred ``m x m`` grid with per-coordinate jitter of half a cell.

    The jitter makes the marginal pixel law exactly uniform on the frame.
    """
    if m < 2:
        raise ValueError("grid side must be at least 2")
    rng = np.random.default_rng(seed)
    centers = (np.arange(m) + 0.5) / m - 0.5
    gx, gy = np.meshgrid(centers, centers, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    jitter = rng.uniform(-0.5 / m, 0.5 / m, size=grid.shape)
    return np.clip(grid + jitter, -0.5, 0.5)


def sample_intensities(pixels, scenario: ScenarioSpec, frame: Frame = DEFAULT_FRAME, seed=None) -> Dataset:
    rng = np.random.default_rng(seed)
    pixels = np.asarray(pixels, dtype=float)
    inside = contains(scenario.truth(frame), pixels, frame)
    y = np.empty(pixels.shape[0])
    # draw the two groups in a fixed order so results depend only on the seed
    y[inside] = scenario.inside.sample(rng, int(inside.sum()))
    y[~inside] = scenario.outside.sample(rng, int((~inside).sum()))
    return Dataset(pixels, y, scenario=scenario.name, m=int(round(math.sqrt(pixels.shape[0]))))


def generate(scenario: ScenarioSpec, seed: int, frame: Frame = DEFAULT_FRAME, m: Optional[int] = None) -> Dataset:
    """Pixels and intensities from independent streams derived from ``seed``."""
    m = scenario.m if m is None else m
    pixels = sample_pixels(m, np.random.SeedSequence([seed, 0]))
    data = sample_intensities(pixels, scenario, frame, np.random.SeedSequence([seed, 1]))
    data.seed = seed
    data.m = m
    return data


# persistence ----------------------------------------------------------------

def write_dataset(data: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("x1,x2,y\n")
        for (x1, x2), y in zip(data.x.tolist(), data.y.tolist()):
            fh.write(f"{x1!r},{x2!r},{y!r}\n")
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(data.sidecar(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_dataset(path) -> Dataset:
    """Load ``x1,x2,y`` CSV (plus optional JSON sidecar) and validate it."""
    path = Path(path)
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x1", "x2", "y"]:
            raise DatasetValidationError(f"{path}: expected header x1,x2,y", row=1)
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DatasetValidationError(f"{path}: row {row_no} has {len(row)} fields", row=row_no)
            try:
                x1, x2, y = (float(v) for v in row)
            except ValueError:
                raise DatasetValidationError(f"{path}: row {row_no} is not numeric", row=row_no) from None
            if not (math.isfinite(x1) and math.isfinite(x2) and math.isfinite(y)):
                raise DatasetValidationError(f"{path}: row {row_no} has non-finite values", row=row_no)
            if not (-0.5 <= x1 <= 0.5 and -0.5 <= x2 <= 0.5):
                raise DatasetValidationError(
                    f"{path}: row {row_no} pixel ({x1}, {x2}) lies outside [-0.5, 0.5]^2", row=row_no
                )
            xs.append((x1, x2))
            ys.append(y)
    if not ys:
        raise DatasetValidationError(f"{path}: no records")
    data = Dataset(np.array(xs), np.array(ys))
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        data.scenario = meta.get("scenario")
        data.seed = meta.get("seed")
        data.m = meta.get("m")
    return data
