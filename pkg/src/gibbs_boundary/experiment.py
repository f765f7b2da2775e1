"""Replicated experiments: generate or load data, scale, sample, summarise.

Every artifact for a run lands under ``<out>/<name>-<config hash>-seed<seed>``,
one subdirectory per replication.  Replication ``r`` uses master seed
``seed + r``; the scaling and sampling stages draw from separate streams
derived from it, so reports are reproducible regardless of worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .datagen import generate, preset_scenario, read_dataset, write_dataset
from .errors import ConfigError, GibbsBoundaryError
from .loss import LossSpec
from .model import PriorSpec
from .plot import emit_plot
from .sampler import SamplerConfig, run_chain, write_chain
from .scaling import GRID_SIZE, SA_BUDGET, SA_RESTARTS, estimate_ckz
from .summary import summarize

log = logging.getLogger(__name__)

DEFAULT_REPS = 10


@dataclass(frozen=True)
class ScalingSettings:
    g: int = GRID_SIZE
    budget: int = SA_BUDGET
    restarts: int = SA_RESTARTS


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Optional[str] = "C1"
    dataset: Optional[str] = None
    m: Optional[int] = None
    # None means auto scaling; otherwise (c, k, z)
    fixed_ckz: Optional[tuple] = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    prior: PriorSpec = field(default_factory=PriorSpec)
    scaling: ScalingSettings = field(default_factory=ScalingSettings)
    reps: int = DEFAULT_REPS
    seed: int = 0
    out: str = "runs"
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if (self.scenario is None) == (self.dataset is None):
            raise ConfigError("give exactly one of scenario or dataset")
        if self.scenario is not None:
            preset_scenario(self.scenario)
        if self.dataset is not None and not Path(self.dataset).is_file():
            raise ConfigError(f"dataset {self.dataset} does not exist")
        if self.fixed_ckz is not None:
            if len(self.fixed_ckz) != 3:
                raise ConfigError("fixed_ckz needs three numbers c,k,z")
            try:
                LossSpec(*map(float, self.fixed_ckz))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "sampler" in raw:
                sampler = dict(raw["sampler"])
                if "move_probabilities" in sampler:
                    sampler["move_probabilities"] = tuple(sampler["move_probabilities"])
                raw["sampler"] = SamplerConfig(**sampler)
            if "prior" in raw:
                raw["prior"] = PriorSpec(**raw["prior"])
            if "scaling" in raw:
                raw["scaling"] = ScalingSettings(**raw["scaling"])
            if raw.get("fixed_ckz") is not None:
                raw["fixed_ckz"] = tuple(float(v) for v in raw["fixed_ckz"])
            if raw.get("dataset") is not None and "scenario" not in raw:
                raw["scenario"] = None
            return cls(**raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["fixed_ckz"] = list(self.fixed_ckz) if self.fixed_ckz is not None else None
        return out

    def result_fields(self) -> dict:
        """Config fields that affect results (everything but output location and workers)."""
        record = self.to_dict()
        record.pop("out")
        record.pop("workers")
        return record

    def config_hash(self) -> str:
        record = self.result_fields()
        record.pop("seed")
        blob = json.dumps(record, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @property
    def name(self) -> str:
        return self.scenario.upper() if self.scenario else Path(self.dataset).stem

    def run_dir(self) -> Path:
        return Path(self.out) / f"{self.name}-{self.config_hash()}-seed{self.seed}"


@dataclass
class ExperimentReport:
    config: dict
    replications: list
    timings: list = field(default_factory=list)

    def _values(self, key):
        return [r[key] for r in self.replications if r.get(key) is not None]

    @staticmethod
    def _mean_sd(values):
        if not values:
            return None, None
        arr = np.asarray(values, dtype=float)
        sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), sd

    @property
    def errors(self) -> list:
        return self._values("error")

    @property
    def failed(self) -> list:
        return [r["rep"] for r in self.replications if r["status"] != "ok"]

    def to_dict(self) -> dict:
        mean, sd = self._mean_sd(self.errors)
        out = {
            "config": self.config,
            "n_reps": len(self.replications),
            "failed": self.failed,
            "mean_error": mean,
            "sd_error": sd,
            "replications": self.replications,
        }
        if all(r.get("scaling") for r in self.replications if r["status"] == "ok"):
            for key in ("c", "k", "z"):
                vals = [r["scaling"][key] for r in self.replications if r.get("scaling")]
                out[f"mean_{key}"], out[f"sd_{key}"] = self._mean_sd(vals)
        return out


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_replication(config: ExperimentConfig, rep: int, run_dir: Path):
    """One full pass for replication ``rep``; returns (record, seconds)."""
    rep_seed = config.seed + rep
    rep_dir = run_dir / f"rep{rep:03d}"
    rep_dir.mkdir(parents=True, exist_ok=True)
    record = {"rep": rep, "seed": rep_seed, "status": "ok", "error": None, "scaling": None}
    start = time.perf_counter()
    try:
        if config.scenario is not None:
            scenario = preset_scenario(config.scenario)
            data = generate(scenario, rep_seed, m=config.m)
            truth = scenario.truth()
        else:
            data = read_dataset(config.dataset)
            truth = None
        write_dataset(data, rep_dir / "data.csv")

        if config.fixed_ckz is not None:
            spec = LossSpec(*config.fixed_ckz)
        else:
            report = estimate_ckz(
                data, config.scaling.g, config.scaling.budget, config.scaling.restarts,
                seed=np.random.SeedSequence([rep_seed, 2]),
            )
            spec = report.chosen
            _dump(report.to_dict(), rep_dir / "scaling.json")
            record["scaling"] = {"c": spec.c, "k": spec.k, "z": spec.z}

        chain_seed = int(np.random.SeedSequence([rep_seed, 3]).generate_state(1)[0])
        chain = run_chain(data, spec, config.prior, replace(config.sampler, seed=chain_seed))
        chain.meta["loss"] = {"c": spec.c, "k": spec.k, "z": spec.z}
        write_chain(chain, rep_dir / "chain.csv")

        summary = summarize(chain, truth)
        _dump(summary.to_dict(), rep_dir / "summary.json")
        emit_plot(summary, rep_dir / "plot.svg", truth, data)

        record["error"] = summary.error
        record["tau"] = summary.band.tau
        record["acceptance_rates"] = chain.acceptance_rates
        D = chain.D_trace
        record["D_mean"] = float(D.mean())
        record["D_range"] = [int(D.min()), int(D.max())]
    except (GibbsBoundaryError, ValueError, OSError) as exc:
        log.exception("replication %d failed", rep)
        record["status"] = "failed"
        record["message"] = f"{type(exc).__name__}: {exc}"
    return record, time.perf_counter() - start


def _run_one(args):
    return run_replication(*args)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run all replications and write ``report.json`` plus ``timings.json``.

    Wall-clock times are kept out of ``report.json`` so that report is
    byte-identical across reruns.
    """
    run_dir = config.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    _dump(config.to_dict(), run_dir / "config.json")
    jobs = [(config, rep, run_dir) for rep in range(config.reps)]
    if config.workers > 1 and config.reps > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, config.reps)) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    records = [rec for rec, _ in results]
    timings = [round(sec, 3) for _, sec in results]
    report = ExperimentReport(config.result_fields(), records, timings)
    _dump(report.to_dict(), run_dir / "report.json")
    _dump({"seconds": timings, "total": round(math.fsum(timings), 3)}, run_dir / "timings.json")
    return report
