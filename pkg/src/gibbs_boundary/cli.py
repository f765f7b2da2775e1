"""Command-line entry point.

Subcommands mirror the pipeline stages (generate, scale, fit, summarize,
plot) plus ``experiment`` for replicated runs.  Exit status is 0 on success,
1 for configuration or input errors and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .datagen import generate, preset_scenario, read_dataset, write_dataset
from .errors import ConfigError, DatasetValidationError, GibbsBoundaryError, UnknownScenarioError
from .experiment import ExperimentConfig, run_experiment
from .loss import LossSpec
from .plot import emit_plot
from .sampler import SamplerConfig, read_chain, run_chain, write_chain
from .scaling import estimate_ckz
from .summary import summarize

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("gibbs_boundary")


def parse_ckz(text: str) -> tuple:
    try:
        c, k, z = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected c,k,z as three numbers, got {text!r}") from None
    return c, k, z


def _truth(name):
    return preset_scenario(name).truth() if name else None


def _write_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_generate(args) -> int:
    scenario = preset_scenario(args.scenario)
    data = generate(scenario, args.seed, m=args.m)
    write_dataset(data, args.out)
    print(f"wrote {data.n} pixels to {args.out}")
    return EXIT_OK


def cmd_scale(args) -> int:
    data = read_dataset(args.data)
    report = estimate_ckz(data, seed=args.seed)
    print(f"{'z':>10} {'c_j':>7} {'k_j':>7} {'F_in':>8} {'F_out':>8} {'gap':>8}")
    for j, rec in enumerate(report.records):
        mark = " *" if j == report.chosen_index else ""
        if rec.error:
            print(f"{rec.z:>10.4f}  failed: {rec.error}")
        else:
            print(f"{rec.z:>10.4f} {rec.c:>7.3f} {rec.k:>7.3f} {rec.f_in:>8.4f} {rec.f_out:>8.4f} {rec.gap:>8.4f}{mark}")
    spec = report.chosen
    print(f"chosen c={spec.c:.4f} k={spec.k:.4f} z={spec.z:.4f}")
    if args.out:
        _write_json(report.to_dict(), args.out)
    return EXIT_OK


def _loss_for(args, data) -> LossSpec:
    if args.fixed_ckz is not None:
        return LossSpec(*args.fixed_ckz)
    if args.scaling:
        record = json.loads(Path(args.scaling).read_text())
        return LossSpec(record["c"], record["k"], record["z"])
    return estimate_ckz(data, seed=args.seed).chosen


def cmd_fit(args) -> int:
    data = read_dataset(args.data)
    spec = _loss_for(args, data)
    base = ExperimentConfig.load(args.config).sampler if args.config else SamplerConfig()
    config = replace(base, seed=args.seed)
    chain = run_chain(data, spec, config=config)
    chain.meta["loss"] = {"c": spec.c, "k": spec.k, "z": spec.z}
    write_chain(chain, args.out)
    rates = ", ".join(f"{k}={v:.3f}" for k, v in chain.acceptance_rates.items())
    print(f"wrote {len(chain)} draws to {args.out} (acceptance {rates})")
    return EXIT_OK


def cmd_summarize(args) -> int:
    chain = read_chain(args.chain)
    summary = summarize(chain, _truth(args.scenario), level=args.level)
    _write_json(summary.to_dict(), args.out)
    err = "n/a" if summary.error is None else f"{summary.error:.4f}"
    print(f"tau={summary.band.tau:.3f} error={err}")
    return EXIT_OK


def cmd_plot(args) -> int:
    summary = json.loads(Path(args.summary).read_text())
    data = read_dataset(args.data) if args.data else None
    emit_plot(summary, args.out, _truth(args.scenario), data)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    raw = json.loads(Path(args.config).read_text()) if args.config else {}
    overrides = {
        "scenario": args.scenario, "seed": args.seed, "reps": args.reps,
        "out": args.out, "workers": args.workers,
        "fixed_ckz": list(args.fixed_ckz) if args.fixed_ckz else None,
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    config = ExperimentConfig.from_dict(raw)
    report = run_experiment(config)
    summary = report.to_dict()
    for rec in report.replications:
        if rec["status"] == "ok":
            err = "n/a" if rec["error"] is None else f"{rec['error']:.4f}"
            print(f"rep {rec['rep']:3d} seed {rec['seed']:6d} error {err}")
        else:
            print(f"rep {rec['rep']:3d} seed {rec['seed']:6d} FAILED {rec.get('message')}")
    if summary["mean_error"] is not None:
        print(f"mean error {summary['mean_error']:.4f} ({summary['sd_error']:.4f})")
    print(f"artifacts in {config.run_dir()}")
    return EXIT_RUNTIME if report.failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gibbs-boundary", description="Boundary detection with Gibbs posteriors.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a preset scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=None, help="grid side (default: scenario's)")
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("scale", help="choose (c, k, z) from data")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON path for the scaling report")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("fit", help="run the sampler on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="experiment JSON whose sampler settings to use")
    p.add_argument("--fixed-ckz", type=parse_ckz)
    p.add_argument("--scaling", help="scaling report JSON to take (c, k, z) from")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="chain CSV path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("summarize", help="posterior mean, band and error for a chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--scenario", help="preset whose true boundary gives the error")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("plot", help="render a summary as SVG")
    p.add_argument("--summary", required=True)
    p.add_argument("--data")
    p.add_argument("--scenario")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("experiment", help="replicated end-to-end runs")
    p.add_argument("--config")
    p.add_argument("--scenario")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--fixed-ckz", type=parse_ckz)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are configuration errors; --help exits cleanly
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UnknownScenarioError, DatasetValidationError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GibbsBoundaryError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
