"""Command line entry point.

::

    ckam run CONFIG [CONFIG ...] [--seed S [S ...]] [--budget-iters N | --budget-seconds X]
             [--out DIR] [--jobs K] [--virtual-clock]
    ckam presets list
    ckam validate CONFIG

CONFIG is a TOML file or a preset name such as ``bimodal/ckam``. Exit status
is 0 on success, 2 on a configuration error and 3 on a runtime error. Log
verbosity comes from the ``CKAM_LOG_LEVEL`` environment variable.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ExperimentConfig, list_presets, load_config
from .runner import RunError, emit_outputs, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("ckam.harness")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckam", description="Adaptive and cyclical kernel adaptive MCMC experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more configs")
    run.add_argument("configs", nargs="+", metavar="CONFIG", help="TOML file or preset name")
    run.add_argument("--seed", type=int, nargs="+", help="seed(s); one run per seed and config")
    budget = run.add_mutually_exclusive_group()
    budget.add_argument("--budget-iters", type=int, metavar="N")
    budget.add_argument("--budget-seconds", type=float, metavar="X")
    run.add_argument("--out", help="output directory (default: run.out, else ./runs)")
    run.add_argument("--jobs", type=int, default=1, metavar="K", help="independent runs in parallel")
    run.add_argument("--virtual-clock", action="store_true",
                     help="clock counts iterations instead of seconds (reproducible outputs)")

    presets = sub.add_parser("presets", help="shipped presets")
    presets.add_argument("action", choices=["list"])

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config", metavar="CONFIG")
    return p


def _source(arg: str):
    return arg if arg in list_presets() else Path(arg)


def _job_dir(base: Path, cfg_arg: str, seed: int, single: bool) -> Path:
    if single:
        return base
    stem = cfg_arg.replace("/", "-") if cfg_arg in list_presets() else Path(cfg_arg).stem
    return base / f"{stem}-seed{seed}"


def _run_one(job) -> tuple[str, dict]:
    config, out, virtual = job
    result = run_experiment(config, virtual_clock=virtual)
    emit_outputs(result, out)
    return str(out), result.summary()


def _cmd_run(args) -> int:
    if args.jobs < 1:
        raise ConfigError(f"--jobs: must be >= 1, got {args.jobs}")
    configs = [(a, load_config(_source(a))) for a in args.configs]
    jobs = []
    for arg, cfg in configs:
        for seed in args.seed or [cfg.seed]:
            jobs.append((arg, cfg.with_overrides(seed=seed, budget_iters=args.budget_iters,
                                                 budget_seconds=args.budget_seconds)))
    single = len(jobs) == 1
    work = []
    for arg, cfg in jobs:
        base = Path(args.out or cfg.out or "runs")
        work.append((cfg, _job_dir(base, arg, cfg.seed, single), args.virtual_clock))
    if args.jobs == 1 or single:
        results = map(_run_one, work)
        for out, summary in results:
            _report(out, summary)
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for out, summary in pool.map(_run_one, work):
                _report(out, summary)
    return EXIT_OK


def _report(out: str, summary: dict) -> None:
    kl = summary["final_sym_kl"]
    kl_text = "n/a" if kl is None else f"{kl:.4g}"
    print(f"{out}: {summary['n_iterations']} iterations, {summary['n_samples']} samples, "
          f"acceptance {summary['acceptance_rate']:.3f}, final sym KL {kl_text}")


def _describe(cfg: ExperimentConfig) -> str:
    budget = f"{cfg.budget_iters} iterations" if cfg.budget_iters is not None else f"{cfg.budget_seconds} s"
    return f"ok: {cfg.sampler} on {cfg.target} (d={cfg.dimension}), seed {cfg.seed}, {budget}"


def main(argv=None) -> int:
    level = os.environ.get("CKAM_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "presets":
            print("\n".join(list_presets()))
        elif args.command == "validate":
            print(_describe(load_config(_source(args.config))))
        else:
            return _cmd_run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
