"""Run an :class:`ExperimentConfig` and write its trace, checkpoints and summary."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..diagnostics import effective_sample_size, grid_symmetric_kl, marginal_mean_symmetric_kl
from ..samplers import SamplerError, TraceRecord, VirtualClock, iterate
from .config import ExperimentConfig

__all__ = ["Checkpoint", "RunResult", "RunError", "run_experiment", "emit_outputs", "format_float"]

log = logging.getLogger("ckam.harness")

# minimum collected samples before a checkpoint is recorded (ESS needs 10)
MIN_CHECKPOINT_SAMPLES = 10


class RunError(RuntimeError):
    """A sampler or I/O failure, with the run context in the message."""


@dataclass(frozen=True)
class Checkpoint:
    wall_clock_s: float
    sym_kl: float
    ess: float


@dataclass
class RunResult:
    config: ExperimentConfig
    samples: np.ndarray
    trace: list[TraceRecord] = field(repr=False)
    checkpoints: list[Checkpoint]
    acceptance_rate: float
    total_seconds: float

    def summary(self) -> dict:
        last = self.checkpoints[-1] if self.checkpoints else None
        return {
            "acceptance_rate": self.acceptance_rate,
            "n_iterations": len(self.trace),
            "n_samples": int(len(self.samples)),
            "total_seconds": self.total_seconds,
            "final_sym_kl": None if last is None else last.sym_kl,
            "final_ess": None if last is None else last.ess,
            "n_checkpoints": len(self.checkpoints),
        }


class _PausableClock:
    """Wall clock that excludes the time spent computing diagnostics."""

    def __init__(self):
        self._start = time.perf_counter()
        self._paused = 0.0
        self._pause_start = None

    def __call__(self) -> float:
        return time.perf_counter() - self._start - self._paused

    def pause(self):
        self._pause_start = time.perf_counter()

    def resume(self):
        self._paused += time.perf_counter() - self._pause_start


def _metric(config: ExperimentConfig, target, samples: np.ndarray) -> float:
    if config.dimension == 2:
        return grid_symmetric_kl(samples, target, config.mesh, config.smoothing_eps)
    return marginal_mean_symmetric_kl(samples, target, config.bins, config.smoothing_eps)


def run_experiment(config: ExperimentConfig, virtual_clock: bool = False) -> RunResult:
    """Run the configured sampler to its budget with periodic diagnostics.

    Every ``checkpoint_every`` iterations, and once at the end, the KL metric
    (grid KL for 2-d targets, mean marginal KL otherwise) and the ESS of all
    samples collected so far are recorded, provided at least 10 samples exist.

    With `virtual_clock` the clock reads ``n`` at the ``n``-th iteration and a
    seconds budget becomes an iteration budget, so outputs are reproducible.

    Raises
    ------
    RunError
        When the sampler fails; the message carries the iteration and seed.
    """
    target = config.make_target()
    rng = np.random.default_rng(config.seed)
    clock = VirtualClock() if virtual_clock else _PausableClock()
    theta0 = np.array(config.theta0, dtype=float)
    n_iter = config.budget_iters
    seconds = config.budget_seconds
    if seconds is not None and virtual_clock:
        n_iter = int(seconds)

    samples: list[np.ndarray] = []
    trace: list[TraceRecord] = []
    checkpoints: list[Checkpoint] = []
    n_accepted = 0

    def checkpoint(rec: TraceRecord):
        if len(samples) < MIN_CHECKPOINT_SAMPLES:
            return
        if checkpoints and checkpoints[-1].wall_clock_s >= rec.wall_clock_s:
            return
        if not virtual_clock:
            clock.pause()
        arr = np.asarray(samples)
        kl = _metric(config, target, arr)
        try:
            ess = effective_sample_size(arr)
        except ValueError:  # a chain stuck at one point
            ess = 0.0
        checkpoints.append(Checkpoint(rec.wall_clock_s, kl, ess))
        if not virtual_clock:
            clock.resume()
        log.debug("iter %d: n=%d sym_kl=%.4g ess=%.1f", rec.iteration, len(arr), kl, ess)

    budget_zero = n_iter == 0 or seconds == 0
    it = iter(()) if budget_zero else iterate(
        config.sampler, target, theta0, config.sampler_config, rng, clock, n_iter=n_iter)
    rec = None
    while True:
        try:
            rec = next(it)
        except StopIteration:
            break
        except (SamplerError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise RunError(f"{config.sampler} on {config.target} failed at iteration {len(trace) + 1} "
                           f"(seed {config.seed}): {exc}") from exc
        trace.append(rec)
        n_accepted += rec.accepted
        if rec.is_sample:
            samples.append(rec.position)
        if len(trace) % config.checkpoint_every == 0:
            checkpoint(rec)
        if seconds is not None and not virtual_clock and rec.wall_clock_s >= seconds:
            break
    if rec is not None:
        checkpoint(rec)

    arr = np.asarray(samples) if samples else np.empty((0, config.dimension))
    total = trace[-1].wall_clock_s if trace else 0.0
    rate = n_accepted / len(trace) if trace else 0.0
    log.info("%s/%s seed %d: %d iterations, %d samples, acceptance %.3f",
             config.target, config.sampler, config.seed, len(trace), len(arr), rate)
    return RunResult(config, arr, trace, checkpoints, rate, total)


def format_float(x: float) -> str:
    """17 significant digits: parsing the string back gives the same double."""
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_outputs(result: RunResult, out_dir) -> dict[str, Path]:
    """Write ``trace.csv``, ``checkpoints.csv`` and ``summary.json`` into `out_dir`.

    Returns the written paths keyed by file stem.

    Raises
    ------
    RunError
        If the directory or a file cannot be written; the path is in the message.
    """
    out = Path(out_dir)
    paths = {name: out / f"{name}.{ext}" for name, ext in
             (("trace", "csv"), ("checkpoints", "csv"), ("summary", "json"))}
    d = result.config.dimension
    f = format_float
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(
            paths["trace"],
            ["iter", "wall_clock_s", "phase", "stepsize", "accepted", *(f"x{i}" for i in range(d))],
            ([r.iteration, f(r.wall_clock_s), r.phase, f(r.stepsize), int(r.accepted), *map(f, r.position)]
             for r in result.trace),
        )
        _write_csv(
            paths["checkpoints"],
            ["wall_clock_s", "sym_kl", "ess"],
            ([f(c.wall_clock_s), f(c.sym_kl), f(c.ess)] for c in result.checkpoints),
        )
        doc = {"config": result.config.echo(), "summary": result.summary()}
        paths["summary"].write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise RunError(f"cannot write outputs to {exc.filename or out}: {exc.strerror}") from exc
    return paths
