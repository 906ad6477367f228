"""Uniform driver over all six samplers."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .adaptive import am_step, gam_step, rbam_step, rw_step
from .cyclical import iterate_ckam
from .kam import kam_step
from .schedules import CycleSchedule
from .state import ChainState, SamplerConfig, TraceRecord, init_state

__all__ = [
    "SAMPLERS",
    "WallClock",
    "VirtualClock",
    "ChainResult",
    "iterate",
    "run_chain",
    "ckam_run",
]

STEPS = {
    "rw": rw_step,
    "am": am_step,
    "rbam": rbam_step,
    "gam": gam_step,
    "kam": kam_step,
}
SAMPLERS = (*STEPS, "ckam")


class WallClock:
    """Monotonic seconds since construction."""

    def __init__(self):
        self._start = time.perf_counter()

    def __call__(self) -> float:
        return time.perf_counter() - self._start


class VirtualClock:
    """Deterministic clock: the ``n``-th reading is ``n`` seconds."""

    def __init__(self):
        self._n = 0

    def __call__(self) -> float:
        self._n += 1
        return float(self._n)


def _burnin(config: SamplerConfig, n_iter: int | None) -> int:
    if config.burnin is not None:
        return config.burnin
    return 0 if n_iter is None else n_iter // 10


def iterate(sampler: str, target, theta0, config: SamplerConfig, rng: np.random.Generator,
            clock=None, n_iter: int | None = None, state: ChainState | None = None):
    """Yield one :class:`TraceRecord` per iteration.

    Runs for `n_iter` iterations, or forever when `n_iter` is None. Samples
    are the records whose ``is_sample`` is true: after burn-in for the
    non-cyclical samplers, sampling phases for cKAM.
    """
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")
    clock = WallClock() if clock is None else clock
    if state is None:
        state = init_state(theta0, target, config, rng)

    if sampler == "ckam":
        steps = iterate_ckam(state, target, config)
        i = 0
        while n_iter is None or i < n_iter:
            phase, nu, _ = next(steps)
            i += 1
            yield TraceRecord(state.t, clock(), state.position, phase, nu, state.accepted)
        return

    step = STEPS[sampler]
    burnin = _burnin(config, n_iter)
    i = 0
    while n_iter is None or i < n_iter:
        t, nu = state.t, state.nu
        step(state, target, config)
        i += 1
        phase = "collected" if t >= burnin else "burnin"
        yield TraceRecord(state.t, clock(), state.position, phase, nu, state.accepted)


def _collect(sampler: str, target, config: SamplerConfig, state: ChainState, n_iter: int) -> list:
    # same steps and random stream as iterate(), minus the per-step records
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")
    samples = []
    if sampler == "ckam":
        steps = iterate_ckam(state, target, config)
        for _ in range(n_iter):
            if next(steps)[0] == "sampling":
                samples.append(state.position)
        return samples
    step = STEPS[sampler]
    burnin = _burnin(config, n_iter)
    for t in range(n_iter):
        step(state, target, config)
        if t >= burnin:
            samples.append(state.position)
    return samples


@dataclass
class ChainResult:
    samples: np.ndarray
    trace: list[TraceRecord] = field(repr=False)
    state: ChainState = field(repr=False)

    @property
    def acceptance_rate(self) -> float:
        return self.state.n_accepted / max(self.state.t, 1)


def run_chain(sampler: str, target, theta0, config: SamplerConfig, *, n_iter: int | None = None,
              seconds: float | None = None, seed: int | None = None, rng: np.random.Generator | None = None,
              clock=None, keep_trace: bool = True) -> ChainResult:
    """Run one chain to an iteration or wall-clock budget.

    Exactly one of `n_iter` and `seconds` must be given. The random stream
    comes from `rng`, or from ``np.random.default_rng(seed)``.
    """
    if (n_iter is None) == (seconds is None):
        raise ValueError("give exactly one of n_iter and seconds")
    rng = np.random.default_rng(seed) if rng is None else rng
    state = init_state(theta0, target, config, rng)
    if seconds is None and not keep_trace and clock is None:
        samples = _collect(sampler, target, config, state, n_iter)
        arr = np.array(samples) if samples else np.empty((0, state.dimension))
        return ChainResult(arr, [], state)
    clock = WallClock() if clock is None else clock
    samples, trace = [], []
    for rec in iterate(sampler, target, theta0, config, rng, clock, n_iter, state):
        if rec.is_sample:
            samples.append(rec.position)
        if keep_trace:
            trace.append(rec)
        if seconds is not None and rec.wall_clock_s >= seconds:
            break
    arr = np.array(samples) if samples else np.empty((0, state.dimension))
    return ChainResult(arr, trace, state)


def ckam_run(theta0, target, kernel, schedule: CycleSchedule, config: SamplerConfig, budget=None, *,
             seed: int | None = None, rng=None, clock=None):
    """Run cKAM and return ``(samples, trace)``.

    `budget` is an iteration count (int) or wall-clock seconds (float); by
    default the schedule's ``num_cycles`` full cycles are run.
    """
    config = replace(config, kernel=kernel, cycle_length=schedule.iterations_per_cycle, beta=schedule.beta)
    if budget is None:
        kwargs = {"n_iter": schedule.total_iterations}
    elif isinstance(budget, (int, np.integer)):
        kwargs = {"n_iter": int(budget)}
    else:
        kwargs = {"seconds": float(budget)}
    res = run_chain("ckam", target, theta0, config, seed=seed, rng=rng, clock=clock, **kwargs)
    return res.samples, res.trace
