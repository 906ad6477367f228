"""Cyclical KAM.

Every cycle of ``L`` iterations starts with an exploration phase of KAM steps
whose subsample is drawn from the current cycle only, and whose stepsize,
noise and adaptation gain restart from their initial values. When the
exploration fraction ``beta`` is reached the proposal covariance is frozen,

``Sigma = (gamma / nu_exp)^2 I + M H M^T``,

and the rest of the cycle is a random-walk Metropolis chain proposing from
``N(theta_t, nu_t^2 Sigma)``. The cosine stepsize ``nu_t`` uses the peak
``nu_0 = 2 nu_exp / (cos(beta pi) + 1)``, which makes it pass through
``nu_exp`` at fraction ``beta``. Only sampling-phase positions are collected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernels import proposal_covariance
from .adaptive import metropolis
from .kam import kam_step
from .schedules import CycleSchedule, cosine_stepsize, noise_schedule, transition_stepsize
from .state import ChainState, SamplerConfig, _centering, cholesky_jitter

__all__ = ["CycleTransition", "freeze_covariance", "iterate_ckam", "ckam_step"]


@dataclass(frozen=True)
class CycleTransition:
    """Quantities fixed at the end of one exploration phase."""

    cycle: int
    nu_exp: float
    nu0: float
    gamma: float
    sigma: np.ndarray
    chol: np.ndarray


def freeze_covariance(state: ChainState, config: SamplerConfig, schedule: CycleSchedule) -> CycleTransition:
    """Compute ``nu_0`` and the frozen sampling covariance from the current exploration state."""
    nu_exp = state.nu
    tau = state.t - state.history.offset
    gamma = noise_schedule(config.noise_a, config.noise_b, config.noise_decay, tau)
    z = state.subsample
    M = 2.0 * config.kernel.gradients(state.position, z).T
    sigma = proposal_covariance(gamma / nu_exp, 1.0, M, _centering(len(z)))
    return CycleTransition(
        cycle=state.t // schedule.iterations_per_cycle,
        nu_exp=nu_exp,
        nu0=transition_stepsize(nu_exp, schedule.beta),
        gamma=gamma,
        sigma=sigma,
        chol=cholesky_jitter(sigma),
    )


def ckam_step(state: ChainState, target, config: SamplerConfig, schedule: CycleSchedule, frozen: CycleTransition | None):
    """Advance the chain by one cKAM iteration.

    Returns ``(phase, stepsize, frozen)`` where `frozen` is the transition of
    the current cycle (``None`` while exploring).
    """
    t = state.t + 1  # 1-based iteration being performed
    k = schedule.position(t)
    if k == 0:
        state.history.restart(state.position, state.t)
        state.subsample = None
        state.subsample_index = None
        state.gram = None
        state.nu = config.nu
        frozen = None
    if k <= schedule.last_exploration_index:
        nu_used = state.nu
        kam_step(state, target, config)
        if k == schedule.last_exploration_index:
            frozen = freeze_covariance(state, config, schedule)
        return "exploration", nu_used, frozen

    nu_t = max(cosine_stepsize(frozen.nu0, t, schedule.iterations_per_cycle), config.nu_floor * frozen.nu0)
    xi = state.rng.standard_normal(state.dimension)
    metropolis(state, target, state.position + nu_t * (frozen.chol @ xi))
    return "sampling", nu_t, frozen


def iterate_ckam(state: ChainState, target, config: SamplerConfig, schedule: CycleSchedule | None = None):
    """Yield ``(phase, stepsize, frozen)`` after every cKAM iteration, without end."""
    if schedule is None:
        schedule = CycleSchedule(config.cycle_length, config.beta)
    frozen = None
    while True:
        phase, nu, frozen = ckam_step(state, target, config, schedule, frozen)
        yield phase, nu, frozen
