"""Random-walk Metropolis and the AM family (AM, Rao-Blackwellised AM, global-scale AM)."""
from __future__ import annotations

import math

import numpy as np

from .schedules import rm_gain, rm_stepsize_update
from .state import ChainState, SamplerConfig, cholesky_jitter

__all__ = ["metropolis", "rw_step", "am_step", "rbam_step", "gam_step"]


def metropolis(state: ChainState, target, proposal: np.ndarray, log_q_ratio: float = 0.0) -> ChainState:
    """Accept or reject `proposal` and advance the chain by one step.

    `log_q_ratio` is ``log q(theta_t | theta') - log q(theta' | theta_t)``; zero
    for symmetric proposals. A uniform is drawn on every call so the random
    stream does not depend on the acceptance ratio.
    """
    log_p = target.log_density(proposal)
    log_ratio = log_p - state.log_density + log_q_ratio
    alpha = math.exp(min(0.0, log_ratio)) if log_ratio == log_ratio else 0.0
    accepted = state.rng.random() < alpha
    if accepted:
        state.position = proposal
        state.log_density = log_p
        state.n_accepted += 1
    state.alpha = alpha
    state.accepted = accepted
    state.t += 1
    return state


def rw_step(state: ChainState, target, config: SamplerConfig | None = None) -> ChainState:
    """Isotropic random walk ``theta' ~ N(theta_t, nu^2 I)`` with the Metropolis rule."""
    if not state.nu > 0:
        raise ValueError(f"stepsize must be positive, got {state.nu}")
    xi = state.rng.standard_normal(state.dimension)
    return metropolis(state, target, state.position + state.nu * xi)


def _propose_scaled(state: ChainState) -> np.ndarray:
    L = cholesky_jitter(state.cov)
    xi = state.rng.standard_normal(state.dimension)
    return state.position + state.nu * (L @ xi)


def _update_moments(state: ChainState, gain: float, x: np.ndarray) -> None:
    dx = x - state.mean
    state.cov = state.cov + gain * (dx[:, None] * dx - state.cov)
    state.mean = state.mean + gain * dx


def am_step(state: ChainState, target, config: SamplerConfig) -> ChainState:
    """Adaptive Metropolis with fixed scale and fixed gain ``config.eta``.

    Proposes from ``N(theta_t, nu^2 Sigma_t)``, then

    ``Sigma_{t+1} = Sigma_t + eta ((theta_{t+1} - mu_t)(theta_{t+1} - mu_t)^T - Sigma_t)``
    and ``mu_{t+1} = mu_t + eta (theta_{t+1} - mu_t)``.
    """
    metropolis(state, target, _propose_scaled(state))
    _update_moments(state, config.eta, state.position)
    return state


def rbam_step(state: ChainState, target, config: SamplerConfig) -> ChainState:
    """AM whose moment update is averaged over the accept/reject decision.

    With acceptance probability ``a`` the mean moves towards
    ``a theta' + (1 - a) theta_t`` and the covariance towards
    ``a (theta' - mu)(theta' - mu)^T + (1 - a)(theta_t - mu)(theta_t - mu)^T``.
    """
    current = state.position
    proposal = _propose_scaled(state)
    metropolis(state, target, proposal)
    a = state.alpha
    d_new = proposal - state.mean
    d_old = current - state.mean
    target_cov = (a * d_new)[:, None] * d_new + ((1.0 - a) * d_old)[:, None] * d_old
    state.cov = state.cov + config.eta * (target_cov - state.cov)
    state.mean = state.mean + config.eta * (a * d_new + (1.0 - a) * d_old)
    return state


def gam_step(state: ChainState, target, config: SamplerConfig) -> ChainState:
    """AM with a global log-scale driven towards ``config.alpha_star``.

    The stepsize moves by ``(1 + t)^(-epsilon) (alpha_t - alpha*)`` on the log
    scale; the moment recursion uses the next gain ``(2 + t)^(-epsilon)`` so the
    first update never collapses the covariance onto a single outer product.
    """
    t = state.t
    metropolis(state, target, _propose_scaled(state))
    state.nu = rm_stepsize_update(state.nu, state.alpha, config.alpha_star, rm_gain(t, config.epsilon))
    _update_moments(state, rm_gain(t + 1, config.epsilon), state.position)
    return state
