"""Kernel Adaptive Metropolis-Hastings.

The proposal at ``theta`` is ``N(theta, gamma^2 I + nu^2 M H M^T)`` where ``M``
stacks doubled kernel gradients at ``theta`` against a random subsample ``z``
of the chain history and ``H`` is the centering matrix. The proposal is not
symmetric, so the acceptance ratio carries both proposal densities.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.linalg.lapack import dtrtrs

from .adaptive import metropolis
from .schedules import noise_schedule, rm_gain, rm_stepsize_update
from .state import ChainState, SamplerConfig, cholesky_jitter, mvn_logpdf

__all__ = ["kam_step", "kam_covariance", "kam_log_proposal", "refresh_subsample"]


def _gradient_gram(kernel, theta: np.ndarray, subsample: np.ndarray) -> np.ndarray:
    # M H M^T == 4 Gc^T Gc, Gc = kernel gradients minus their mean over the subsample
    G = kernel.gradients(theta, subsample)
    Gc = G - np.add.reduce(G, 0) * (1.0 / len(G))
    return (Gc.T @ Gc) * 4.0


@lru_cache(maxsize=16)
def _eye(d: int) -> np.ndarray:
    eye = np.eye(d)
    eye.setflags(write=False)
    return eye


def _assemble(gram: np.ndarray, gamma: float, nu: float) -> np.ndarray:
    return gram * (nu * nu) + _eye(len(gram)) * (gamma * gamma)


def kam_covariance(kernel, theta: np.ndarray, subsample: np.ndarray, gamma: float, nu: float) -> np.ndarray:
    """Proposal covariance ``gamma^2 I + nu^2 M H M^T`` at `theta` for a fixed `subsample`."""
    return _assemble(_gradient_gram(kernel, theta, subsample), gamma, nu)


def kam_log_proposal(kernel, x, given, subsample, gamma: float, nu: float) -> float:
    """``log q_z(x | given)``, a full multivariate normal log density."""
    C = kam_covariance(kernel, np.asarray(given, float), subsample, gamma, nu)
    return mvn_logpdf(np.asarray(x, float), np.asarray(given, float), cholesky_jitter(C))


def _distinct_indices(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    # draws with replacement are kept only when all distinct, which leaves a
    # uniform random subset; much cheaper than choice() for size << n
    if size * size < n:
        for _ in range(4):
            idx = rng.integers(0, n, size=size)
            if len(set(idx.tolist())) == size:
                return idx
    return rng.choice(n, size=size, replace=False)


def refresh_subsample(state: ChainState, size: int) -> None:
    """Draw `size` distinct history points uniformly (the history includes the current position)."""
    pool = state.history.view()
    idx = _distinct_indices(state.rng, len(pool), size)
    state.subsample = pool[idx].copy()
    state.subsample_index = state.history.offset + idx
    state.gram = None


def kam_step(state: ChainState, target, config: SamplerConfig) -> ChainState:
    """One KAM iteration: subsample refresh, proposal, MH correction, stepsize adaptation.

    The adaptation clock ``tau`` counts steps since ``state.history.offset``;
    it drives the subsample size ``min(m, tau + 1)``, the Robbins-Monro gain
    ``(1 + tau)^(-epsilon)`` and the noise schedule. Plain KAM never moves the
    offset, cKAM moves it to the start of every cycle.
    """
    kernel = config.kernel
    tau = state.t - state.history.offset
    size = min(config.subsample_size, tau + 1)
    refresh = state.rng.random() < config.adapt_prob
    if refresh or state.subsample is None or len(state.subsample) < size:
        refresh_subsample(state, size)
    z = state.subsample

    gamma = noise_schedule(config.noise_a, config.noise_b, config.noise_decay, tau)
    state.gamma = gamma
    theta = state.position
    # the Gram matrix only depends on (theta, z); nu and gamma enter as scalars
    gram_cur = state.gram if state.gram is not None else _gradient_gram(kernel, theta, z)
    L_fwd = cholesky_jitter(_assemble(gram_cur, gamma, state.nu))
    xi = state.rng.standard_normal(state.dimension)
    proposal = theta + L_fwd @ xi
    gram_prop = _gradient_gram(kernel, proposal, z)
    L_rev = cholesky_jitter(_assemble(gram_prop, gamma, state.nu))
    # L_fwd^{-1} (proposal - theta) is xi itself; constants cancel in the ratio
    sol, _ = dtrtrs(L_rev, theta - proposal, lower=1)
    log_q_ratio = 0.5 * float(xi @ xi - sol @ sol) - math.log(float(np.prod(L_rev.diagonal() / L_fwd.diagonal())))

    metropolis(state, target, proposal, log_q_ratio)
    state.gram = gram_prop if state.accepted else gram_cur
    state.nu = rm_stepsize_update(state.nu, state.alpha, config.alpha_star, rm_gain(tau, config.epsilon))
    state.history.append(state.position)
    return state
