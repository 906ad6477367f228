"""Chain state, sampler hyperparameters, trace records and shared numerics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg.lapack import dpotrf, dtrtrs

from ..kernels import KernelSpec, Matern, centering_matrix

__all__ = [
    "SamplerError",
    "SamplerConfig",
    "ChainState",
    "TraceRecord",
    "History",
    "init_state",
    "cholesky_jitter",
    "mvn_logpdf",
]

_LOG_2PI = math.log(2.0 * math.pi)


class SamplerError(RuntimeError):
    """Unrecoverable numerical failure inside a sampler."""


@dataclass(frozen=True)
class SamplerConfig:
    """Hyperparameters shared by all samplers; each sampler reads the fields it needs.

    Attributes
    ----------
    nu : float
        Initial (or fixed) stepsize.
    eta : float
        Fixed mean/covariance gain of AM and RBAM.
    epsilon : float
        Robbins-Monro rate; adaptive gains are ``(1 + t)^(-epsilon)``.
    alpha_star : float
        Target acceptance rate.
    subsample_size : int
        Maximum number of history points in the KAM subsample.
    adapt_prob : float
        Probability of refreshing the KAM subsample at each step.
    noise_a, noise_b, noise_decay : float
        KAM noise ``gamma_t = noise_a * (noise_b + t)^(-noise_decay)``.
    burnin : int or None
        Steps discarded by the non-cyclical samplers; ``None`` means 10% of the
        iteration budget.
    cov0 : float
        Initial AM-family covariance is ``cov0 * I``.
    cycle_length, beta : int, float
        cKAM iterations per cycle and exploration fraction.
    kernel : KernelSpec
        Kernel of KAM / cKAM.
    nu_floor : float
        cKAM sampling stepsizes are clamped to at least ``nu_floor * nu0``.
    """

    nu: float = 1.0
    eta: float = 0.1
    epsilon: float = 0.75
    alpha_star: float = 0.234
    subsample_size: int = 30
    adapt_prob: float = 0.5
    noise_a: float = 0.2
    noise_b: float = 1.0
    noise_decay: float = 0.0
    burnin: int | None = None
    cov0: float = 1.0
    cycle_length: int = 1000
    beta: float = 0.4
    kernel: KernelSpec = field(default_factory=lambda: Matern(4.0, 2.0))
    nu_floor: float = 1e-6

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not 0 < self.alpha_star < 1:
            raise ValueError(f"alpha_star must lie in (0, 1), got {self.alpha_star}")
        if self.subsample_size < 1:
            raise ValueError(f"subsample_size must be >= 1, got {self.subsample_size}")
        if not 0 <= self.adapt_prob <= 1:
            raise ValueError(f"adapt_prob must lie in [0, 1], got {self.adapt_prob}")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.noise_a < 0 or self.noise_decay < 0:
            raise ValueError("noise_a and noise_decay must be non-negative")
        if not self.noise_b > 0:
            raise ValueError(f"noise_b must be positive, got {self.noise_b}")
        if self.cycle_length < 2:
            raise ValueError(f"cycle_length must be >= 2, got {self.cycle_length}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0 <= self.nu_floor < 1:
            raise ValueError(f"nu_floor must lie in [0, 1), got {self.nu_floor}")
        if not self.cov0 > 0:
            raise ValueError(f"cov0 must be positive, got {self.cov0}")
        if self.burnin is not None and self.burnin < 0:
            raise ValueError(f"burnin must be non-negative, got {self.burnin}")


@dataclass(slots=True)
class TraceRecord:
    iteration: int
    wall_clock_s: float
    position: np.ndarray
    phase: str  # burnin | exploration | sampling | collected
    stepsize: float
    accepted: bool

    @property
    def is_sample(self) -> bool:
        return self.phase in ("sampling", "collected")


class History:
    """Append-only buffer of chain positions.

    ``offset`` is the global iteration index of the first stored position, so
    stored row ``i`` is ``theta_{offset + i}``.
    """

    def __init__(self, dimension: int, capacity: int = 1024):
        self._buf = np.empty((capacity, dimension))
        self._n = 0
        self.offset = 0

    def __len__(self) -> int:
        return self._n

    def append(self, x) -> None:
        if self._n == len(self._buf):
            grown = np.empty((2 * len(self._buf), self._buf.shape[1]))
            grown[: self._n] = self._buf[: self._n]
            self._buf = grown
        self._buf[self._n] = x
        self._n += 1

    def restart(self, x, offset: int) -> None:
        """Forget everything and start again from position `x` at iteration `offset`."""
        self._n = 0
        self.offset = offset
        self.append(x)

    def view(self) -> np.ndarray:
        return self._buf[: self._n]


@dataclass
class ChainState:
    """Mutable state of one chain. Step functions update it in place and return it."""

    position: np.ndarray
    log_density: float
    rng: np.random.Generator
    nu: float
    gamma: float = 0.0
    t: int = 0
    history: History | None = None
    subsample: np.ndarray | None = None
    subsample_index: np.ndarray | None = None
    gram: np.ndarray | None = None  # M H M^T at position for the current subsample
    mean: np.ndarray | None = None
    cov: np.ndarray | None = None
    alpha: float = 1.0
    accepted: bool = False
    n_accepted: int = 0

    @property
    def dimension(self) -> int:
        return self.position.shape[0]


def init_state(theta0, target, config: SamplerConfig, rng: np.random.Generator) -> ChainState:
    theta0 = np.array(theta0, dtype=float)
    if theta0.ndim != 1 or theta0.shape[0] != target.dimension:
        raise ValueError(f"theta0 must have shape ({target.dimension},), got {theta0.shape}")
    history = History(theta0.shape[0])
    history.append(theta0)
    return ChainState(
        position=theta0,
        log_density=target.log_density(theta0),
        rng=rng,
        nu=config.nu,
        gamma=config.noise_a,
        history=history,
        mean=theta0.copy(),
        cov=config.cov0 * np.eye(theta0.shape[0]),
    )


def cholesky_jitter(C: np.ndarray, attempts: int = 3) -> np.ndarray:
    """Lower Cholesky factor of `C`, adding diagonal jitter on failure.

    The first retry adds ``1e-9 * mean(diag C)``; each further retry multiplies
    the jitter by 10.

    Raises
    ------
    SamplerError
        If `C` is still not positive definite after `attempts` retries.
    """
    L, info = dpotrf(C, lower=1, clean=1)
    if info == 0:
        return L
    scale = float(np.mean(np.diag(C)))
    if not (math.isfinite(scale) and scale > 0):
        scale = 1.0
    jitter = 1e-9 * scale
    eye = np.eye(C.shape[0])
    for _ in range(attempts):
        L, info = dpotrf(C + jitter * eye, lower=1, clean=1)
        if info == 0:
            return L
        jitter *= 10.0
    raise SamplerError(f"covariance not positive definite after {attempts} jitter attempts")


def mvn_logpdf(x: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> float:
    """Log density of ``N(mean, chol chol^T)`` at `x`."""
    sol, _ = dtrtrs(chol, x - mean, lower=1)
    return float(-0.5 * (sol @ sol) - np.log(chol.diagonal()).sum() - 0.5 * len(x) * _LOG_2PI)


@lru_cache(maxsize=64)
def _centering(m: int) -> np.ndarray:
    H = centering_matrix(m)
    H.setflags(write=False)
    return H
