"""Scalar schedules: Robbins-Monro gains, noise decay and the cyclical cosine stepsize."""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "CycleSchedule",
    "cosine_stepsize",
    "rm_gain",
    "rm_stepsize_update",
    "noise_schedule",
    "transition_stepsize",
]


def cosine_stepsize(nu0: float, t: int, iterations_per_cycle: int) -> float:
    """``nu0/2 * (cos(pi * mod(t-1, L) / L) + 1)`` for the 1-based iteration `t`."""
    if t < 1:
        raise ValueError(f"cosine schedule is 1-based, got t={t}")
    L = iterations_per_cycle
    return 0.5 * nu0 * (math.cos(math.pi * ((t - 1) % L) / L) + 1.0)


def transition_stepsize(nu_exp: float, beta: float) -> float:
    """Cycle peak stepsize that makes the cosine schedule pass through `nu_exp` at fraction `beta`."""
    return 2.0 * nu_exp / (math.cos(beta * math.pi) + 1.0)


def rm_gain(t: int, epsilon: float) -> float:
    """Vanishing adaptation gain ``(1 + t)^(-epsilon)``."""
    return (1.0 + t) ** (-epsilon)


def rm_stepsize_update(nu: float, alpha_t: float, alpha_star: float, eta_t: float) -> float:
    """One Robbins-Monro step on ``log nu`` towards acceptance rate `alpha_star`."""
    if nu <= 0:
        raise ValueError(f"stepsize must be positive, got {nu}")
    return math.exp(math.log(nu) + eta_t * (alpha_t - alpha_star))


def noise_schedule(a: float, b: float, decay_rate: float, t: int) -> float:
    """Decaying proposal noise ``a * (b + t)^(-decay_rate)``."""
    if b + t <= 0:
        raise ValueError(f"noise schedule needs b + t > 0, got b={b}, t={t}")
    if decay_rate == 0:
        return float(a)
    return a * (b + t) ** (-decay_rate)


@dataclass(frozen=True)
class CycleSchedule:
    """Partition of iterations into exploration / sampling cycles.

    Iteration ``t`` (1-based) sits at position ``k = mod(t-1, L)`` of its
    cycle and is an exploration step iff ``k / L <= beta``.
    """

    iterations_per_cycle: int
    beta: float
    num_cycles: int = 1

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.iterations_per_cycle < 2:
            raise ValueError(f"need at least 2 iterations per cycle, got {self.iterations_per_cycle}")
        if self.num_cycles < 1:
            raise ValueError(f"num_cycles must be positive, got {self.num_cycles}")
        object.__setattr__(self, "_last_exploration", self._compute_last_exploration())

    @property
    def last_exploration_index(self) -> int:
        """Largest in-cycle index ``k`` with ``k / L <= beta``."""
        return self._last_exploration

    def _compute_last_exploration(self) -> int:
        L = self.iterations_per_cycle
        k = int(math.floor(self.beta * L))
        # the float product can land one off either side of an integer
        if (k + 1) / L <= self.beta:
            k += 1
        elif k / L > self.beta:
            k -= 1
        return min(k, L - 1)

    @property
    def total_iterations(self) -> int:
        return self.iterations_per_cycle * self.num_cycles

    def position(self, t: int) -> int:
        return (t - 1) % self.iterations_per_cycle

    def fraction(self, t: int) -> float:
        return self.position(t) / self.iterations_per_cycle

    def cycle(self, t: int) -> int:
        return (t - 1) // self.iterations_per_cycle

    def is_exploration(self, t: int) -> bool:
        return self.position(t) <= self.last_exploration_index

    def is_sampling(self, t: int) -> bool:
        return not self.is_exploration(t)
