"""Kernels, their gradients and the KAM proposal covariance.

Three kernels are provided: :class:`Linear`, :class:`RBF` and :class:`Matern`.
Each one evaluates ``k(theta, z)`` and the gradient with respect to ``theta``,
both for a single pair and batched over a set of subsample points.

The Matérn kernel needs the modified Bessel function of the second kind.
Only integer and half-integer orders are supported (see :func:`bessel_k`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "Linear",
    "RBF",
    "Matern",
    "KernelSpec",
    "bessel_k",
    "kernel_eval",
    "kernel_gradient",
    "kernel_gradient_matrix",
    "centering_matrix",
    "proposal_covariance",
]

# distances below this are treated as exactly zero
DIST_FLOOR = 1e-12


def _is_half_integer(v: float) -> bool:
    return float(2 * v).is_integer() and not float(v).is_integer()


def bessel_k(order: float, x):
    """Modified Bessel function of the second kind ``K_order(x)``.

    Parameters
    ----------
    order : float
        Non-negative integer or half-integer order.
    x : float or array_like
        Strictly positive arguments.

    Returns
    -------
    float or ndarray
        ``K_order(x)``, same shape as `x`.

    Notes
    -----
    Integer orders start from ``K_0`` and ``K_1`` (exponentially scaled, so
    large arguments do not underflow mid-recurrence) and run the upward
    recurrence ``K_{n+1}(x) = K_{n-1}(x) + (2n/x) K_n(x)``, which is stable
    for ``K``. Half-integer orders use the terminating series

    ``K_{n+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_k (n+k)! / (k! (n-k)!) (2x)^{-k}``.
    """
    order = abs(float(order))
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_k requires x > 0")
    return _bessel_k(order, x)


def _bessel_k(order: float, x: np.ndarray) -> np.ndarray:
    n = int(order)
    if n == order:
        k_prev = special.k0e(x)
        if n == 0:
            return k_prev * np.exp(-x)
        k_cur = special.k1e(x)
        if n > 1:
            inv_x = 2.0 / x
            for j in range(1, n):
                k_prev, k_cur = k_cur, k_prev + (j * inv_x) * k_cur
        return k_cur * np.exp(-x)
    if _is_half_integer(order):
        n = int(order - 0.5)
        series = np.zeros_like(x)
        inv2x = 1.0 / (2.0 * x)
        for k in range(n, -1, -1):
            coef = math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k))
            series = series * inv2x + coef
        return np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) * series
    raise ValueError(f"unsupported Bessel order {order}: need integer or half-integer")


def _xpow_bessel(order: float, x: np.ndarray) -> np.ndarray:
    """``x^order K_order(x)``, finite as ``x -> 0`` for ``order > 0``.

    For integer orders ``a_j = x^j K_j(x)`` obeys ``a_{j+1} = x^2 a_{j-1} + 2j a_j``,
    the usual upward recurrence without the division by ``x``.
    """
    n = int(order)
    if n != order or n == 0:
        return x**order * _bessel_k(order, x)
    a_prev = special.k0(x)
    a_cur = x * special.k1(x)
    if n > 1:
        x2 = x * x
        for j in range(1, n):
            a_prev, a_cur = a_cur, x2 * a_prev + (2.0 * j) * a_cur
    return a_cur


@lru_cache(maxsize=None)
def _inv_norm(w: float) -> float:
    # 1 / (Gamma(w) 2^(w-1))
    return math.exp(-math.lgamma(w) - (w - 1.0) * math.log(2.0))


def _check_pair(theta, z):
    theta = np.asarray(theta, dtype=float)
    z = np.asarray(z, dtype=float)
    if theta.ndim != 1 or theta.shape != z.shape:
        raise ValueError(f"dimension mismatch: theta {theta.shape}, z {z.shape}")
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(z))):
        raise ValueError("kernel inputs must be finite")
    return theta, z


def _check_subsample(theta, subsample):
    theta = np.asarray(theta, dtype=float)
    Z = np.asarray(subsample, dtype=float)
    if Z.size == 0:
        raise ValueError("empty subsample")
    if Z.ndim == 1:
        Z = Z[None, :]
    if theta.ndim != 1 or Z.ndim != 2 or Z.shape[1] != theta.shape[0]:
        raise ValueError(f"dimension mismatch: theta {theta.shape}, subsample {Z.shape}")
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(Z))):
        raise ValueError("kernel inputs must be finite")
    return theta, Z


@dataclass(frozen=True)
class Linear:
    """Linear kernel ``k(theta, z) = theta^T z``."""

    def __call__(self, theta, z) -> float:
        theta, z = _check_pair(theta, z)
        return float(theta @ z)

    def gradient(self, theta, z) -> np.ndarray:
        theta, z = _check_pair(theta, z)
        return z.copy()

    def gradients(self, theta, Z) -> np.ndarray:
        """Rows are ``grad_theta k(theta, Z[i])``; no input validation."""
        return np.array(Z, dtype=float, copy=True)


@dataclass(frozen=True)
class RBF:
    """Gaussian kernel ``exp(-|theta - z|^2 / (2 l^2))``."""

    lengthscale: float = 1.0

    def __post_init__(self):
        if not (self.lengthscale > 0 and math.isfinite(self.lengthscale)):
            raise ValueError(f"RBF lengthscale must be positive, got {self.lengthscale}")

    def __call__(self, theta, z) -> float:
        theta, z = _check_pair(theta, z)
        diff = theta - z
        return float(np.exp(-(diff @ diff) / (2.0 * self.lengthscale**2)))

    def gradient(self, theta, z) -> np.ndarray:
        theta, z = _check_pair(theta, z)
        return self.gradients(theta, z[None, :])[0]

    def gradients(self, theta, Z) -> np.ndarray:
        l2 = self.lengthscale**2
        diff = Z - theta
        k = np.exp(-np.einsum("ij,ij->i", diff, diff) / (2.0 * l2))
        return (k / l2)[:, None] * diff


@dataclass(frozen=True)
class Matern:
    """Matérn kernel of order `order` and lengthscale `lengthscale`.

    ``k(theta, z) = (x^v K_v(x)) / (Gamma(v) 2^(v-1))`` with
    ``x = sqrt(2v) |theta - z| / l``. The order must be an integer or a
    half-integer; the gradient additionally needs ``order > 1``.
    """

    order: float = 4.0
    lengthscale: float = 1.0

    def __post_init__(self):
        v, l = self.order, self.lengthscale
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"Matern order must be positive, got {v}")
        if not float(2 * v).is_integer():
            raise ValueError(f"Matern order must be integer or half-integer, got {v}")
        if not (l > 0 and math.isfinite(l)):
            raise ValueError(f"Matern lengthscale must be positive, got {l}")
        # constants of the hot gradient path
        object.__setattr__(self, "_scale", math.sqrt(2.0 * v) / l)
        if v > 1:
            object.__setattr__(self, "_grad_coef", v / (l * l * (v - 1.0)) * _inv_norm(v - 1.0))

    @property
    def scale(self) -> float:
        """Factor ``sqrt(2v)/l`` mapping distance to the Bessel argument."""
        return self._scale

    def profile(self, r, order=None):
        """Normalised ``x^w K_w(x) / (Gamma(w) 2^(w-1))`` at ``x = scale * r``.

        `order` defaults to the kernel order; the gradient evaluates it at
        ``order - 1`` while keeping the argument scaled by the kernel order.
        Distances below the numerical floor return the limit 1.
        """
        w = self.order if order is None else order
        r = np.asarray(r, dtype=float)
        x = self.scale * np.maximum(r, DIST_FLOOR)
        return np.where(r < DIST_FLOOR, 1.0, _xpow_bessel(w, x) * _inv_norm(w))

    def __call__(self, theta, z) -> float:
        theta, z = _check_pair(theta, z)
        return float(self.profile(np.linalg.norm(theta - z)))

    def gradient(self, theta, z) -> np.ndarray:
        theta, z = _check_pair(theta, z)
        return self.gradients(theta, z[None, :])[0]

    def gradients(self, theta, Z) -> np.ndarray:
        v = self.order
        if v <= 1:
            raise ValueError(f"Matern gradient needs order > 1, got {v}")
        diff = Z - theta
        if diff.shape[1] == 1:
            r = np.abs(diff[:, 0])
        else:
            r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        # x^(v-1) K_{v-1}(x) stays finite at x -> 0 and diff vanishes there
        x = self._scale * np.maximum(r, DIST_FLOOR)
        return (self._grad_coef * _xpow_bessel(v - 1.0, x))[:, None] * diff


KernelSpec = Linear | RBF | Matern


def kernel_eval(kernel: KernelSpec, theta, z) -> float:
    """Evaluate ``kernel(theta, z)``."""
    return kernel(theta, z)


def kernel_gradient(kernel: KernelSpec, theta, z) -> np.ndarray:
    """Gradient of ``kernel(theta, z)`` with respect to `theta`."""
    return kernel.gradient(theta, z)


def kernel_gradient_matrix(kernel: KernelSpec, theta, subsample) -> np.ndarray:
    """The ``d x m`` matrix ``2 [grad k(theta, z_0), ..., grad k(theta, z_{m-1})]``."""
    theta, Z = _check_subsample(theta, subsample)
    return 2.0 * kernel.gradients(theta, Z).T


def centering_matrix(m: int) -> np.ndarray:
    """``I - (1/m) 1 1^T`` of size ``m x m``."""
    if m < 1:
        raise ValueError(f"centering matrix size must be >= 1, got {m}")
    return np.eye(m) - np.full((m, m), 1.0 / m)


def proposal_covariance(gamma: float, nu: float, M, H) -> np.ndarray:
    """KAM proposal covariance ``gamma^2 I + nu^2 M H M^T``.

    Raises
    ------
    ValueError
        On negative or doubly-zero scales, or non-conformable shapes.
    """
    if gamma < 0 or nu < 0:
        raise ValueError(f"gamma and nu must be non-negative, got {gamma}, {nu}")
    if gamma == 0 and nu == 0:
        raise ValueError("degenerate proposal covariance: gamma = nu = 0")
    M = np.asarray(M, dtype=float)
    H = np.asarray(H, dtype=float)
    if M.ndim != 2 or H.shape != (M.shape[1], M.shape[1]):
        raise ValueError(f"shape mismatch: M {M.shape}, H {H.shape}")
    C = nu**2 * (M @ H @ M.T)
    C = 0.5 * (C + C.T)
    C[np.diag_indices_from(C)] += gamma**2
    return C
