"""Convergence diagnostics: histogram symmetric KL and effective sample size."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .targets import Mesh, grid_density

__all__ = [
    "GridHistogram",
    "histogram_2d",
    "histogram_1d",
    "symmetric_kl",
    "grid_symmetric_kl",
    "marginal_mean_symmetric_kl",
    "autocorrelation",
    "effective_sample_size",
    "DEFAULT_SMOOTHING",
]

DEFAULT_SMOOTHING = 1e-10


@dataclass(frozen=True)
class GridHistogram:
    mesh: Mesh
    masses: np.ndarray


def _smooth(counts: np.ndarray, n: int, smoothing_eps: float) -> np.ndarray:
    p = counts / n + smoothing_eps
    return p / p.sum()


def _bin_index(x: np.ndarray, lo: float, hi: float, bins: int) -> np.ndarray:
    # points outside [lo, hi] land in the edge cells
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def histogram_2d(samples, mesh: Mesh, smoothing_eps: float = DEFAULT_SMOOTHING) -> GridHistogram:
    """Normalised 2-d histogram of `samples` on `mesh`.

    Samples outside the mesh count towards the nearest edge cell.
    `smoothing_eps` is added to every cell frequency before renormalising,
    so every cell is strictly positive when ``smoothing_eps > 0``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("histogram of an empty sample set")
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ValueError(f"histogram_2d needs (n, 2) samples, got {samples.shape}")
    ix = _bin_index(samples[:, 0], mesh.lo[0], mesh.hi[0], mesh.bins[0])
    iy = _bin_index(samples[:, 1], mesh.lo[1], mesh.hi[1], mesh.bins[1])
    counts = np.bincount(ix * mesh.bins[1] + iy, minlength=mesh.bins[0] * mesh.bins[1])
    masses = _smooth(counts.reshape(mesh.bins).astype(float), len(samples), smoothing_eps)
    return GridHistogram(mesh, masses)


def histogram_1d(x, lo: float, hi: float, bins: int, smoothing_eps: float = DEFAULT_SMOOTHING) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("histogram of an empty sample set")
    counts = np.bincount(_bin_index(x, lo, hi, bins), minlength=bins).astype(float)
    return _smooth(counts, len(x), smoothing_eps)


def symmetric_kl(p, q) -> float:
    """``KL(p || q) + KL(q || p)`` in nats for strictly positive distributions.

    Raises
    ------
    ValueError
        On shape mismatch or a non-positive cell in either input.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("symmetric_kl needs strictly positive cells; smooth the inputs first")
    return float(np.sum((p - q) * (np.log(p) - np.log(q))))


def grid_symmetric_kl(samples, target, mesh: Mesh, smoothing_eps: float = DEFAULT_SMOOTHING) -> float:
    """Symmetric KL between the sample histogram and the gridded 2-d target."""
    hist = histogram_2d(samples, mesh, smoothing_eps)
    truth = grid_density(target, mesh) + smoothing_eps
    return symmetric_kl(hist.masses, truth / truth.sum())


def _marginal_bins(target, dim: int, lo: float, hi: float, bins: int) -> np.ndarray:
    # exact bin masses; tails fold into the edge cells like clamped samples do
    edges = np.linspace(lo, hi, bins + 1)
    cdf = np.asarray(target.marginal_cdf_1d(dim, edges), dtype=float)
    cdf[0], cdf[-1] = 0.0, 1.0
    return np.diff(cdf)


def marginal_mean_symmetric_kl(samples, target, bins: int = 100, smoothing_eps: float = DEFAULT_SMOOTHING,
                               ranges=None) -> float:
    """Mean over coordinates of the 1-d symmetric KL to the analytic marginal.

    Each coordinate is binned on ``[min mu - 3 sd, max mu + 3 sd]`` of its
    marginal mixture unless `ranges` (one ``(lo, hi)`` per coordinate) is given.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] == 0:
        raise ValueError("no samples")
    d = samples.shape[1]
    if d != target.dimension:
        raise ValueError(f"samples have dimension {d}, target {target.dimension}")
    kls = []
    for dim in range(d):
        lo, hi = target.marginal_range(dim) if ranges is None else ranges[dim]
        hist = histogram_1d(samples[:, dim], lo, hi, bins, smoothing_eps)
        truth = _marginal_bins(target, dim, lo, hi, bins) + smoothing_eps
        kls.append(symmetric_kl(hist, truth / truth.sum()))
    return float(np.mean(kls))


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Biased autocorrelation estimates ``rho_0 .. rho_max_lag`` by direct sums."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    xc = x - x.mean()
    var = xc @ xc / n
    if var == 0:
        raise ValueError("constant chain has no autocorrelation")
    return np.array([xc[: n - k] @ xc[k:] / (n * var) for k in range(max_lag + 1)])


def _ess_1d(x: np.ndarray) -> float:
    n = len(x)
    xc = x - x.mean()
    denom = xc @ xc
    if denom <= 0 or not np.isfinite(denom):
        raise ValueError("constant chain: effective sample size undefined")
    max_lag = n // 2
    # Geyer's initial positive sequence over pairs (rho_{2k} + rho_{2k+1})
    tau = -1.0
    k = 0
    while 2 * k + 1 <= max_lag:
        pair = (xc[: n - 2 * k] @ xc[2 * k:] + xc[: n - 2 * k - 1] @ xc[2 * k + 1:]) / denom
        if pair <= 0:
            break
        tau += 2.0 * pair
        k += 1
    return min(float(n), n / max(tau, 1e-12))


def effective_sample_size(samples) -> float:
    """Effective sample size with Geyer's initial positive sequence truncation.

    ``ESS = n / (1 + 2 sum_k rho_k)``. For ``(n, d)`` input the minimum over
    coordinates is reported. Capped at ``n``.

    Raises
    ------
    ValueError
        For fewer than 10 draws or a constant coordinate.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 10:
        raise ValueError(f"need at least 10 draws for ESS, got {x.shape[0]}")
    return min(_ess_1d(x[:, j]) for j in range(x.shape[1]))
