"""Benchmark target densities.

Two forms are supported. :class:`GaussianMixture` lists its components
explicitly. :class:`ProductGrid` is the equally weighted mixture whose means
run over the full Cartesian grid ``means^d`` with covariance ``variance * I``;
it factorises over dimensions, so it is evaluated one coordinate at a time
and never by enumerating its ``len(means)**d`` components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "Mesh",
    "GaussianComponent",
    "GaussianMixture",
    "ProductGrid",
    "log_density",
    "marginal_density_1d",
    "grid_density",
    "bimodal2d",
    "mixture5_2d",
    "grid5_highd",
    "make_target",
    "TARGETS",
]

_LOG_2PI = np.log(2.0 * np.pi)
# mixtures with at most this many (component, coordinate) pairs use scalar code
_SMALL = 64


@dataclass(frozen=True)
class Mesh:
    """Rectangular 2-d mesh ``[lo[0], hi[0]] x [lo[1], hi[1]]`` with ``bins`` cells per axis."""

    lo: tuple[float, float]
    hi: tuple[float, float]
    bins: tuple[int, int] = (100, 100)

    def __post_init__(self):
        if len(self.lo) != 2 or len(self.hi) != 2 or len(self.bins) != 2:
            raise ValueError("Mesh is two-dimensional")
        if any(b < 1 for b in self.bins):
            raise ValueError(f"mesh resolution must be positive, got {self.bins}")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty mesh bounds {self.lo} .. {self.hi}")

    @classmethod
    def square(cls, lo: float, hi: float, bins: int = 100) -> "Mesh":
        return cls((lo, lo), (hi, hi), (bins, bins))

    def edges(self, axis: int) -> np.ndarray:
        return np.linspace(self.lo[axis], self.hi[axis], self.bins[axis] + 1)

    def centers(self, axis: int) -> np.ndarray:
        e = self.edges(axis)
        return 0.5 * (e[1:] + e[:-1])

    @property
    def cell_area(self) -> float:
        return float(np.prod([(h - l) / b for l, h, b in zip(self.lo, self.hi, self.bins)]))


def _logsumexp(a: np.ndarray) -> np.ndarray:
    # over the last axis; inputs here are always finite
    m = a.max(axis=-1)
    return m + np.log(np.exp(a - m[..., None]).sum(axis=-1))


def _check_theta(theta, dimension: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != dimension:
        raise ValueError(f"expected dimension {dimension}, got shape {theta.shape}")
    if not np.isfinite(theta.sum()):
        raise ValueError("theta must be finite")
    return theta


@dataclass(frozen=True)
class GaussianComponent:
    mean: np.ndarray
    covariance: np.ndarray
    weight: float


class GaussianMixture:
    """Finite mixture of multivariate normals.

    Parameters
    ----------
    means : array_like, shape (k, d)
    covariances : array_like, shape (k, d, d)
        Symmetric positive definite.
    weights : array_like, shape (k,), optional
        Mixture weights summing to one; equal weights by default.
    """

    def __init__(self, means, covariances, weights=None):
        means = np.atleast_2d(np.asarray(means, dtype=float))
        covs = np.asarray(covariances, dtype=float)
        k, d = means.shape
        if covs.shape != (k, d, d):
            raise ValueError(f"covariances must have shape {(k, d, d)}, got {covs.shape}")
        weights = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=float)
        if weights.shape != (k,) or np.any(weights <= 0) or np.any(weights > 1):
            raise ValueError("weights must lie in (0, 1]")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
        try:
            chols = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as exc:
            raise ValueError("component covariances must be SPD") from exc
        if not np.allclose(covs, np.swapaxes(covs, 1, 2)):
            raise ValueError("component covariances must be symmetric")

        self.dimension = d
        self.means = means
        self.covariances = covs
        self.weights = weights
        self._chols = chols
        self._prec = np.linalg.inv(covs)
        offdiag = covs * (1.0 - np.eye(d))
        self._inv_var = 1.0 / np.diagonal(covs, axis1=1, axis2=2) if not offdiag.any() else None
        self._log_norm = (
            np.log(weights)
            - 0.5 * d * _LOG_2PI
            - np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)
        )
        self._point_shape = (d,)
        self._rows = None
        if self._inv_var is not None and k * d <= _SMALL:
            self._rows = list(zip(self._log_norm.tolist(), means.tolist(), self._inv_var.tolist()))

    @property
    def components(self) -> list[GaussianComponent]:
        return [GaussianComponent(m, c, w) for m, c, w in zip(self.means, self.covariances, self.weights)]

    def log_density(self, theta) -> float | np.ndarray:
        """Normalised log density; `theta` may be a single point or a batch ``(n, d)``."""
        if self._rows is not None and type(theta) is np.ndarray and theta.shape == self._point_shape:
            # hot path of the samplers: one point, few diagonal components;
            # plain float arithmetic beats numpy call overhead at this size
            x = theta.tolist()
            a = [c - 0.5 * sum((xi - mi) * (xi - mi) * wi for xi, mi, wi in zip(x, mu, iv))
                 for c, mu, iv in self._rows]
            m = max(a)
            out = m if len(a) == 1 else m + math.log(sum(math.exp(ai - m) for ai in a))
            if math.isfinite(out):
                return out
        theta = _check_theta(theta, self.dimension)
        diff = theta[..., None, :] - self.means
        if self._inv_var is not None:
            quad = (diff * diff * self._inv_var).sum(axis=-1)
        else:
            quad = np.einsum("...kd,kde,...ke->...k", diff, self._prec, diff)
        a = self._log_norm - 0.5 * quad
        if theta.ndim == 1:
            m = a.max()
            return float(m + math.log(np.exp(a - m).sum()))
        return _logsumexp(a)

    def marginal_density_1d(self, dim: int, x):
        if not 0 <= dim < self.dimension:
            raise IndexError(f"dimension index {dim} out of range for d={self.dimension}")
        mu = self.means[:, dim]
        sd = np.sqrt(self.covariances[:, dim, dim])
        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(self.weights * np.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi)), axis=-1)

    def marginal_cdf_1d(self, dim: int, x):
        if not 0 <= dim < self.dimension:
            raise IndexError(f"dimension index {dim} out of range for d={self.dimension}")
        mu = self.means[:, dim]
        sd = np.sqrt(self.covariances[:, dim, dim])
        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(self.weights * special.ndtr((x - mu) / sd), axis=-1)

    def marginal_range(self, dim: int, nsd: float = 3.0) -> tuple[float, float]:
        mu = self.means[:, dim]
        sd = np.sqrt(self.covariances[:, dim, dim])
        return float(np.min(mu - nsd * sd)), float(np.max(mu + nsd * sd))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Exact i.i.d. draws, shape ``(n, d)``."""
        idx = rng.choice(len(self.weights), size=n, p=self.weights)
        eps = rng.standard_normal((n, self.dimension))
        return self.means[idx] + np.einsum("nij,nj->ni", self._chols[idx], eps)


@dataclass(frozen=True)
class ProductGrid:
    """Equal-weight mixture over the grid ``means^dimension`` with covariance ``variance * I``."""

    dimension: int
    means: tuple[float, ...]
    variance: float
    _means: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if len(self.means) < 1:
            raise ValueError("need at least one grid mean")
        object.__setattr__(self, "_means", np.asarray(self.means, dtype=float))

    def _log_marginal(self, x):
        # log of the 1-d equal-weight mixture, elementwise in x
        z = (np.asarray(x, dtype=float)[..., None] - self._means) ** 2 / self.variance
        logn = -0.5 * (z + _LOG_2PI + np.log(self.variance)) - np.log(len(self._means))
        return _logsumexp(logn)

    def log_density(self, theta) -> float | np.ndarray:
        theta = _check_theta(theta, self.dimension)
        out = self._log_marginal(theta).sum(axis=-1)
        return float(out) if theta.ndim == 1 else out

    def marginal_density_1d(self, dim: int, x):
        if not 0 <= dim < self.dimension:
            raise IndexError(f"dimension index {dim} out of range for d={self.dimension}")
        return np.exp(self._log_marginal(x))

    def marginal_cdf_1d(self, dim: int, x):
        if not 0 <= dim < self.dimension:
            raise IndexError(f"dimension index {dim} out of range for d={self.dimension}")
        z = (np.asarray(x, dtype=float)[..., None] - self._means) / np.sqrt(self.variance)
        return special.ndtr(z).mean(axis=-1)

    def marginal_range(self, dim: int, nsd: float = 3.0) -> tuple[float, float]:
        sd = np.sqrt(self.variance)
        return float(self._means.min() - nsd * sd), float(self._means.max() + nsd * sd)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(len(self._means), size=(n, self.dimension))
        return self._means[idx] + np.sqrt(self.variance) * rng.standard_normal((n, self.dimension))

    def to_mixture(self) -> GaussianMixture:
        """Explicit enumeration of every grid component. Only sensible at small d."""
        grid = np.stack(np.meshgrid(*[self._means] * self.dimension, indexing="ij"), axis=-1)
        means = grid.reshape(-1, self.dimension)
        covs = np.broadcast_to(self.variance * np.eye(self.dimension), (len(means), self.dimension, self.dimension))
        return GaussianMixture(means, covs)


def log_density(target, theta):
    """Normalised log density of `target` at `theta`."""
    return target.log_density(theta)


def marginal_density_1d(target, dim: int, x):
    """Analytic marginal density of coordinate `dim` at `x`."""
    return target.marginal_density_1d(dim, x)


def grid_density(target, mesh: Mesh) -> np.ndarray:
    """Cell probabilities of a 2-d `target` on `mesh`.

    Density at each cell centre times the cell area, renormalised to sum to
    one. Indexed ``[i, j]`` with ``i`` along the first coordinate.
    """
    if target.dimension != 2:
        raise ValueError(f"grid_density supports 2-d targets only, got d={target.dimension}")
    X, Y = np.meshgrid(mesh.centers(0), mesh.centers(1), indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    logp = np.asarray(target.log_density(pts), dtype=float).reshape(X.shape)
    w = np.exp(logp - logp.max()) * mesh.cell_area
    return w / w.sum()


def bimodal2d() -> GaussianMixture:
    """Two well separated modes at ``[-8, 0]`` (cov 0.5 I) and ``[8, 0]`` (cov 2 I)."""
    return GaussianMixture(
        means=[[-8.0, 0.0], [8.0, 0.0]],
        covariances=[0.5 * np.eye(2), 2.0 * np.eye(2)],
        weights=[0.5, 0.5],
    )


def mixture5_2d() -> GaussianMixture:
    """Five components on the diagonal, ``mu_i = 2.5 (i-1) [1, 1]``, ``cov_i = sqrt(i) I``."""
    i = np.arange(1, 6)
    means = 2.5 * (i - 1)[:, None] * np.ones(2)
    covs = np.sqrt(i)[:, None, None] * np.eye(2)
    return GaussianMixture(means, covs)


def grid5_highd(dimension: int = 32) -> ProductGrid:
    """Grid mixture with means ``{-30, -15, 0, 15, 30}^d`` and covariance ``15 I``."""
    return ProductGrid(dimension=dimension, means=(-30.0, -15.0, 0.0, 15.0, 30.0), variance=15.0)


TARGETS = {
    "bimodal2d": bimodal2d,
    "mixture5_2d": mixture5_2d,
    "grid5_highd": grid5_highd,
}


def make_target(name: str, dimension: int | None = None):
    """Build a named benchmark target. Only ``grid5_highd`` takes a dimension."""
    try:
        factory = TARGETS[name]
    except KeyError:
        raise ValueError(f"unknown target {name!r}; choose from {sorted(TARGETS)}") from None
    if name == "grid5_highd":
        return factory(32 if dimension is None else int(dimension))
    if dimension is not None and dimension != 2:
        raise ValueError(f"target {name!r} is 2-d, got dimension={dimension}")
    return factory()
