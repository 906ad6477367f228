"""Target densities, marginals and gridding."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate, stats

from ckam.targets import (
    GaussianMixture,
    Mesh,
    ProductGrid,
    bimodal2d,
    grid5_highd,
    grid_density,
    log_density,
    make_target,
    marginal_density_1d,
    mixture5_2d,
)


def mixture_oracle(target: GaussianMixture, x):
    return math.log(sum(w * stats.multivariate_normal(m, c).pdf(x)
                        for m, c, w in zip(target.means, target.covariances, target.weights)))


class TestGaussianMixture:
    @pytest.mark.parametrize("factory", [bimodal2d, mixture5_2d])
    def test_log_density_matches_scipy(self, factory):
        target = factory()
        rng = np.random.default_rng(0)
        for x in rng.uniform(-12, 14, size=(40, 2)):
            assert target.log_density(x) == pytest.approx(mixture_oracle(target, x), rel=1e-12, abs=1e-12)

    def test_full_covariance(self):
        covs = [[[2.0, 0.6], [0.6, 1.0]], [[1.0, -0.3], [-0.3, 0.5]]]
        target = GaussianMixture([[0.0, 0.0], [3.0, 1.0]], covs, [0.3, 0.7])
        for x in np.random.default_rng(1).normal(size=(20, 2)):
            assert target.log_density(x) == pytest.approx(mixture_oracle(target, x), rel=1e-12)

    def test_batch_matches_points(self):
        target = mixture5_2d()
        X = np.random.default_rng(2).uniform(-6, 16, size=(30, 2))
        np.testing.assert_allclose(target.log_density(X), [target.log_density(x) for x in X], rtol=1e-13)

    def test_functional_interface(self):
        target = bimodal2d()
        x = np.array([1.0, -2.0])
        assert log_density(target, x) == target.log_density(x)
        assert marginal_density_1d(target, 0, 1.5) == target.marginal_density_1d(0, 1.5)

    @pytest.mark.parametrize("factory,lo,hi", [(bimodal2d, -20, 20), (mixture5_2d, -12, 22)])
    def test_density_integrates_to_one(self, factory, lo, hi):
        target = factory()
        xs = np.linspace(lo, hi, 801)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        p = np.exp(target.log_density(np.column_stack([X.ravel(), Y.ravel()]))).reshape(X.shape)
        total = integrate.trapezoid(integrate.trapezoid(p, xs, axis=1), xs)
        assert total == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("factory", [bimodal2d, mixture5_2d])
    def test_marginal_integrates_to_one(self, factory):
        target = factory()
        for dim in range(2):
            val, _ = integrate.quad(lambda x: float(target.marginal_density_1d(dim, x)), -60, 60, limit=200)
            assert val == pytest.approx(1.0, abs=1e-6)

    def test_marginal_cdf_is_integral_of_density(self):
        target = mixture5_2d()
        val, _ = integrate.quad(lambda x: float(target.marginal_density_1d(1, x)), -40, 3.7)
        assert float(target.marginal_cdf_1d(1, 3.7)) == pytest.approx(val, abs=1e-10)

    def test_mixture5_layout(self):
        target = mixture5_2d()
        np.testing.assert_allclose(target.means[:, 0], [0, 2.5, 5, 7.5, 10])
        np.testing.assert_allclose(target.covariances[4], math.sqrt(5) * np.eye(2))
        np.testing.assert_allclose(target.weights, 0.2)

    def test_sample_moments(self):
        target = bimodal2d()
        x = target.sample(200_000, np.random.default_rng(3))
        # mean of x0 is 0; var = 0.5 (0.5 + 2) + 64
        assert x[:, 0].mean() == pytest.approx(0.0, abs=0.05)
        assert x[:, 0].var() == pytest.approx(65.25, rel=0.01)

    @pytest.mark.parametrize("kwargs,match", [
        (dict(means=[[0.0]], covariances=[[[1.0]]], weights=[0.5]), "sum to 1"),
        (dict(means=[[0.0]], covariances=[[[-1.0]]]), "SPD"),
        (dict(means=[[0.0, 0.0]], covariances=[[[1.0]]]), "shape"),
        (dict(means=[[0.0], [1.0]], covariances=[[[1.0]], [[1.0]]], weights=[1.5, -0.5]), "weights"),
    ])
    def test_construction_errors(self, kwargs, match):
        with pytest.raises(ValueError, match=match):
            GaussianMixture(**kwargs)

    def test_theta_errors(self):
        with pytest.raises(ValueError, match="dimension"):
            bimodal2d().log_density(np.zeros(3))
        with pytest.raises(ValueError, match="finite"):
            bimodal2d().log_density(np.array([np.inf, 0.0]))
        with pytest.raises(ValueError, match="finite"):
            grid5_highd(3).log_density(np.array([0.0, np.nan, 0.0]))

    def test_marginal_index_error(self):
        with pytest.raises(IndexError):
            bimodal2d().marginal_density_1d(2, 0.0)


class TestProductGrid:
    @pytest.mark.parametrize("d", [2, 3])
    def test_matches_explicit_enumeration(self, d):
        grid = grid5_highd(d)
        explicit = grid.to_mixture()
        assert len(explicit.weights) == 5**d
        X = np.random.default_rng(d).uniform(-45, 45, size=(50, d))
        err = np.max(np.abs(grid.log_density(X) - explicit.log_density(X)))
        assert err <= 1e-9

    def test_layout(self):
        grid = grid5_highd()
        assert grid.dimension == 32
        assert grid.means == (-30.0, -15.0, 0.0, 15.0, 30.0)
        assert grid.variance == 15.0

    @settings(max_examples=50)
    @given(arrays(np.float64, 6, elements=st.floats(-60, 60)), st.permutations(range(6)))
    def test_permutation_invariance(self, x, perm):
        grid = grid5_highd(6)
        assert grid.log_density(x[list(perm)]) == pytest.approx(grid.log_density(x), rel=1e-13, abs=1e-12)

    def test_marginal_integrates_to_one(self):
        val, _ = integrate.quad(lambda x: float(grid5_highd(4).marginal_density_1d(2, x)), -100, 100, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_sample_marginal(self):
        x = grid5_highd(4).sample(100_000, np.random.default_rng(5))
        # var = 15 + mean of {900, 225, 0, 225, 900}
        assert x.var(axis=0) == pytest.approx(np.full(4, 465.0), rel=0.02)

    @pytest.mark.parametrize("kwargs", [dict(dimension=0, means=(0.0,), variance=1.0),
                                        dict(dimension=2, means=(0.0,), variance=0.0),
                                        dict(dimension=2, means=(), variance=1.0)])
    def test_construction_errors(self, kwargs):
        with pytest.raises(ValueError):
            ProductGrid(**kwargs)


finite_big = st.floats(-1e6, 1e6, allow_nan=False)


class TestLogSumExp:
    @given(arrays(np.float64, 2, elements=finite_big))
    def test_mixtures_stay_finite(self, x):
        assert math.isfinite(bimodal2d().log_density(x))
        assert math.isfinite(mixture5_2d().log_density(x))

    @given(arrays(np.float64, 5, elements=finite_big))
    def test_grid_stays_finite(self, x):
        assert math.isfinite(grid5_highd(5).log_density(x))


class _Uniform:
    dimension = 2

    def log_density(self, theta):
        return np.zeros(np.asarray(theta).shape[:-1])


class TestGridDensity:
    def test_uniform_target(self):
        p = grid_density(_Uniform(), Mesh.square(0.0, 1.0, 10))
        np.testing.assert_allclose(p, 0.01, rtol=1e-14)

    def test_normalised(self):
        p = grid_density(bimodal2d(), Mesh.square(-14, 14, 100))
        assert p.sum() == pytest.approx(1.0, abs=1e-14)
        assert p.shape == (100, 100)

    def test_mass_in_three_sigma_ball(self):
        # 2-d Gaussian radial CDF: P(|x - mu| <= 3 sd) = 1 - exp(-9/2)
        mesh = Mesh.square(-14, 14, 560)
        p = grid_density(bimodal2d(), mesh)
        X, Y = np.meshgrid(mesh.centers(0), mesh.centers(1), indexing="ij")
        ball = np.hypot(X + 8, Y) <= 3 * math.sqrt(0.5)
        assert p[ball].sum() == pytest.approx(0.5 * (1 - math.exp(-4.5)), abs=2e-3)

    def test_first_index_is_first_coordinate(self):
        # unit cells centred on the integers, so the narrow mode sits on a centre
        mesh = Mesh.square(-14.5, 13.5, 28)
        p = grid_density(bimodal2d(), mesh)
        i, j = np.unravel_index(np.argmax(p), p.shape)
        assert (mesh.centers(0)[i], mesh.centers(1)[j]) == (-8.0, 0.0)

    def test_rejects_other_dimensions(self):
        with pytest.raises(ValueError, match="2-d"):
            grid_density(grid5_highd(3), Mesh.square(0, 1, 4))

    def test_mesh_validation(self):
        with pytest.raises(ValueError):
            Mesh((0.0, 0.0), (1.0, 0.0))
        with pytest.raises(ValueError):
            Mesh.square(0.0, 1.0, 0)


class TestFactory:
    def test_names(self):
        assert make_target("bimodal2d").dimension == 2
        assert make_target("grid5_highd", 8).dimension == 8
        assert make_target("grid5_highd").dimension == 32

    def test_errors(self):
        with pytest.raises(ValueError, match="unknown target"):
            make_target("banana")
        with pytest.raises(ValueError, match="2-d"):
            make_target("mixture5_2d", 3)
