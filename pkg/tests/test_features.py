import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rffkit.errors import InputError
from rffkit.features import (
    approx_kernel,
    feature_map,
    feature_map_nonstationary,
    projection,
    sample_function,
)
from rffkit.kernels import Family, KernelSpec, gram_matrix
from rffkit.spectral import (
    FrequencyMatrix,
    Provenance,
    sample_frequencies_iid,
    sample_frequencies_leverage,
    sample_frequencies_orf,
    sample_frequency_pairs_nonstationary,
    sample_point_masses,
)

SE = KernelSpec(Family.SQUARED_EXPONENTIAL)


class TestFeatureMap:
    def test_shape_and_unit_rows(self):
        X = np.random.default_rng(0).normal(size=(20, 3))
        fm = feature_map(X, sample_frequencies_iid(SE, 16, 3, 1))
        assert fm.shape == (20, 32) and fm.m == 16
        np.testing.assert_allclose(np.sum(fm.phi ** 2, axis=1), 1.0, atol=1e-12)

    def test_output_scale(self):
        X = np.zeros((2, 1))
        fm = feature_map(X, sample_frequencies_iid(SE, 4, 1, 0), scale=3.0)
        np.testing.assert_allclose(np.diag(approx_kernel(fm.phi)), 9.0)

    def test_explicit_layout(self):
        omega = FrequencyMatrix(np.array([[1.0], [2.0]]), Provenance.IID)
        phi = feature_map(np.array([[0.5]]), omega).phi
        expected = np.array([np.cos(0.5), np.cos(1.0), np.sin(0.5), np.sin(1.0)]) / np.sqrt(2)
        np.testing.assert_allclose(phi[0], expected, rtol=1e-15)

    def test_accepts_plain_array(self):
        phi = feature_map(np.ones((3, 2)), np.zeros((5, 2))).phi
        np.testing.assert_allclose(phi[:, :5], 1 / np.sqrt(5))
        np.testing.assert_array_equal(phi[:, 5:], 0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError, match="dimension mismatch"):
            feature_map(np.ones((3, 2)), sample_frequencies_iid(SE, 4, 3, 0))

    def test_non_finite_design(self):
        with pytest.raises(InputError):
            feature_map(np.array([[np.nan]]), sample_frequencies_iid(SE, 4, 1, 0))

    @pytest.mark.parametrize("n_jobs", [2, 3, 7, 64])
    def test_chunked_is_bit_identical(self, n_jobs):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(101, 4))
        omega = sample_frequencies_iid(SE, 33, 4, 2)
        np.testing.assert_array_equal(feature_map(X, omega, n_jobs=n_jobs).phi, feature_map(X, omega).phi)

    def test_projection_matches_matmul(self):
        rng = np.random.default_rng(2)
        X, W = rng.normal(size=(10, 3)), rng.normal(size=(6, 3))
        np.testing.assert_allclose(projection(X, W), X @ W.T, rtol=1e-13, atol=1e-14)

    def test_leverage_weights_scale_both_columns(self):
        w = np.array([2.0, 0.5])
        omega = FrequencyMatrix(np.array([[1.0], [2.0]]), Provenance.LEVERAGE, column_weights=w)
        plain = feature_map(np.array([[0.3]]), omega.omega).phi
        weighted = feature_map(np.array([[0.3]]), omega).phi
        np.testing.assert_allclose(weighted, plain * np.concatenate([w, w]), rtol=1e-15)


class TestApproximation:
    def test_unbiased_iid(self):
        x, z = np.array([[0.0, 0.0]]), np.array([[0.6, -0.8]])
        vals = [
            approx_kernel(feature_map(x, o).phi, feature_map(z, o).phi)[0, 0]
            for o in (sample_frequencies_iid(SE, 10, 2, s) for s in range(2000))
        ]
        assert np.mean(vals) == pytest.approx(np.exp(-0.5), abs=0.01)

    def test_unbiased_orf(self):
        x, z = np.zeros((1, 3)), np.array([[0.5, 0.5, -0.5]])
        exact = np.exp(-0.5 * 0.75)
        vals = [
            (feature_map(x, o).phi @ feature_map(z, o).phi.T)[0, 0]
            for o in (sample_frequencies_orf(SE, 3, 3, s) for s in range(2000))
        ]
        assert np.mean(vals) == pytest.approx(exact, abs=0.01)

    def test_leverage_reweighting_unbiased(self):
        X = np.linspace(-2, 2, 50)[:, None]
        vals = []
        for s in range(200):
            fm = feature_map(X, sample_frequencies_leverage(SE, X, 64, 1.0, s))
            vals.append(approx_kernel(fm.phi)[0, 12])
        exact = np.exp(-0.5 * (X[0, 0] - X[12, 0]) ** 2)
        assert np.mean(vals) == pytest.approx(exact, abs=0.02)

    def test_error_shrinks_with_m(self):
        X = np.random.default_rng(3).uniform(-2, 2, size=(60, 2))
        K = gram_matrix(SE, X)
        errs = []
        for m in (16, 256, 4096):
            e = [np.max(np.abs(approx_kernel(feature_map(X, sample_frequencies_iid(SE, m, 2, s)).phi) - K))
                 for s in range(5)]
            errs.append(np.mean(e))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 0.05

    @pytest.mark.parametrize("spec", [
        KernelSpec(Family.LAPLACIAN, sigma=0.8),
        KernelSpec(Family.CAUCHY, lengthscale=1.5),
        KernelSpec(Family.MATERN, smoothness=1.5, sigma=1.2),
    ], ids=lambda s: s.family.value)
    def test_converges_for_other_families(self, spec):
        X = np.random.default_rng(4).uniform(-1, 1, size=(15, 2))
        phi = feature_map(X, sample_frequencies_iid(spec, 20000, 2, 0), spec.output_scale).phi
        np.testing.assert_allclose(approx_kernel(phi), gram_matrix(spec, X), atol=0.05)

    def test_approx_kernel_symmetric_psd(self):
        phi = np.random.default_rng(5).normal(size=(12, 6))
        K = approx_kernel(phi)
        np.testing.assert_array_equal(K, K.T)
        assert np.linalg.eigvalsh(K)[0] > -1e-10

    def test_approx_kernel_non_finite(self):
        with pytest.raises(InputError):
            approx_kernel(np.array([[np.inf, 0.0]]))


def _nonstationary_oracle(x, z, ell1, ell2, order=60):
    """Expected inner product of the two-density map, by tensor Gauss-Hermite quadrature."""
    t, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    W1, W2 = np.meshgrid(t / ell1, t / ell2, indexing="ij")
    P = np.outer(w, w)
    d = x - z
    integrand = 0.25 * (np.cos(W1 * d) + np.cos(W2 * d) + np.cos(W1 * x - W2 * z) + np.cos(W2 * x - W1 * z))
    return float(np.sum(P * integrand))


class TestNonstationary:
    def test_equal_frequencies_reduce_exactly(self):
        X = np.random.default_rng(6).normal(size=(30, 2))
        o1, o2 = sample_frequency_pairs_nonstationary(SE, SE, 25, 2, 0, shared_draw=True)
        np.testing.assert_array_equal(feature_map_nonstationary(X, o1, o2).phi, feature_map(X, o1).phi)

    def test_oracle_self_consistency(self):
        # with equal densities the induced kernel is stationary
        assert _nonstationary_oracle(0.5, -0.5, 1.0, 1.0) == pytest.approx(
            0.5 * np.exp(-0.5) + 0.5 * np.exp(-0.25), abs=1e-12)

    @pytest.mark.parametrize("x, z", [(0.5, -0.5), (0.0, 1.0), (1.2, 0.3)])
    def test_monte_carlo_matches_quadrature(self, x, z):
        ell1, ell2 = 1.0, 0.5
        o1, o2 = sample_frequency_pairs_nonstationary(
            KernelSpec(lengthscale=ell1), KernelSpec(lengthscale=ell2), 20000, 1, 3)
        phi = feature_map_nonstationary(np.array([[x], [z]]), o1, o2).phi
        assert (phi[0] @ phi[1]) == pytest.approx(_nonstationary_oracle(x, z, ell1, ell2), abs=0.02)

    def test_shape_mismatch(self):
        a = sample_frequencies_iid(SE, 4, 1, 0)
        b = sample_frequencies_iid(SE, 5, 1, 0)
        with pytest.raises(InputError):
            feature_map_nonstationary(np.zeros((2, 1)), a, b)


class TestSampleFunction:
    GRID = np.linspace(0, 2 * np.pi, 256, endpoint=False)[:, None]

    def test_point_mass_spectrum(self):
        omega = sample_point_masses([1.0, 3.0], 50, 0)
        f = sample_function(omega, self.GRID, 1)
        power = np.abs(np.fft.rfft(f)) ** 2
        top = set(np.argsort(power)[-2:])
        assert top <= {1, 3}
        off = np.delete(power, [1, 3])
        assert off.max() < 1e-20 * power.max()

    def test_covariance_matches_approx_kernel(self):
        grid = np.linspace(-1, 1, 5)[:, None]
        omega = sample_frequencies_iid(SE, 8, 1, 0)
        gen = np.random.default_rng(1)
        F = np.array([sample_function(omega, grid, gen) for _ in range(20000)])
        K_hat = approx_kernel(feature_map(grid, omega).phi)
        np.testing.assert_allclose(np.cov(F.T), K_hat, atol=0.04)

    def test_rougher_for_laplacian_kernel(self):
        grid = self.GRID
        rough = {"se": [], "laplacian": []}
        for s in range(20):
            for name, spec in (("se", SE), ("laplacian", KernelSpec(Family.LAPLACIAN))):
                f = sample_function(sample_frequencies_iid(spec, 200, 1, s), grid, 1000 + s)
                rough[name].append(np.mean(np.diff(f, 2) ** 2))
        assert np.mean(rough["se"]) < np.mean(rough["laplacian"])

    def test_explicit_weights(self):
        omega = FrequencyMatrix(np.array([[1.0]]), Provenance.IID)
        f = sample_function(omega, self.GRID, weights=np.array([1.0, 0.0]))
        np.testing.assert_allclose(f, np.cos(self.GRID[:, 0]), atol=1e-15)
        with pytest.raises(InputError):
            sample_function(omega, self.GRID, weights=np.ones(3))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 30), m=st.integers(1, 20), d=st.integers(1, 4), seed=st.integers(0, 10**6))
def test_rows_have_unit_norm_property(n, m, d, seed):
    X = np.random.default_rng(seed).uniform(-5, 5, size=(n, d))
    phi = feature_map(X, sample_frequencies_iid(SE, m, d, seed)).phi
    np.testing.assert_allclose(np.sum(phi ** 2, axis=1), 1.0, atol=1e-12)


class TestSpecExamples:
    def test_zero_row(self):
        omega = sample_frequencies_iid(SE, 9, 2, 0)
        for phi in (feature_map(np.zeros((1, 2)), omega).phi,
                    feature_map_nonstationary(np.zeros((1, 2)), omega, sample_frequencies_iid(SE, 9, 2, 1)).phi):
            np.testing.assert_allclose(phi[0, :9], 1 / 3, rtol=1e-15)
            np.testing.assert_array_equal(phi[0, 9:], 0.0)

    def test_entries_bounded_by_twice_scaling(self):
        X = np.random.default_rng(1).normal(size=(40, 2))
        o1, o2 = sample_frequency_pairs_nonstationary(SE, KernelSpec(lengthscale=0.3), 25, 2, 2)
        fm = feature_map_nonstationary(X, o1, o2)
        assert fm.scaling == 1 / (2 * 5)
        assert np.max(np.abs(fm.phi)) <= 2 * fm.scaling

    def test_unit_diagonal_and_symmetry(self):
        X = np.random.default_rng(2).normal(size=(30, 3))
        K = approx_kernel(feature_map(X, sample_frequencies_iid(SE, 50, 3, 3)).phi)
        np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-12)
        assert np.max(np.abs(K - K.T)) <= 1e-12

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    def test_output_scale_squares(self, sigma):
        X = np.random.default_rng(4).normal(size=(10, 2))
        omega = sample_frequencies_iid(SE, 30, 2, 5)
        base = approx_kernel(feature_map(X, omega).phi)
        scaled = approx_kernel(feature_map(X, omega, sigma).phi)
        np.testing.assert_allclose(scaled, sigma ** 2 * base, rtol=1e-13, atol=1e-15)

    def test_nonstationary_quadrature_example(self):
        o1, o2 = sample_frequency_pairs_nonstationary(SE, KernelSpec(lengthscale=2.0), 8192, 1, 6)
        phi = feature_map_nonstationary(np.array([[0.5], [-0.5]]), o1, o2).phi
        assert abs(phi[0] @ phi[1] - _nonstationary_oracle(0.5, -0.5, 1.0, 2.0)) <= 0.05

    def test_zero_weights(self):
        f = sample_function(sample_frequencies_iid(SE, 5, 1, 0), np.linspace(0, 1, 7)[:, None], weights=np.zeros(10))
        np.testing.assert_array_equal(f, 0.0)

    def test_covariance_2000_functions_20_points(self):
        grid = np.linspace(-2, 2, 20)[:, None]
        omega = sample_frequencies_iid(SE, 30, 1, 7)
        gen = np.random.default_rng(8)
        F = np.array([sample_function(omega, grid, gen) for _ in range(2000)])
        K_hat = approx_kernel(feature_map(grid, omega).phi)
        assert np.max(np.abs(np.cov(F.T) - K_hat)) <= 0.1

    def test_point_masses_one_and_two(self):
        grid = np.linspace(0, 2 * np.pi, 128, endpoint=False)[:, None]
        f = sample_function(sample_point_masses([1.0, 2.0], 40, 9), grid, 10)
        power = np.abs(np.fft.rfft(f)) ** 2
        assert power[[1, 2]].sum() > 0.99 * power.sum()
