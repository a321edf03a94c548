import math

import mpmath as mp
import numpy as np
import pytest
from scipy import stats

from polsar_regions import streams
from polsar_regions.errors import (
    DomainError,
    EmptySampleError,
    NonIntegerLooksError,
    NotPositiveDefiniteError,
)
from polsar_regions.scenes import preset
from polsar_regions.wishart import (
    CovarianceEstimate,
    WishartModel,
    embed_real,
    estimate_covariance,
    gaussian_from_normals,
    log_density,
    log_multivariate_gamma,
    multilook,
    sample_gaussian_pixel,
    sample_multilook,
)


def test_density_reduces_to_exponential():
    assert log_density(WishartModel(np.eye(1), 1), np.eye(1)) == pytest.approx(-1.0, abs=1e-15)


def test_density_gamma_special_case():
    got = log_density(WishartModel(np.eye(1), 4), np.eye(1))
    assert got == pytest.approx(4 * math.log(4) - 4 - math.log(6), abs=1e-14)


def test_density_river_against_direct_evaluation():
    s = preset("River").sigma
    q, L = 3, 4
    with mp.workdps(40):
        det = mp.re(mp.det(mp.matrix(s.tolist())))
        gq = mp.pi ** (q * (q - 1) / mp.mpf(2)) * mp.gamma(4) * mp.gamma(3) * mp.gamma(2)
        # Z = Sigma: tr(Sigma^-1 Z) = q
        ref = mp.log(mp.mpf(L) ** (q * L) * det ** (L - q) / (det ** L * gq)) - L * q
    assert log_density(WishartModel(s, L), s) == pytest.approx(float(ref), rel=1e-10)


def test_log_multivariate_gamma_q1_is_lgamma():
    assert log_multivariate_gamma(4.5, 1) == pytest.approx(math.lgamma(4.5), rel=1e-15)


def test_density_domain_errors():
    model = WishartModel(np.eye(2), 2)
    with pytest.raises(DomainError):
        log_density(model, np.array([[1, 1], [1, 1]]))
    with pytest.raises(DomainError):
        WishartModel(np.eye(3), 2)  # looks below q
    with pytest.raises(NotPositiveDefiniteError):
        WishartModel(np.array([[1, 2], [2, 1]]), 4)  # eigenvalues 3 and -1


def test_estimate_covariance_is_sample_mean():
    est = estimate_covariance([np.eye(3)] * 3, looks=4)
    np.testing.assert_array_equal(est.sigma_hat, np.eye(3))
    assert est.sample_size == 3
    a = preset("Corn 2").sigma
    est = estimate_covariance(a, looks=4)
    np.testing.assert_array_equal(est.sigma_hat, a)
    assert est.sample_size == 1
    with pytest.raises(EmptySampleError):
        estimate_covariance(np.empty((0, 3, 3)), looks=4)


def test_estimate_covariance_consistency():
    s = preset("Corn 1").sigma
    model = WishartModel(s, 4)
    failures = 0
    for seed in range(100):
        rng = streams.stream(seed, streams.TRIALS, 99)
        est = estimate_covariance(sample_multilook(model, rng, 900), 4)
        failures += np.linalg.norm(est.sigma_hat - s) / np.linalg.norm(s) >= 0.05
    assert failures <= 1


def test_embed_real_cases():
    np.testing.assert_array_equal(embed_real(np.array([[2.0]])), np.eye(2))
    np.testing.assert_array_equal(embed_real(np.diag([2.0, 6.0])), np.diag([1.0, 3.0, 1.0, 3.0]))
    e = embed_real(preset("Soybean 1").sigma)
    np.testing.assert_array_equal(e, e.T)
    np.linalg.cholesky(e)


def test_gaussian_from_normals_hand_case():
    y = gaussian_from_normals(np.array([[2.0]]), np.array([1.0, 1.0]))
    assert y[0] == 1 + 1j


def test_gaussian_moments_match_sigma():
    s = preset("River").sigma
    rng = streams.stream(5, streams.TRIALS, 0)
    y = sample_gaussian_pixel(s, rng, 100_000)
    outer = y[:, :, None] * y[:, None, :].conj()
    root_n = np.sqrt(len(y))
    for part in (np.real, np.imag):
        x = part(outer)
        se = x.std(axis=0) / root_n
        assert np.all(np.abs(x.mean(axis=0) - part(s)) <= 3 * se + 1e-18)
        v = part(y)
        assert np.all(np.abs(v.mean(axis=0)) <= 3 * v.std(axis=0) / root_n)


def test_multilook_single_look_is_outer_product():
    y = np.array([[1 + 2j, 3 - 1j]])
    np.testing.assert_array_equal(multilook(y), np.outer(y[0], y[0].conj()))


def test_multilook_mean_is_sigma():
    s = preset("Soybean 3").sigma
    z = sample_multilook(WishartModel(s, 4), streams.stream(1, streams.TRIALS, 0), 10_000)
    for part in (np.real, np.imag):
        x = part(z)
        assert np.all(np.abs(x.mean(axis=0) - part(s)) <= 3 * x.std(axis=0) / 100 + 1e-18)
    np.testing.assert_array_equal(z, np.conj(np.swapaxes(z, -1, -2)))


def test_single_channel_intensity_is_gamma():
    z = sample_multilook(WishartModel(np.eye(1), 4), streams.stream(2, streams.TRIALS, 0), 10_000)
    intensity = z[:, 0, 0].real
    assert stats.kstest(intensity, stats.gamma(a=4, scale=1 / 4).cdf).pvalue > 0.01


def test_sampling_needs_integer_looks():
    with pytest.raises(NonIntegerLooksError):
        sample_multilook(WishartModel(np.eye(3), 4.5), np.random.default_rng(0), 2)
    # real looks are fine for inference
    assert WishartModel(np.eye(3), 4.785).looks == 4.785


def test_covariance_estimate_validation():
    with pytest.raises(DomainError):
        CovarianceEstimate(np.eye(3), 0, 4)
    with pytest.raises(DomainError):
        CovarianceEstimate(np.eye(3), 5, 0)
