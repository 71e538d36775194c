"""Gaussian density-map targets against independent CDF and quadrature oracles."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import ndtr

from racnet.dataio import CycleSpan
from racnet.errors import ValidationError
from racnet.targets import gaussian_bin_mass, make_density_target, mse_loss


def bin_mass_oracle(mu, sigma, k):
    """Bin mass via scipy's normal CDF, independent of the erf path."""
    return float(ndtr((k + 0.5 - mu) / sigma) - ndtr((k - 0.5 - mu) / sigma))


def bin_mass_quadrature(mu, sigma, k):
    """Bin mass by numerical integration of the normal pdf."""
    pdf = lambda y: math.exp(-0.5 * ((y - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    value, _ = integrate.quad(pdf, k - 0.5, k + 0.5)
    return value


# --- gaussian_bin_mass -------------------------------------------------------

def test_center_bin_value():
    got = gaussian_bin_mass(13.0, 1.0, 13)
    assert abs(got - 0.382925) < 1e-6
    assert abs(got - bin_mass_quadrature(13.0, 1.0, 13)) < 1e-9


def test_neighbor_bin_value():
    got = gaussian_bin_mass(13.0, 1.0, 12)
    assert abs(got - 0.241730) < 1e-6
    assert abs(got - bin_mass_quadrature(13.0, 1.0, 12)) < 1e-9


def test_matches_cdf_oracle_on_random_inputs():
    rng = np.random.default_rng(17)
    for _ in range(300):
        mu = float(rng.uniform(-20, 80))
        sigma = float(rng.uniform(0.05, 12))
        k = int(rng.integers(-30, 90))
        got = gaussian_bin_mass(mu, sigma, k)
        assert abs(got - bin_mass_oracle(mu, sigma, k)) < 1e-12


def test_line_mass_sums_to_one():
    for mu, sigma in [(13.0, 1.0), (0.0, 0.3), (31.5, 4.0), (7.2, 0.11)]:
        ks = range(int(math.floor(mu - 10 * sigma)) - 1,
                   int(math.ceil(mu + 10 * sigma)) + 2)
        total = sum(gaussian_bin_mass(mu, sigma, k) for k in ks)
        assert abs(total - 1.0) < 1e-12


def test_far_tail_is_negligible():
    assert gaussian_bin_mass(10.0, 1.0, 19) < 1e-14
    assert gaussian_bin_mass(10.0, 0.5, 15) < 1e-14


def test_rejects_nonpositive_sigma():
    with pytest.raises(ValidationError):
        gaussian_bin_mass(5.0, 0.0, 5)
    with pytest.raises(ValidationError):
        gaussian_bin_mass(5.0, -1.0, 5)


# --- make_density_target ------------------------------------------------------

def test_single_span_mid_peak_and_mass():
    target = make_density_target([CycleSpan(10, 16)], 64, "mid")
    assert target.shape == (64,)
    assert int(np.argmax(target)) == 13
    assert abs(target.sum() - 1.0) < 1e-9


def test_zero_spans_gives_zero_map():
    target = make_density_target([], 64, "mid")
    np.testing.assert_array_equal(target, np.zeros(64))


def test_five_spans_sum_to_five():
    spans = [CycleSpan(2, 7), CycleSpan(9, 14), CycleSpan(20, 31),
             CycleSpan(33, 40), CycleSpan(50, 61)]
    for variant in ("begin", "mid", "end", "merge"):
        target = make_density_target(spans, 64, variant)
        assert abs(target.sum() - 5.0) < 1e-9
        assert (target >= 0).all()


def test_variant_means_differ():
    span = CycleSpan(20, 44)
    begin = make_density_target([span], 64, "begin")
    mid = make_density_target([span], 64, "mid")
    end = make_density_target([span], 64, "end")
    assert int(np.argmax(begin)) == 20
    assert int(np.argmax(mid)) == 32
    assert int(np.argmax(end)) == 44


def test_merge_is_mean_of_variants():
    spans = [CycleSpan(4, 11), CycleSpan(30, 47)]
    parts = [make_density_target(spans, 64, v) for v in ("begin", "mid", "end")]
    merge = make_density_target(spans, 64, "merge")
    np.testing.assert_allclose(merge, np.mean(parts, axis=0), atol=1e-12)


def test_sigma_floor_handles_degenerate_span():
    target = make_density_target([CycleSpan(33, 33)], 64, "mid", sigma_floor=0.1)
    assert abs(target.sum() - 1.0) < 1e-9
    assert int(np.argmax(target)) == 33


def test_mid_argmax_is_mu_bin_on_random_spans():
    rng = np.random.default_rng(23)
    for _ in range(100):
        start = int(rng.integers(0, 50))
        end = start + int(rng.integers(0, 13))
        target = make_density_target([CycleSpan(start, end)], 64, "mid")
        mu = (start + end) / 2.0
        assert abs(int(np.argmax(target)) - mu) <= 0.5


def test_span_outside_range_rejected():
    with pytest.raises(ValidationError):
        make_density_target([CycleSpan(10, 70)], 64, "mid")


def test_unknown_variant_rejected():
    with pytest.raises(ValidationError):
        make_density_target([CycleSpan(1, 5)], 64, "median")


# --- mse_loss -----------------------------------------------------------------

def test_mse_identity_is_zero():
    x = np.array([0.1, 0.4, 2.0])
    assert mse_loss(x, x) == 0.0


def test_mse_constant_offset():
    target = np.array([0.0, 1.0, 2.0, 5.0])
    assert abs(mse_loss(target + 1.0, target) - 1.0) < 1e-12


def test_mse_direct_value():
    assert abs(mse_loss(np.array([0.0, 1.0]), np.array([1.0, 1.0])) - 0.5) < 1e-15


def test_mse_rejects_length_mismatch():
    with pytest.raises(ValidationError):
        mse_loss(np.zeros(3), np.zeros(4))
