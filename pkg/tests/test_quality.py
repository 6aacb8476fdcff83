import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from cpdenoise.core import DimensionError, ParameterError
from cpdenoise.quality import (
    MetricsReport, NoiseSpec, RangeError, add_gaussian_noise, encode_metric, evaluate,
    isnr, mssim, psnr, psnr_grad, standard_normal,
)

from conftest import smooth_test_image
from oracles import brute_derivatives, brute_isnr, brute_mssim, brute_psnr


def test_noise_zero_sigma_is_identity():
    img = smooth_test_image(16, 16)
    np.testing.assert_array_equal(add_gaussian_noise(img, NoiseSpec(0.0, 5)), img)


def test_noise_deterministic_per_seed():
    img = smooth_test_image(16, 20)
    a = add_gaussian_noise(img, NoiseSpec(25.0, 42))
    b = add_gaussian_noise(img, NoiseSpec(25.0, 42))
    c = add_gaussian_noise(img, NoiseSpec(25.0, 43))
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)


def test_noise_generator_contract():
    # first pair: Philox-4x64 uniforms (u1, u2) through Box-Muller, cos then sin
    u = np.random.Generator(np.random.Philox(7)).random((2, 2))
    r = math.sqrt(-2 * math.log(1 - u[0, 0]))
    z = standard_normal((3,), 7)
    assert z[0] == pytest.approx(r * math.cos(2 * math.pi * u[0, 1]), rel=1e-15)
    assert z[1] == pytest.approx(r * math.sin(2 * math.pi * u[0, 1]), rel=1e-15)


def test_noise_statistics_512():
    noisy = add_gaussian_noise(np.zeros((512, 512)), NoiseSpec(40.0, 1))
    assert 39.5 <= noisy.std() <= 40.5
    assert abs(noisy.mean()) <= 4 * 40.0 / 512
    assert scipy.stats.kstest(noisy.ravel() / 40.0, "norm").pvalue > 1e-4
    assert noisy.min() < 0  # not clamped


def test_noise_spec_validation():
    with pytest.raises(ParameterError):
        NoiseSpec(-1.0, 0)


def test_psnr_closed_form_and_sentinel():
    ref = np.linspace(0, 255, 64).reshape(8, 8)
    assert psnr(ref, ref + 1) == pytest.approx(20 * math.log10(255), abs=1e-9)
    assert psnr(ref, ref) == math.inf
    with pytest.raises(RangeError):
        psnr(np.full((4, 4), 3.0), np.zeros((4, 4)))
    with pytest.raises(DimensionError):
        psnr(ref, ref[:4])
    assert psnr(ref / 2, ref / 2 + 1, peak=255.0) == pytest.approx(20 * math.log10(255))


def test_psnr_matches_brute_force(rng):
    for _ in range(5):
        ref, test = rng.uniform(0, 255, (8, 8)), rng.uniform(0, 255, (8, 8))
        assert psnr(ref, test) == pytest.approx(brute_psnr(ref, test), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
def test_psnr_depends_only_on_constant_shift(seed, c):
    rng = np.random.default_rng(seed)
    ref = rng.uniform(0, 255, (6, 6))
    other = rng.permutation(ref.ravel()).reshape(6, 6)
    other[0, 0], other[-1, -1] = 0.0, 255.0
    ref[0, 0], ref[-1, -1] = 0.0, 255.0
    assert psnr(ref, ref + c) == pytest.approx(psnr(other, other + c), rel=1e-12)


def test_psnr_grad_examples(rng):
    ref = rng.integers(0, 256, (10, 10)).astype(float)  # integers keep the shift exact
    assert psnr_grad(ref, ref) == math.inf
    assert psnr_grad(ref, ref + 17.0) == math.inf
    test = rng.uniform(0, 255, (10, 10))
    ri, rj = brute_derivatives(ref)
    ti, tj = brute_derivatives(test)
    expected = 0.5 * (brute_psnr(ri, ti) + brute_psnr(rj, tj))
    assert psnr_grad(ref, test) == pytest.approx(expected, rel=1e-12)


def test_psnr_grad_constant_derivative_reference():
    ramp = np.tile(np.arange(6.0), (6, 1)) * 0 + 5.0
    with pytest.raises(RangeError):
        psnr_grad(ramp, ramp + np.eye(6))


def test_mssim_examples():
    img = smooth_test_image(24, 24)
    assert mssim(img, img) == 1.0
    assert mssim(img, 255 - img) < 1.0
    bumped = img.copy()
    bumped[5, 5] += 1.0
    assert mssim(img, bumped) < 1.0
    with pytest.raises(DimensionError):
        mssim(np.zeros((7, 20)), np.zeros((7, 20)))


def test_mssim_matches_brute_force(rng):
    ref, test = rng.uniform(0, 255, (16, 16)), rng.uniform(0, 255, (16, 16))
    assert mssim(ref, test) == pytest.approx(brute_mssim(ref, test), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 300))
def test_mssim_bounded(seed, scale):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 255, (10, 10))
    b = scale * rng.standard_normal((10, 10))
    assert -1.0 <= mssim(a, b) <= 1.0


def test_isnr_examples(rng):
    clean = rng.uniform(0, 255, (8, 8))
    noisy = clean + rng.normal(0, 10, (8, 8))
    assert isnr(clean, noisy, noisy) == 0.0
    assert isnr(clean, noisy, clean + (noisy - clean) / 10) == pytest.approx(20.0)
    assert isnr(clean, noisy, clean) == math.inf
    assert isnr(clean, clean, noisy) == -math.inf
    den = clean + rng.normal(0, 3, (8, 8))
    assert isnr(clean, noisy, den) == pytest.approx(brute_isnr(clean, noisy, den), rel=1e-12)


def test_report_encoding():
    rep = MetricsReport(psnr=math.inf, psnr_grad=30.0, mssim=0.5, isnr=-math.inf)
    assert rep.encoded() == {"psnr": "inf", "psnr_grad": 30.0, "mssim": 0.5, "isnr": "-inf"}
    assert encode_metric(1.5) == 1.5


def test_evaluate_bundles_all_metrics(rng):
    clean = smooth_test_image(16, 16)
    noisy = clean + rng.normal(0, 20, clean.shape)
    den = clean + rng.normal(0, 5, clean.shape)
    rep = evaluate(clean, noisy, den)
    assert rep == MetricsReport(psnr(clean, den), psnr_grad(clean, den), mssim(clean, den),
                                isnr(clean, noisy, den))
