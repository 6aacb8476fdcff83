import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpdenoise.core import DimensionError, ParameterError
from cpdenoise.cpde import (
    CpdeParams, FidelitySign, SolverFailure, denoise, init_state, relative_change, step,
)
from cpdenoise.kernels import convolve, gaussian_kernel, grad_mag_sq
from cpdenoise.quality import NoiseSpec, add_gaussian_noise
from cpdenoise.solver import SolverConfig

from conftest import smooth_test_image
from oracles import dense_step, gaussian_weights, loop_convolve, loop_grad_sq

TIGHT = SolverConfig(tol=1e-13, max_iter=2000)


def params(**kw):
    base = dict(k=4.45, lam=0.8, psi=0.1)
    base.update(kw)
    return CpdeParams(**base)


def test_params_validation_and_lambda_rule():
    with pytest.raises(ParameterError):
        params(k=0.0)
    with pytest.raises(ParameterError):
        params(lam=-1.0)
    with pytest.raises(ParameterError):
        params(eps=1.0)
    with pytest.raises(ParameterError):
        params(max_steps=0)
    p = CpdeParams.for_noise(40.0, k=4.45)
    assert p.lam == pytest.approx(1275.0 / 1600.0)
    assert (p.tau, p.xi, p.phi, p.eps, p.h_cap, p.max_steps) == (0.1, 1.0, 1.0, 1e-4, 65025.0, 500)
    with pytest.raises(ParameterError):
        CpdeParams.for_noise(0.0, k=1.0)


def test_init_state_constant():
    s = init_state(np.full((6, 7), 90.0), params())
    assert np.all(s.u == 0) and np.all(s.v == 0) and np.all(s.I == 90.0)
    assert s.step == 0


def test_init_state_ramp_matches_composed_oracle():
    I0 = np.tile(2.0 * np.arange(24), (10, 1))
    s = init_state(I0, params())
    oracle = loop_convolve(loop_grad_sq(I0), gaussian_weights(1.0))
    np.testing.assert_allclose(s.u, oracle, atol=1e-10)
    np.testing.assert_allclose(s.u[:, 4:-4], 4.0, atol=1e-12)


def test_init_state_rejects_degenerate_and_applies_prefilter():
    with pytest.raises(DimensionError):
        init_state(np.zeros((1, 8)), params())
    I0 = np.arange(20.0).reshape(4, 5)
    s = init_state(I0, params(), prefilter=lambda f: f * 2)
    np.testing.assert_array_equal(s.I0, 2 * I0)
    np.testing.assert_allclose(s.u, convolve(grad_mag_sq(2 * I0), gaussian_kernel(1.0)))


def test_constant_image_is_fixed_point():
    p = params()
    s = init_state(np.full((8, 8), 123.0), p)
    for _ in range(3):
        s, rec = step(s, p)
        assert np.all(s.I == 123.0) and np.all(s.v == 0) and np.all(s.u == 0)
        assert rec.rel_change == 0.0


def test_lambda_zero_conserves_sum(rng):
    p = params(lam=0.0)
    I0 = rng.uniform(0, 255, (12, 9))
    s, _ = step(init_state(I0, p), p)
    assert abs(s.I.sum() - I0.sum()) <= 1e-8 * np.linalg.norm(I0) * np.sqrt(I0.size)


@pytest.mark.parametrize("sign", list(FidelitySign))
def test_one_step_matches_dense_oracle(rng, sign):
    p = params(solver=TIGHT, psi=0.7, fidelity_sign=sign)
    I0 = rng.uniform(0, 255, (4, 4))
    s = init_state(I0, p)
    # run one step first so v and I - I0 are nonzero going into the check
    s, _ = step(s, p)
    nxt, _ = step(s, p)
    I1, u1, v1 = dense_step(
        s.I, s.u, s.v, s.I0, tau=p.tau, xi=p.xi, phi=p.phi, psi=p.psi, lam=p.lam,
        threshold=p.threshold, h_cap=p.h_cap,
        mismatch_sign=1.0 if sign is FidelitySign.CONTINUOUS else -1.0,
    )
    np.testing.assert_allclose(nxt.u, u1, atol=1e-7)
    np.testing.assert_allclose(nxt.v, v1, atol=1e-7)
    np.testing.assert_allclose(nxt.I, I1, atol=1e-7)


def test_relative_change_examples():
    a = np.full((2, 2), 7.0)
    assert relative_change(a, a) == 0.0
    assert relative_change(np.ones((2, 2)), np.ones((2, 2)) + 0.1) == pytest.approx(0.01)
    prev = np.array([[3.0, 4.0], [0.0, 0.0]])
    assert relative_change(prev, prev + np.array([[0, 0], [0, 5.0]])) == pytest.approx(1.0)
    with pytest.raises(ZeroDivisionError):
        relative_change(np.zeros((2, 2)), np.ones((2, 2)))


def test_denoise_constant_stops_after_one_step():
    out, hist = denoise(np.full((9, 9), 50.0), params())
    assert hist.steps == 1 and hist.converged
    assert hist.records[0].rel_change == 0.0
    assert np.all(out == 50.0)


def test_denoise_smooth_image_reaches_eps():
    noisy = add_gaussian_noise(smooth_test_image(48, 48), NoiseSpec(20.0, 3))
    p = CpdeParams.for_noise(20.0, k=3.15, psi=0.1)
    out, hist = denoise(noisy, p)
    assert hist.converged and hist.steps < p.max_steps
    assert hist.records[-1].rel_change <= p.eps
    assert all(r.rel_change > p.eps for r in hist.records[:-1])


def test_max_steps_reason():
    noisy = add_gaussian_noise(smooth_test_image(32, 32), NoiseSpec(30.0, 1))
    _, hist = denoise(noisy, params(max_steps=2, eps=1e-12))
    assert hist.reason == "max_steps" and hist.steps == 2


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_edge_field_stays_in_bounds(seed):
    rng = np.random.default_rng(seed)
    I0 = rng.uniform(0, 255, (10, 10))
    p = params(h_cap=float(rng.uniform(10, 65025)))
    s = init_state(I0, p)
    upper = max(s.u.max(), p.h_cap)
    for _ in range(5):
        s, _ = step(s, p)
        assert s.u.min() >= -1e-9
        assert s.u.max() <= upper + 1e-9


def test_solver_failure_carries_step_index(rng):
    p = params(solver=SolverConfig(tol=1e-15, max_iter=1))
    with pytest.raises(SolverFailure) as info:
        denoise(rng.uniform(0, 255, (16, 16)), p)
    assert info.value.step == 1


def test_algorithm_sign_diverges_where_continuous_sign_settles():
    clean = smooth_test_image(32, 32)
    noisy = np.clip(add_gaussian_noise(clean, NoiseSpec(40.0, 9)), 0, 255)
    peaks = {}
    for sign in FidelitySign:
        p = CpdeParams.for_noise(40.0, k=4.45, psi=0.1, fidelity_sign=sign)
        s = init_state(noisy, p)
        for _ in range(200):
            s, _ = step(s, p)
        peaks[sign] = np.abs(s.I).max()
    assert peaks[FidelitySign.CONTINUOUS] < 260
    assert peaks[FidelitySign.ALGORITHM] > 1e3
