import math

import numpy as np
import pytest

from conftest import assert_mean_near
from miso_lab.channel import ChannelConfig
from miso_lab.encoders import (BUILTIN_ENCODERS, ConjugateBeamEncoder, PilotEncoder,
                               RandomFeedbackEncoder, ZeroEncoder)
from miso_lab.errors import (InvalidDimensionError, InvalidInputError, InvalidStateError)
from miso_lab.estimator import (BatchMmse, GaussPrior, batch_condition, clean_omega,
                                estimate_error_cov_mc, reset, run_feedback_block, update,
                                update_general)
from miso_lab.montecarlo import sequential_vs_batch_gap


def _random_prior(gen, m):
    b = gen.normal(size=(m, m)) + 1j * gen.normal(size=(m, m))
    cov = b @ b.conj().T / m
    mean = gen.normal(size=m) + 1j * gen.normal(size=m)
    return GaussPrior(mean, 0.5 * (cov + cov.conj().T))


def _cn(gen, *shape):
    return (gen.normal(size=shape) + 1j * gen.normal(size=shape)) / math.sqrt(2)


def test_reset():
    s = reset(3)
    assert np.array_equal(s.omega, np.eye(3))
    assert np.array_equal(s.h_hat, np.zeros(3))
    assert s.t_in_block == 0
    one = reset(1)
    assert one.omega.shape == (1, 1) and one.omega[0, 0] == 1
    with pytest.raises(InvalidDimensionError):
        reset(0)


def test_zero_input_leaves_state_unchanged():
    gen = np.random.default_rng(0)
    s = update(reset(4), _cn(gen, 4), 0.3)
    s2 = update(s, np.zeros(4), 1.7 - 2j)
    assert np.array_equal(s2.h_hat, s.h_hat)
    assert np.allclose(s2.omega, s.omega, atol=1e-15)
    assert s2.t_in_block == s.t_in_block + 1


@pytest.mark.parametrize("p", [0.1, 1.0, 10.0, 1e3])
def test_pilot_update_is_scalar_mmse(p):
    y = 0.7 - 1.3j
    s = update(reset(3), np.array([math.sqrt(p), 0, 0]), y)
    expected = math.sqrt(p) / (p + 1) * y
    assert abs(s.h_hat[0] - expected) <= 1e-12 * abs(expected)
    assert s.omega[0, 0].real == pytest.approx(1 / (p + 1), rel=1e-12)
    assert np.array_equal(s.h_hat[1:], np.zeros(2))


def test_update_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        update(reset(3), np.ones(2), 0.0)


def test_update_matches_update_general_exactly():
    gen = np.random.default_rng(1)
    s = reset(4)
    x, y = _cn(gen, 4), complex(_cn(gen, 1)[0])
    a = update(s, x, y)
    b = update_general(GaussPrior(s.h_hat, s.omega), x[None, :], [y])
    assert np.allclose(a.h_hat, b.mean, atol=1e-14)
    assert np.allclose(a.omega, b.cov, atol=1e-14)


def test_update_general_zero_matrix():
    gen = np.random.default_rng(2)
    prior = _random_prior(gen, 3)
    post = update_general(prior, np.zeros((2, 3)), [1.0, 2.0])
    assert np.allclose(post.mean, prior.mean, atol=1e-15)
    assert np.allclose(post.cov, prior.cov, atol=1e-15)


def test_update_general_stacked_vs_sequential():
    gen = np.random.default_rng(3)
    prior = _random_prior(gen, 4)
    a = _cn(gen, 2, 4)
    y = _cn(gen, 2)
    joint = update_general(prior, a, y)
    step = update_general(update_general(prior, a[:1], y[:1]), a[1:], y[1:])
    assert np.allclose(joint.mean, step.mean, atol=1e-10)
    assert np.allclose(joint.cov, step.cov, atol=1e-10)


def test_update_general_errors():
    prior = GaussPrior(np.zeros(2, complex), np.eye(2, dtype=complex))
    with pytest.raises(InvalidInputError):
        update_general(prior, np.ones((1, 3)), [0.0])
    with pytest.raises(InvalidInputError):
        update_general(prior, np.ones((2, 2)), [0.0])
    with pytest.raises(InvalidStateError):
        update_general(GaussPrior(np.zeros(2), np.diag([1.0, -1.0])), np.ones((1, 2)), [0])
    with pytest.raises(InvalidStateError):
        update_general(GaussPrior(np.zeros(2), np.array([[1.0, 1j], [1j, 1.0]])),
                       np.ones((1, 2)), [0])


def test_batch_condition_basic_cases():
    gen = np.random.default_rng(4)
    prior = _random_prior(gen, 3)
    same = batch_condition(prior, [])
    assert np.array_equal(same.mean, prior.mean) and np.array_equal(same.cov, prior.cov)
    x, y = _cn(gen, 3), complex(_cn(gen, 1)[0])
    one = batch_condition(prior, [(x, y)])
    ref = update_general(prior, x[None, :], [y])
    assert np.allclose(one.mean, ref.mean, atol=1e-12)
    assert np.allclose(one.cov, ref.cov, atol=1e-12)


def test_batch_condition_order_invariant():
    gen = np.random.default_rng(5)
    prior = _random_prior(gen, 5)
    obs = [(_cn(gen, 5), complex(_cn(gen, 1)[0])) for _ in range(6)]
    a = batch_condition(prior, obs)
    b = batch_condition(prior, obs[::-1])
    assert np.allclose(a.mean, b.mean, atol=1e-10)
    assert np.allclose(a.cov, b.cov, atol=1e-10)


def test_sequential_equals_batch_with_feedback_encoder():
    gen = np.random.default_rng(6)
    h = _cn(gen, 4)
    s, obs, ys = reset(4), [], []
    for _ in range(5):
        # inputs depend nonlinearly on the fed-back outputs
        last = ys[-1] if ys else 1.0
        x = np.tanh(np.abs(last)) * _cn(gen, 4) + last * s.h_hat.conj()
        y = complex(h @ x + _cn(gen, 1)[0])
        obs.append((x, y))
        ys.append(y)
        s = update(s, x, y)
    ref = batch_condition(GaussPrior(np.zeros(4, complex), np.eye(4, dtype=complex)), obs)
    assert np.abs(s.h_hat - ref.mean).max() <= 1e-8
    assert np.abs(s.omega - ref.cov).max() <= 1e-8


@pytest.mark.parametrize("case", range(40))
def test_sequential_vs_batch_random_cases(case):
    mean_gap, cov_gap = sequential_vs_batch_gap(case, seed=99)
    assert mean_gap <= 1e-8 and cov_gap <= 1e-8


def test_clean_omega_tolerances():
    w = np.eye(2)
    out, (lo, hi) = clean_omega(w)
    assert np.array_equal(out, w) and (lo, hi) == (1.0, 1.0)
    small = np.diag([1.0 + 5e-8, -5e-8])
    out, _ = clean_omega(small)
    assert np.linalg.eigvalsh(out).max() <= 1.0 and np.linalg.eigvalsh(out).min() >= 0.0
    with pytest.raises(InvalidStateError):
        clean_omega(np.diag([1.0 + 1e-5, 0.5]))


def test_batch_update_matches_scalar_update():
    gen = np.random.default_rng(7)
    n, m = 5, 3
    est = BatchMmse.start(n, m)
    states = [reset(m) for _ in range(n)]
    for _ in range(4):
        x = _cn(gen, n, m)
        y = _cn(gen, n)
        est.update(x, y)
        states = [update(s, x[i], y[i]) for i, s in enumerate(states)]
    for i, s in enumerate(states):
        assert np.allclose(est.h_hat[i], s.h_hat, atol=1e-12)
        assert np.allclose(est.omega[i], s.omega, atol=1e-12)
    assert np.abs(est.omega - est.omega.conj().swapaxes(1, 2)).max() <= 1e-15


@pytest.mark.parametrize("name", sorted(BUILTIN_ENCODERS))
def test_omega_spectrum_and_trace_monotone(name):
    cfg = ChannelConfig(6, 8, 1000.0)
    traces, lo, hi = [], [], []

    def observe(step):
        w = step.est.spectrum()
        lo.append(w.min())
        hi.append(w.max())
        traces.append(np.einsum("nii->n", step.est.omega).real.copy())

    run_feedback_block(BUILTIN_ENCODERS[name], cfg, 11, np.arange(2000), observe)
    assert min(lo) >= -1e-9 and max(hi) <= 1 + 1e-9
    traces = np.array(traces)
    assert np.all(np.diff(traces, axis=0) <= 1e-12)


def test_error_covariance_pilot():
    p = 10.0
    cfg = ChannelConfig(2, 4, p)
    ec = estimate_error_cov_mc(PilotEncoder(), cfg, 2, 100_000, 3)
    assert abs(ec.empirical[0, 0].real - 1 / (p + 1)) <= 3 * ec.stderr[0, 0].real
    assert abs(ec.empirical[1, 1].real - 1.0) <= 3 * ec.stderr[1, 1].real
    assert ec.reported[0, 0].real == pytest.approx(1 / (p + 1))


def test_error_covariance_before_any_observation_is_identity():
    ec = estimate_error_cov_mc(ConjugateBeamEncoder(), ChannelConfig(3, 4, 1.0), 1, 50_000, 4)
    assert np.allclose(ec.reported, np.eye(3))
    diff = ec.empirical - np.eye(3)
    assert np.all(np.abs(diff.real) <= 3 * ec.stderr.real + 1e-12)
    assert np.all(np.abs(diff.imag) <= 3 * ec.stderr.imag + 1e-12)


@pytest.mark.parametrize("encoder", [RandomFeedbackEncoder(), ConjugateBeamEncoder()])
def test_reported_omega_matches_empirical_error(encoder):
    ec = estimate_error_cov_mc(encoder, ChannelConfig(3, 4, 5.0), 3, 100_000, 8)
    diff = ec.empirical - ec.reported
    assert np.all(np.abs(diff.real) <= 3 * ec.stderr.real + 1e-12)
    assert np.all(np.abs(diff.imag) <= 3 * ec.stderr.imag + 1e-12)
    # error covariance stays below the identity
    assert np.linalg.eigvalsh(ec.empirical).max() <= 1 + 3 * np.abs(ec.stderr).max()


def test_estimate_and_error_uncorrelated():
    cfg = ChannelConfig(3, 5, 2.0)
    box = {}

    def observe(step):
        if step.t == 4:
            box["hh"] = step.est.h_hat.copy()
            box["err"] = step.h - step.est.h_hat

    run_feedback_block(RandomFeedbackEncoder(), cfg, 21, np.arange(100_000), observe, steps=4)
    hh, err = box["hh"], box["err"]
    for i in range(3):
        for j in range(3):
            prod = hh[:, i] * err[:, j].conj()
            assert_mean_near(prod.real, 0.0)
            assert_mean_near(prod.imag, 0.0)


def test_zero_encoder_keeps_prior():
    cfg = ChannelConfig(3, 4, 1.0)
    seen = []
    run_feedback_block(ZeroEncoder(), cfg, 1, np.arange(10),
                       lambda st: seen.append((st.est.h_hat.copy(), st.est.omega.copy())))
    for hh, om in seen:
        assert not hh.any()
        assert np.array_equal(om, np.broadcast_to(np.eye(3), om.shape))


def test_estimate_error_cov_input_validation():
    cfg = ChannelConfig(2, 4, 1.0)
    with pytest.raises(InvalidInputError):
        estimate_error_cov_mc(PilotEncoder(), cfg, 1, 0, 0)
    with pytest.raises(InvalidInputError):
        estimate_error_cov_mc(PilotEncoder(), cfg, 5, 10, 0)
