import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sarbayes.diagnostics import (
    ProtocolError,
    between_variance,
    check_all,
    monitored_scalars,
    rhat,
    rhat_scalars,
    within_variance,
)
from sarbayes.gibbs import SampleStore
from sarbayes.nufft import GridSpec


def test_hand_values():
    same = [[1, 2, 3], [1, 2, 3]]
    assert between_variance(same) == 0
    assert within_variance(same) == 1
    assert rhat(same) == pytest.approx(np.sqrt(2 / 3), abs=1e-12)

    split = [[0, 0, 0], [2, 2, 2]]
    assert between_variance(split) == 6
    assert within_variance(split) == 0
    assert rhat(split) == np.inf


def test_constant_everywhere_is_degenerate_pass():
    r = rhat_scalars(np.full((3, 5, 1), 0.1))
    assert np.isnan(r.values[0])
    assert r.n_degenerate == 1
    assert r.passed


def test_iid_chains_near_one():
    x = np.random.default_rng(0).standard_normal((2, 10**4))
    assert 0.99 < rhat(x) < 1.01


def test_needs_two_chains_and_samples():
    with pytest.raises(ProtocolError):
        rhat([[1.0, 2.0, 3.0]])
    with pytest.raises(ProtocolError):
        rhat([[1.0], [2.0]])


chains = arrays(
    float,
    st.tuples(st.integers(2, 5), st.integers(2, 30)),
    elements=st.floats(-1e3, 1e3, allow_nan=False),
)


@settings(max_examples=60, deadline=None)
@given(c=chains, shift=st.floats(-100, 100))
def test_b_translation_invariant(c, shift):
    assert between_variance(c + shift) == pytest.approx(between_variance(c), rel=1e-6, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(c=chains, k=st.floats(0.1, 10))
def test_w_scales_quadratically(c, k):
    assert within_variance(k * c) == pytest.approx(k**2 * within_variance(c), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(c=chains, a=st.floats(0.5, 4), b=st.floats(-10, 10))
def test_rhat_affine_invariant_and_bounded_below(c, a, b):
    assume(within_variance(c) > 1e-3)
    r = rhat(c)
    assert rhat(a * c + b) == pytest.approx(r, rel=1e-7)
    n_s = c.shape[1]
    assert r >= np.sqrt((n_s - 1) / n_s) * (1 - 1e-12)


def _store(f, alpha, beta):
    return SampleStore(GridSpec(f.shape[2], 1), f, alpha, beta)


def test_check_all_matches_scalar_by_scalar():
    rng = np.random.default_rng(1)
    n_r, S, N = 3, 20, 4
    f = rng.standard_normal((n_r, S, N)) + 1j * rng.standard_normal((n_r, S, N))
    alpha = rng.gamma(2.0, size=(n_r, S, N))
    beta = rng.gamma(3.0, size=(n_r, S))
    rep = check_all(_store(f, alpha, beta), 1.1)
    mon = monitored_scalars(f, alpha, beta)
    assert rep.values.size == 3 * N + 1
    for p in range(3 * N + 1):
        assert rep.values[p] == pytest.approx(rhat(mon[:, :, p]), rel=1e-14)


def test_check_all_identical_chains_pass():
    rng = np.random.default_rng(2)
    one = rng.standard_normal((1, 50, 3)) + 0j
    f = np.repeat(one, 2, axis=0)
    alpha = np.repeat(rng.gamma(1.0, size=(1, 50, 3)), 2, axis=0)
    beta = np.repeat(rng.gamma(1.0, size=(1, 50)), 2, axis=0)
    rep = check_all(_store(f, alpha, beta))
    assert rep.passed


def test_check_all_stuck_chains_fail():
    f = np.zeros((2, 10, 2), dtype=complex)
    f[1] += 1.0
    alpha = np.ones((2, 10, 2))
    beta = np.ones((2, 10))
    rep = check_all(_store(f, alpha, beta))
    assert not rep.passed
    assert "passed=false" in rep.summary()


def test_check_all_single_chain_is_protocol_error():
    with pytest.raises(ProtocolError):
        check_all(_store(np.zeros((1, 5, 2), complex), np.ones((1, 5, 2)), np.ones((1, 5))))
