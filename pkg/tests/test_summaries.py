import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sarbayes.gibbs import SampleStore
from sarbayes.nufft import GridSpec
from sarbayes.summaries import (
    SummaryError,
    beta_histogram,
    export_movie_frames,
    gray_levels,
    pgm_bytes,
    read_pgm,
    summarize,
    to_db,
    variance_db,
)


def store_from(f, alpha=None, beta=None, grid=None):
    f = np.asarray(f, dtype=complex)
    n_r, S, N = f.shape
    alpha = np.ones_like(f.real) if alpha is None else alpha
    beta = np.ones((n_r, S)) if beta is None else beta
    return SampleStore(grid or GridSpec(N, 1), f, alpha, beta)


def test_identical_samples_zero_variance():
    f = np.tile(np.array([1 + 2j, -3j, 0.5]), (2, 4, 1))
    s = summarize(store_from(f))
    assert np.all(s.var_f == 0)
    np.testing.assert_array_equal(s.mean_f, f[0, 0])
    assert s.sample_count == 8


def test_two_sample_variance_hand_value():
    s = summarize(store_from(np.array([[[0.0]], [[2.0]]])))
    assert s.mean_f[0] == 1.0
    assert s.var_f[0] == 2.0


def test_too_few_samples():
    with pytest.raises(SummaryError):
        summarize(store_from(np.zeros((1, 1, 3))))


def test_cn_store_moments():
    rng = np.random.default_rng(0)
    mu, s2, S = 0.3 - 0.2j, 0.5, 10**4
    f = mu + np.sqrt(s2 / 2) * (rng.standard_normal((2, S // 2, 3)) + 1j * rng.standard_normal((2, S // 2, 3)))
    s = summarize(store_from(f))
    assert np.all(np.abs(s.mean_f - mu) < 4 * np.sqrt(s2 / S))
    np.testing.assert_allclose(s.var_f, s2, rtol=0.05)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_summarize_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((2, 6, 3)) + 1j * rng.standard_normal((2, 6, 3))
    perm = rng.permutation(12)
    g = f.reshape(12, 3)[perm].reshape(2, 6, 3)
    a, b = summarize(store_from(f)), summarize(store_from(g))
    np.testing.assert_allclose(a.mean_f, b.mean_f, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(a.var_f, b.var_f, rtol=1e-12, atol=1e-15)


def test_alpha_mean_and_beta_samples():
    alpha = np.array([[[1.0, 10.0]], [[3.0, 30.0]]])
    beta = np.array([[5.0], [7.0]])
    s = summarize(store_from(np.array([[[0, 1]], [[1, 0]]]), alpha, beta))
    np.testing.assert_array_equal(s.mean_alpha, [2.0, 20.0])
    np.testing.assert_array_equal(s.mean_inv_alpha, [0.5, 0.05])
    np.testing.assert_array_equal(np.sort(s.beta_samples), [5.0, 7.0])


def test_db_values():
    db = to_db(np.array([1.0, 1e-3, 1e-4, 0.1j])).values
    np.testing.assert_array_equal(db, [0.0, -60.0, -60.0, -20.0])
    assert np.all(to_db(np.zeros(4)).values == -60.0)


@settings(max_examples=60, deadline=None)
@given(arrays(complex, st.integers(1, 40), elements=st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)))
def test_db_range(f):
    db = to_db(f).values
    assert np.all((db >= -60) & (db <= 0))
    if np.abs(f).max() > 0:
        assert db[np.argmax(np.abs(f))] == 0.0


def test_gray_mapping_rounds_half_away():
    from sarbayes.summaries import DbImage

    # -30 dB maps to exactly 127.5, which must round up.
    db = DbImage(GridSpec(3, 1), np.array([-60.0, -30.0, 0.0]))
    np.testing.assert_array_equal(gray_levels(db), [0, 128, 255])


def test_pgm_layout(tmp_path):
    g = GridSpec(3, 2)
    raw = pgm_bytes(to_db(np.arange(1, 7), grid=g))
    assert raw.startswith(b"P5\n3 2\n255\n")
    assert len(raw) == len(b"P5\n3 2\n255\n") + 6
    p = tmp_path / "x.pgm"
    p.write_bytes(raw)
    img = read_pgm(p)
    assert img.shape == (2, 3) and img[1, 2] == 255


def test_variance_db_zero_is_floor():
    db = variance_db(np.zeros(4), GridSpec(2, 2))
    assert np.all(gray_levels(db) == 0)


def test_movie_frames(tmp_path):
    rng = np.random.default_rng(3)
    g = GridSpec(4, 3)
    f = rng.standard_normal((2, 5, g.N)) + 0j
    f[..., 0] = 0.5  # constant-magnitude pixel
    f[1, 2, 5] = 10.0  # global max lives in one frame only
    paths = export_movie_frames(store_from(f, grid=g), tmp_path)
    assert len(paths) == 10
    assert [p.name for p in paths][:2] == ["frame_000000.pgm", "frame_000001.pgm"]
    levels = {read_pgm(p)[0, 0] for p in paths}
    assert len(levels) == 1

    same = np.tile(f[0, 0], (1, 3, 1))
    paths = export_movie_frames(store_from(same, grid=g), tmp_path / "same")
    assert len({p.read_bytes() for p in paths}) == 1


def test_beta_histogram():
    edges, counts = beta_histogram(np.full(7, 3.0), 5)
    assert counts.sum() == 7 and np.count_nonzero(counts) == 1

    rng = np.random.default_rng(4)
    x = rng.uniform(10, 20, 10**4)
    edges, counts = beta_histogram(x, 10)
    assert counts.sum() == x.size
    assert edges[0] == x.min() and edges[-1] == x.max()
    expected = x.size / 10
    chi2 = np.sum((counts - expected) ** 2 / expected)
    assert chi2 < 27.9  # 99.9th percentile of chi-square with 9 dof
