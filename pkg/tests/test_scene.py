import numpy as np
import pytest
from scipy import stats

from sarbayes.kernels import ParameterError, RngStream
from sarbayes.nufft import FourierCoords, GridSpec, NufftOperator
from sarbayes.scene import (
    PhaseHistory,
    ReflectivityImage,
    SceneSpec,
    SceneSpecError,
    generate_scene,
    synthesize,
)


def test_background_power_matches_alpha():
    g = GridSpec(64, 64)
    f = generate_scene(SceneSpec(g, [], 1e4), RngStream(1)).values
    assert 0.97e-4 <= np.mean(np.abs(f) ** 2) <= 1.03e-4


def test_background_magnitude_is_rayleigh():
    alpha = 1e4
    f = generate_scene(SceneSpec(GridSpec(64, 64), [], alpha), RngStream(2)).values
    ks = stats.kstest(np.abs(f), stats.rayleigh(scale=np.sqrt(1 / (2 * alpha))).cdf)
    assert ks.statistic < 0.02
    # mean^2 / var of a Rayleigh variable is pi / (4 - pi).
    ratio = np.mean(np.abs(f)) ** 2 / np.var(np.abs(f))
    assert ratio == pytest.approx(np.pi / (4 - np.pi), rel=0.05)


def test_targets_overwrite_background():
    g = GridSpec(8, 8)
    spec = SceneSpec(g, [(0, 1.0)], 1e12, phase_model="zero")
    f = generate_scene(spec, RngStream(3)).values
    assert f[0] == 1.0
    assert np.max(np.abs(f[1:])) < 1e-5


def test_random_phase_keeps_magnitude():
    g = GridSpec(8, 8)
    spec = SceneSpec(g, [(5, 2.0), (9, 0.5)], 1e6)
    f = generate_scene(spec, RngStream(4)).values
    assert abs(f[5]) == pytest.approx(2.0)
    assert abs(f[9]) == pytest.approx(0.5)


@pytest.mark.parametrize("targets", [[(1, 1.0), (1, 2.0)], [(64, 1.0)], [(-1, 1.0)]])
def test_bad_targets_rejected(targets):
    with pytest.raises(SceneSpecError):
        generate_scene(SceneSpec(GridSpec(8, 8), targets, 1.0), RngStream(0))


def test_synthesize_noiseless_limit():
    g = GridSpec(8, 8)
    op = NufftOperator(g, FourierCoords.random(40, np.random.default_rng(0)))
    scene = generate_scene(SceneSpec(g, [(3, 1.0)], 1e2), RngStream(5))
    ph = synthesize(scene, op, 1e15, RngStream(6))
    clean = op.forward(scene.values)
    assert np.linalg.norm(ph.data - clean) / np.linalg.norm(clean) <= 1e-6
    assert ph.noise_beta_true == 1e15


def test_synthesize_noise_power():
    M = 10**5
    g = GridSpec(2, 2)
    op = NufftOperator(g, FourierCoords.random(M, np.random.default_rng(1)))
    ph = synthesize(ReflectivityImage(g, np.zeros(4)), op, 1.0, RngStream(7))
    # |n|^2 ~ Exp(1), so the sample mean has standard error 1/sqrt(M).
    assert abs(np.mean(np.abs(ph.data) ** 2) - 1.0) < 3 / np.sqrt(M)


def test_synthesize_residual_expectation():
    g = GridSpec(8, 8)
    op = NufftOperator(g, FourierCoords.uniform(g))
    scene = generate_scene(SceneSpec(g, [(0, 1.0)], 1e3), RngStream(8))
    beta = 50.0
    res = [np.sum(np.abs(synthesize(scene, op, beta, RngStream(9, k)).data - op.forward(scene.values)) ** 2)
           for k in range(400)]
    # Each residual is Gamma(M, beta): mean M/beta, sd sqrt(M)/beta.
    se = np.sqrt(g.N) / beta / np.sqrt(len(res))
    assert abs(np.mean(res) - g.N / beta) < 4 * se


def test_synthesize_deterministic_and_validated():
    g = GridSpec(4, 4)
    op = NufftOperator(g, FourierCoords.uniform(g))
    scene = generate_scene(SceneSpec(g, [], 1.0), RngStream(1))
    a = synthesize(scene, op, 2.0, RngStream(10)).data
    b = synthesize(scene, op, 2.0, RngStream(10)).data
    assert np.array_equal(a, b)
    with pytest.raises(ParameterError):
        synthesize(scene, op, 0.0, RngStream(10))


def test_phase_history_length_checked():
    with pytest.raises(ValueError):
        PhaseHistory(FourierCoords(np.zeros((2, 2))), np.zeros(3))
