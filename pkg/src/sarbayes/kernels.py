"""Seedable random draws for the model's distributions.

Complex Gaussians follow the ``CN(0, s2)`` convention where ``s2 = E|z|^2``
and the real and imaginary parts each carry ``s2 / 2``. Gamma draws are in
shape-rate form everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = float(np.finfo(float).eps)


class ParameterError(ValueError):
    pass


class RngStream:
    """A reproducible random stream keyed by ``(seed, stream_id)``.

    Streams with the same seed and different ids are spawned children of a
    single :class:`numpy.random.SeedSequence`, which is what makes them
    independent.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ParameterError("seed and stream_id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


@dataclass(frozen=True)
class HyperParameters:
    """Gamma hyperprior parameters: ``alpha_i ~ Gamma(a, b)``, ``beta ~ Gamma(c, d)``.

    The defaults (machine epsilon) make the prior on each pixel behave like
    ``1/|f_i|`` and so promote sparsity without any tuning.
    """

    a: float = EPS
    b: float = EPS
    c: float = EPS
    d: float = EPS

    def __post_init__(self):
        for name in "abcd":
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"hyperparameter {name} must be positive, got {v}")


def draw_complex_gaussian(rng: RngStream, n: int, variance) -> np.ndarray:
    """Draw ``n`` independent ``CN(0, variance_i)`` values.

    ``variance`` may be a scalar or a length-``n`` vector.
    """
    var = np.broadcast_to(np.asarray(variance, dtype=float), (n,))
    if not np.all(var > 0):
        raise ParameterError("complex Gaussian variances must be positive")
    z = rng.generator.standard_normal((n, 2))
    return np.sqrt(var / 2) * (z[:, 0] + 1j * z[:, 1])


def draw_gamma(rng: RngStream, shape: float, rate: float) -> float:
    if not (shape > 0 and rate > 0):
        raise ParameterError(f"gamma needs shape > 0 and rate > 0, got {shape}, {rate}")
    return float(rng.generator.standard_gamma(shape) / rate)


def draw_gamma_field(rng: RngStream, shape: float, rates) -> np.ndarray:
    """Independent ``Gamma(shape, rates_i)`` draws, one per component."""
    rates = np.asarray(rates, dtype=float)
    if not shape > 0:
        raise ParameterError(f"gamma shape must be positive, got {shape}")
    if not np.all(rates > 0):
        raise ParameterError("gamma rates must be positive; floor them before sampling")
    return rng.generator.standard_gamma(shape, size=rates.shape) / rates
