"""Gibbs sampler for the joint posterior of image, speckle field and noise precision.

One sweep draws, in order,

* ``f | alpha, beta``  by the perturbed normal-equations solve with the
  diagonal approximation ``beta F^H F + diag(alpha) ~ diag(beta + alpha)``,
* ``alpha_i | f ~ Gamma(a + 1, |f_i|^2 + b)``,
* ``beta | f ~ Gamma(M + c, ||data - F f||^2 + d)``,

which costs one adjoint and one forward transform.

Chains are advanced in lockstep with a leading chain axis so that the
transforms are batched; each chain still owns its state and random stream.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diagnostics import RhatReport, check_all
from .kernels import EPS, HyperParameters, RngStream, draw_complex_gaussian
from .nufft import GridSpec, NufftOperator, SizeMismatchError
from .scene import PhaseHistory

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class ChainState:
    f: np.ndarray
    alpha: np.ndarray
    beta: float

    def check(self):
        if not np.all(np.isfinite(self.f)):
            raise FloatingPointError("non-finite reflectivity in chain state")
        if not (np.all(self.alpha > 0) and np.all(np.isfinite(self.alpha))):
            raise FloatingPointError("alpha must stay positive and finite")
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise FloatingPointError("beta must stay positive and finite")


@dataclass
class GibbsConfig:
    """Sampler settings.

    ``batch_length`` is the initial ``n_s``; every further batch doubles the
    total chain length and keeps its latter half. ``thin`` keeps every
    ``thin``-th draw of a retained window.
    """

    hyper: HyperParameters = field(default_factory=HyperParameters)
    n_chains: int = 5
    batch_length: int = 64
    rhat_tol: float = 1.1
    max_batches: int = 8
    alpha_rate_floor: float = EPS
    init_policy: str = "adjoint-start"
    seed: int = 0
    thin: int = 1

    def validate(self, convergence_control: bool = True):
        if self.n_chains < 1 or self.batch_length < 1 or self.max_batches < 1 or self.thin < 1:
            raise ConfigError("chain counts, lengths and thinning must be positive")
        if convergence_control and self.n_chains < 2:
            raise ConfigError("convergence control needs at least two chains")
        if not self.rhat_tol > 1:
            raise ConfigError("rhat_tol must exceed 1")
        if not self.alpha_rate_floor > 0:
            raise ConfigError("alpha_rate_floor must be positive")
        if self.init_policy not in ("adjoint-start", "random-start"):
            raise ConfigError(f"unknown init policy {self.init_policy!r}")
        if self.batch_length // self.thin < 2:
            raise ConfigError("thinning leaves fewer than two retained samples per chain")


@dataclass
class SampleStore:
    """Retained draws, ``f`` and ``alpha`` shaped ``(n_r, S, N)``, ``beta`` ``(n_r, S)``."""

    grid: GridSpec
    f: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    thinning: int = 1
    converged: Optional[bool] = None
    report: Optional[RhatReport] = None
    n_batches: int = 0
    total_steps: int = 0

    def __post_init__(self):
        if self.f.shape != self.alpha.shape or self.f.shape[:2] != self.beta.shape:
            raise SizeMismatchError("inconsistent sample array shapes")
        if self.f.shape[2] != self.grid.N:
            raise SizeMismatchError("samples do not match grid")

    @property
    def n_chains(self) -> int:
        return self.f.shape[0]

    @property
    def retained_per_chain(self) -> int:
        return self.f.shape[1]

    @property
    def n_samples(self) -> int:
        return self.n_chains * self.retained_per_chain


def _as_rngs(rng) -> list:
    return list(rng) if isinstance(rng, (list, tuple)) else [rng]


def _sample_f(f_shape, alpha, beta, data, op, rngs):
    """Batched f-draw. ``alpha`` is ``(B, N)``, ``beta`` is ``(B,)``."""
    B = len(rngs)
    v1 = np.stack([draw_complex_gaussian(r, op.M, 1.0 / b) for r, b in zip(rngs, beta)])
    v2 = np.stack([draw_complex_gaussian(r, op.N, a) for r, a in zip(rngs, alpha)])
    rhs = beta[:, None] * op.adjoint(data[None, :] + v1) + v2
    denom = beta[:, None] + alpha
    if not np.all(denom > 0):
        raise FloatingPointError("beta + alpha must be positive")
    return (rhs / denom).reshape((B,) + f_shape)


def _sample_alpha(f, hyper, floor, rngs):
    rate = np.maximum(np.abs(f) ** 2, floor) + hyper.b
    shape = hyper.a + 1.0
    return np.stack([r.generator.standard_gamma(shape, size=rt.shape) / rt for r, rt in zip(rngs, rate)])


def _sample_beta(f, data, op, hyper, rngs):
    resid = data[None, :] - op.forward(f)
    rate = np.maximum(np.sum(np.abs(resid) ** 2, axis=-1) + hyper.d, EPS)
    shape = op.M + hyper.c
    return np.array([r.generator.standard_gamma(shape) / rt for r, rt in zip(rngs, rate)])


def sample_f_conditional(state: ChainState, ph: PhaseHistory, op: NufftOperator, rng) -> np.ndarray:
    """Draw ``f`` from its conditional: ``(beta F^H(data + v1) + v2) / (beta + alpha)``.

    ``v1 ~ CN(0, I / beta)`` and ``v2 ~ CN(0, diag(alpha))``, which makes the
    draw exactly ``CN(beta Sigma F^H data, Sigma)``, ``Sigma = diag(1/(beta+alpha))``,
    whenever ``F^H F = I``.
    """
    if ph.M != op.M or state.f.shape[-1] != op.N:
        raise SizeMismatchError("state, data and operator sizes disagree")
    alpha = np.atleast_2d(state.alpha)
    beta = np.atleast_1d(np.asarray(state.beta, dtype=float))
    f = _sample_f(alpha.shape[1:], alpha, beta, ph.data, op, _as_rngs(rng))
    return f if np.ndim(state.f) == 2 else f[0]


def sample_alpha_conditional(f, hyper: HyperParameters, floor: float, rng) -> np.ndarray:
    f = np.asarray(f)
    out = _sample_alpha(np.atleast_2d(f), hyper, floor, _as_rngs(rng))
    return out if f.ndim == 2 else out[0]


def sample_beta_conditional(f, ph: PhaseHistory, op: NufftOperator, hyper: HyperParameters, rng):
    if ph.M != op.M:
        raise SizeMismatchError("data and operator sizes disagree")
    f = np.asarray(f)
    out = _sample_beta(np.atleast_2d(f), ph.data, op, hyper, _as_rngs(rng))
    return out if f.ndim == 2 else float(out[0])


def gibbs_step(state: ChainState, ph: PhaseHistory, op: NufftOperator, cfg: GibbsConfig, rng) -> ChainState:
    f = sample_f_conditional(state, ph, op, rng)
    alpha = sample_alpha_conditional(f, cfg.hyper, cfg.alpha_rate_floor, rng)
    beta = sample_beta_conditional(f, ph, op, cfg.hyper, rng)
    return ChainState(f, alpha, beta)


def initial_states(ph: PhaseHistory, op: NufftOperator, cfg: GibbsConfig, rngs: Sequence[RngStream]) -> ChainState:
    """Overdispersed starting points, one per stream, stacked on a leading axis."""
    floor = cfg.alpha_rate_floor
    a = op.adjoint(ph.data)
    spread = max(float(np.mean(np.abs(a - a.mean()) ** 2)), floor)
    if cfg.init_policy == "adjoint-start":
        f0 = np.stack([a + draw_complex_gaussian(r, op.N, spread) for r in rngs])
    else:
        f0 = np.stack([draw_complex_gaussian(r, op.N, spread) for r in rngs])
    alpha0 = 1.0 / np.maximum(np.abs(f0) ** 2, floor)
    resid = np.sum(np.abs(ph.data[None, :] - op.forward(f0)) ** 2, axis=-1)
    beta0 = op.M / np.maximum(resid, floor)
    return ChainState(f0, alpha0, beta0)


def _advance(state, ph, op, cfg, rngs, n_steps, keep_from=None):
    """Run ``n_steps`` lockstep sweeps; collect thinned draws from step ``keep_from`` on."""
    f, alpha, beta = state.f, state.alpha, state.beta
    kept_f, kept_a, kept_b = [], [], []
    for k in range(n_steps):
        f = _sample_f(f.shape[1:], alpha, beta, ph.data, op, rngs)
        alpha = _sample_alpha(f, cfg.hyper, cfg.alpha_rate_floor, rngs)
        beta = _sample_beta(f, ph.data, op, cfg.hyper, rngs)
        if keep_from is not None and k >= keep_from and (k - keep_from) % cfg.thin == cfg.thin - 1:
            kept_f.append(f)
            kept_a.append(alpha)
            kept_b.append(beta)
    new = ChainState(f, alpha, beta)
    if keep_from is None:
        return new, None
    return new, (np.stack(kept_f, axis=1), np.stack(kept_a, axis=1), np.stack(kept_b, axis=1))


def run_chains(ph: PhaseHistory, op: NufftOperator, cfg: GibbsConfig, check_convergence: bool = True) -> SampleStore:
    """Run ``n_chains`` chains until every monitored R-hat drops below tolerance.

    The first batch has length ``2 n_s``; each later batch doubles the total
    length, so the retained latter half is exactly the newly drawn segment.
    If ``max_batches`` is reached first, the last window is returned with
    ``converged=False``.
    """
    cfg.validate(convergence_control=check_convergence)
    if ph.M != op.M:
        raise SizeMismatchError("data and operator sizes disagree")
    rngs = [RngStream(cfg.seed, j) for j in range(cfg.n_chains)]
    state = initial_states(ph, op, cfg, rngs)

    n_s = cfg.batch_length
    state, kept = _advance(state, ph, op, cfg, rngs, 2 * n_s, keep_from=n_s)
    total = 2 * n_s
    for batch in range(1, cfg.max_batches + 1):
        store = SampleStore(op.grid, *kept, thinning=cfg.thin, n_batches=batch, total_steps=total)
        if not check_convergence:
            return store
        store.report = check_all(store, cfg.rhat_tol)
        log.info(
            "batch %d: n_s=%d rhat_max=%.4g failing=%d",
            batch, total // 2, store.report.max_rhat, store.report.failing.size,
        )
        if store.report.passed or batch == cfg.max_batches:
            store.converged = store.report.passed
            return store
        state, kept = _advance(state, ph, op, cfg, rngs, total, keep_from=0)
        total *= 2
    raise AssertionError("unreachable")
