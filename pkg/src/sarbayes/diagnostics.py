"""Multi-chain convergence diagnostics (potential scale reduction, R-hat).

Every function here takes chains as an array of shape ``(n_r, n_s)`` for a
single scalar, or ``(n_r, n_s, P)`` for ``P`` scalars at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = float(np.finfo(float).eps)


class ProtocolError(ValueError):
    """Raised when a diagnostic is asked of fewer than two chains or samples."""


def _as_chains(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim not in (2, 3):
        raise ProtocolError(f"chains must be (n_r, n_s) or (n_r, n_s, P), got shape {c.shape}")
    n_r, n_s = c.shape[:2]
    if n_r < 2:
        raise ProtocolError("R-hat needs at least two chains")
    if n_s < 2:
        raise ProtocolError("R-hat needs at least two samples per chain")
    return c


def between_variance(c) -> np.ndarray | float:
    """``B = n_s / (n_r - 1) * sum_j (mean_j - grand_mean)^2``."""
    c = _as_chains(c)
    n_r, n_s = c.shape[:2]
    means = c.mean(axis=1)
    return n_s / (n_r - 1) * np.sum((means - means.mean(axis=0)) ** 2, axis=0)


def within_variance(c) -> np.ndarray | float:
    """Average of the unbiased per-chain variances."""
    c = _as_chains(c)
    return np.var(c, axis=1, ddof=1).mean(axis=0)


def _rhat_parts(c):
    c = _as_chains(c)
    n_s = c.shape[1]
    B = between_variance(c)
    W = within_variance(c)
    var_plus = (n_s - 1) / n_s * W + B / n_s
    # Rounding leaves constant chains with W ~ (eps * scale)^2 rather than 0.
    scale = np.max(np.abs(c), axis=(0, 1))
    zero_tol = (64 * EPS * scale) ** 2
    w_zero = W <= zero_tol
    b_zero = B <= zero_tol * n_s
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(var_plus / W)
    r = np.where(w_zero & b_zero, np.nan, np.where(w_zero, np.inf, r))
    return r, w_zero


def rhat(c):
    """Potential scale reduction ``sqrt(var_plus / W)``.

    Degenerate scalars with ``W = 0`` return ``inf`` when the chains sit at
    different constants (a failure) and ``nan`` when every sample is the
    same constant (treated as converged by :func:`check_all`).
    """
    r, _ = _rhat_parts(c)
    return float(r) if np.ndim(r) == 0 else r


@dataclass
class RhatReport:
    values: np.ndarray
    tolerance: float
    n_degenerate: int

    @property
    def max_rhat(self) -> float:
        finite = self.values[~np.isnan(self.values)]
        return float(finite.max()) if finite.size else float("nan")

    @property
    def failing(self) -> np.ndarray:
        """Indices of monitored scalars that have not converged."""
        return np.flatnonzero(~(np.isnan(self.values) | (self.values < self.tolerance)))

    @property
    def passed(self) -> bool:
        return self.failing.size == 0

    def summary(self) -> str:
        return (
            f"rhat_max={self.max_rhat:.6g}\n"
            f"rhat_tol={self.tolerance:g}\n"
            f"n_scalars={self.values.size}\n"
            f"n_failing={self.failing.size}\n"
            f"n_degenerate={self.n_degenerate}\n"
            f"passed={str(self.passed).lower()}\n"
        )


def monitored_scalars(f, alpha, beta) -> np.ndarray:
    """Stack ``Re f, Im f, alpha, beta`` along the last axis.

    For inputs with leading axes ``(n_r, n_s)`` the result is
    ``(n_r, n_s, 3N + 1)``.
    """
    f = np.asarray(f)
    return np.concatenate(
        [f.real, f.imag, np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)[..., None]],
        axis=-1,
    )


def rhat_scalars(chains, tol: float = 1.1, chunk: int = 4096) -> RhatReport:
    """R-hat report for an ``(n_r, n_s, P)`` array of monitored scalars."""
    chains = _as_chains(chains)
    if chains.ndim == 2:
        chains = chains[..., None]
    P = chains.shape[2]
    values = np.empty(P)
    n_deg = 0
    for lo in range(0, P, chunk):
        r, deg = _rhat_parts(chains[:, :, lo:lo + chunk])
        values[lo:lo + chunk] = r
        n_deg += int(np.sum(deg))
    return RhatReport(values, tol, n_deg)


def check_all(store, tol: float = 1.1) -> RhatReport:
    """R-hat for every monitored scalar of a sample store.

    The scalars are ordered ``Re f`` (N), ``Im f`` (N), ``alpha`` (N),
    ``beta`` (1).
    """
    if store.n_chains < 2:
        raise ProtocolError("convergence check needs at least two chains")
    if store.retained_per_chain < 2:
        raise ProtocolError("convergence check needs at least two retained samples per chain")
    # Same result as rhat_scalars(monitored_scalars(...)) without the concatenated copy.
    parts = [
        rhat_scalars(x, tol)
        for x in (store.f.real, store.f.imag, store.alpha, store.beta[..., None])
    ]
    return RhatReport(
        np.concatenate([p.values for p in parts]), tol, sum(p.n_degenerate for p in parts)
    )
