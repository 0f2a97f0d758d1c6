"""Comparison reconstructions: inverse-NUFFT least squares and l1 via ISTA."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nufft import NufftOperator, SizeMismatchError
from .scene import PhaseHistory, ReflectivityImage


class StepSizeError(RuntimeError):
    pass


@dataclass
class L1Config:
    lam: float
    step: float | None = None  # None: 1 / ||F||^2 from power iteration
    max_iters: int = 500
    rel_tol: float = 1e-8
    # Allowed relative objective increase before ISTA is declared divergent.
    monotone_tol: float = 1e-12

    def validate(self):
        if not self.lam >= 0:
            raise ValueError("lambda must be nonnegative")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if self.max_iters < 1 or not self.rel_tol > 0:
            raise ValueError("max_iters and rel_tol must be positive")


def ml_image(ph: PhaseHistory, op: NufftOperator) -> ReflectivityImage:
    """Adjoint image ``F^H data``, the least-squares solution when ``F`` is unitary."""
    if ph.M != op.M:
        raise SizeMismatchError("data and operator sizes disagree")
    return ReflectivityImage(op.grid, op.adjoint(ph.data))


def soft_threshold(z, t):
    """Complex shrinkage ``z * max(1 - t/|z|, 0)``; zero stays zero."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be nonnegative")
    mag = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > 0, np.maximum(1.0 - t / mag, 0.0), 0.0)
    out = z * scale
    return out if out.ndim else complex(out)


def spectral_norm_sq(op, n_iter: int = 100, seed: int = 0) -> float:
    """Power-iteration estimate of ``||F^H F||``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.N) + 1j * rng.standard_normal(op.N)
    lam = 0.0
    for _ in range(n_iter):
        y = op.adjoint(op.forward(x))
        lam = np.linalg.norm(y)
        x = y / lam
    return float(lam)


def l1_objective(f, data, op, lam) -> float:
    r = data - op.forward(f)
    return 0.5 * float(np.vdot(r, r).real) + lam * float(np.sum(np.abs(f)))


def l1_reconstruct(ph: PhaseHistory, op: NufftOperator, cfg: L1Config, history: list | None = None) -> ReflectivityImage:
    """ISTA on ``0.5 ||data - F f||^2 + lam ||f||_1``.

    Starts from zero and stops on a small relative iterate change, or as
    soon as an update fails to lower the objective. If ``history`` is given,
    the objective of every accepted iterate (starting point included) is
    appended to it, so it is strictly decreasing.
    """
    cfg.validate()
    if ph.M != op.M:
        raise SizeMismatchError("data and operator sizes disagree")
    step = cfg.step
    L = spectral_norm_sq(op)
    if step is None:
        step = 1.0 / L
    elif step > 1.0 / L * (1 + 1e-6):
        raise StepSizeError(f"step {step:g} exceeds 1/L = {1.0 / L:g}")

    f = np.zeros(op.N, dtype=complex)
    obj = l1_objective(f, ph.data, op, cfg.lam)
    if history is not None:
        history.append(obj)
    for _ in range(cfg.max_iters):
        grad = op.adjoint(ph.data - op.forward(f))
        f_new = soft_threshold(f + step * grad, step * cfg.lam)
        new_obj = l1_objective(f_new, ph.data, op, cfg.lam)
        if new_obj > obj + cfg.monotone_tol * max(abs(obj), 1.0):
            raise StepSizeError(f"objective increased from {obj:.6g} to {new_obj:.6g}")
        if new_obj >= obj:
            # No decrease left beyond rounding: f is already the fixed point.
            break
        if history is not None:
            history.append(new_obj)
        change = np.linalg.norm(f_new - f)
        scale = max(np.linalg.norm(f_new), np.finfo(float).tiny)
        f, obj = f_new, new_obj
        if change <= cfg.rel_tol * scale:
            break
    return ReflectivityImage(op.grid, f)
