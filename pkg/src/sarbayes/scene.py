"""Synthetic reflectivity scenes and phase-history synthesis."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import ParameterError, RngStream, draw_complex_gaussian
from .nufft import FourierCoords, GridSpec, NufftOperator, SizeMismatchError


class SceneSpecError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ReflectivityImage:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        if v.size != self.grid.N:
            raise SizeMismatchError(f"image has {v.size} values, grid needs {self.grid.N}")
        if not np.all(np.isfinite(v)):
            raise ValueError("image values must be finite")
        object.__setattr__(self, "values", v)

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)


@dataclass(frozen=True, eq=False)
class PhaseHistory:
    coords: FourierCoords
    data: np.ndarray
    noise_beta_true: Optional[float] = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex).ravel()
        if d.size != self.coords.M:
            raise SizeMismatchError(f"{d.size} data values for {self.coords.M} coordinates")
        object.__setattr__(self, "data", d)

    @property
    def M(self) -> int:
        return self.coords.M


@dataclass
class SceneSpec:
    """Point targets over a uniform fully-developed speckle background.

    ``targets`` holds ``(pixel_index, amplitude)`` pairs. With
    ``phase_model="uniform-random"`` only the magnitude of each amplitude is
    kept and a random phase is drawn; ``"zero"`` uses the amplitude as given.
    """

    grid: GridSpec
    targets: list = field(default_factory=list)
    background_alpha: float = 1e4
    phase_model: str = "uniform-random"

    def validate(self):
        idx = [int(i) for i, _ in self.targets]
        if len(set(idx)) != len(idx):
            raise SceneSpecError("target indices must be distinct")
        if any(i < 0 or i >= self.grid.N for i in idx):
            raise SceneSpecError(f"target index out of range [0, {self.grid.N})")
        if not self.background_alpha > 0:
            raise SceneSpecError("background_alpha must be positive")
        if self.phase_model not in ("uniform-random", "zero"):
            raise SceneSpecError(f"unknown phase model {self.phase_model!r}")


def random_targets(grid: GridSpec, n: int, rng: RngStream, amplitude: float = 1.0) -> list:
    """``n`` distinct random pixels, each with the given amplitude."""
    if n > grid.N:
        raise SceneSpecError("more targets than pixels")
    idx = np.sort(rng.generator.choice(grid.N, size=n, replace=False))
    return [(int(i), complex(amplitude)) for i in idx]


def generate_scene(spec: SceneSpec, rng: RngStream) -> ReflectivityImage:
    spec.validate()
    f = draw_complex_gaussian(rng, spec.grid.N, 1.0 / spec.background_alpha)
    for i, amp in spec.targets:
        if spec.phase_model == "uniform-random":
            f[i] = abs(amp) * np.exp(2j * np.pi * rng.generator.random())
        else:
            f[i] = amp
    return ReflectivityImage(spec.grid, f)


def synthesize(scene: ReflectivityImage, op: NufftOperator, beta: float, rng: RngStream) -> PhaseHistory:
    """Phase history ``F f + n`` with ``n_i ~ CN(0, 1/beta)``.

    ``beta = inf`` gives noiseless data.
    """
    if scene.grid != op.grid:
        raise SizeMismatchError("scene grid does not match operator grid")
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    data = op.forward(scene.values)
    if np.isfinite(beta):
        data = data + draw_complex_gaussian(rng, op.M, 1.0 / beta)
    return PhaseHistory(op.coords, data, noise_beta_true=float(beta))
