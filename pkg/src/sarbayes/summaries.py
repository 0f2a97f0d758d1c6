"""Posterior summaries: mean and variance images, dB maps, PGM export, beta histogram."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import atomic_write_bytes
from .nufft import GridSpec

DB_FLOOR = -60.0


class SummaryError(ValueError):
    pass


@dataclass
class PosteriorSummary:
    grid: GridSpec
    mean_f: np.ndarray
    var_f: np.ndarray
    mean_alpha: np.ndarray
    beta_samples: np.ndarray
    sample_count: int

    @property
    def mean_inv_alpha(self) -> np.ndarray:
        """Elementwise reciprocal of the alpha mean, the speckle-parameter estimate."""
        return 1.0 / self.mean_alpha


@dataclass
class DbImage:
    grid: GridSpec
    values: np.ndarray


def summarize(store) -> PosteriorSummary:
    """Pool all chains and compute per-pixel sample statistics.

    The variance of the complex samples is ``sum |f_s - mean|^2 / (S - 1)``.
    """
    S = store.n_samples
    if S < 2:
        raise SummaryError(f"need at least two samples for a variance, got {S}")
    N = store.grid.N
    f = store.f.reshape(S, N)
    mean_f = f.mean(axis=0)
    var_f = np.sum(np.abs(f - mean_f) ** 2, axis=0) / (S - 1)
    return PosteriorSummary(
        grid=store.grid,
        mean_f=mean_f,
        var_f=var_f,
        mean_alpha=store.alpha.reshape(S, N).mean(axis=0),
        beta_samples=store.beta.reshape(S).copy(),
        sample_count=S,
    )


def to_db(f, floor_db: float = DB_FLOOR, grid: GridSpec | None = None, ref: float | None = None) -> DbImage:
    """``clamp(20 log10(|f| / max|f|), floor_db, 0)``.

    ``ref`` overrides ``max|f|`` (used to normalize movie frames globally).
    An all-zero image maps to ``floor_db`` everywhere.
    """
    mag = np.abs(np.asarray(f)).ravel()
    ref = float(mag.max()) if ref is None else float(ref)
    if grid is None:
        grid = GridSpec(mag.size, 1)
    if ref <= 0:
        return DbImage(grid, np.full(mag.size, float(floor_db)))
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / ref)
    return DbImage(grid, np.clip(db, floor_db, 0.0))


def variance_db(var_f, grid: GridSpec, floor_db: float = DB_FLOOR) -> DbImage:
    """dB map of a variance image, ``10 log10(var / max var)``."""
    return to_db(np.sqrt(np.asarray(var_f, dtype=float)), floor_db, grid)


def gray_levels(db: DbImage, floor_db: float = DB_FLOOR) -> np.ndarray:
    """Map ``[floor_db, 0]`` affinely onto ``0..255``, rounding half away from zero."""
    x = (np.asarray(db.values) - floor_db) / (-floor_db) * 255.0
    # Values are nonnegative, so half-away-from-zero is floor(x + 0.5).
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def pgm_bytes(db: DbImage, floor_db: float = DB_FLOOR) -> bytes:
    header = f"P5\n{db.grid.nx} {db.grid.ny}\n255\n".encode("ascii")
    return header + gray_levels(db, floor_db).tobytes()


def write_pgm(path, db: DbImage, floor_db: float = DB_FLOOR):
    atomic_write_bytes(path, pgm_bytes(db, floor_db))


def read_pgm(path) -> np.ndarray:
    """Read a binary P5 graymap written by :func:`write_pgm` into ``(ny, nx)``."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a P5 graymap")
    nx, ny = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(ny, nx)


def export_movie_frames(store, directory) -> list:
    """Write one dB-mapped PGM per retained sample, chain-major.

    All frames share the global ``max|f|`` over the whole store so that
    gray levels are comparable from frame to frame.
    """
    if store.n_samples < 1:
        raise SummaryError("empty sample store")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise PermissionError(f"cannot write frames to {directory}")
    ref = float(np.abs(store.f).max())
    paths = []
    k = 0
    for j in range(store.n_chains):
        for s in range(store.retained_per_chain):
            p = directory / f"frame_{k:06d}.pgm"
            write_pgm(p, to_db(store.f[j, s], grid=store.grid, ref=ref))
            paths.append(p)
            k += 1
    return paths


def beta_histogram(beta_samples, bins: int = 30):
    """Equal-width histogram over ``[min, max]`` of the samples."""
    b = np.asarray(beta_samples, dtype=float).ravel()
    if b.size < 1 or bins < 1:
        raise SummaryError("histogram needs at least one sample and one bin")
    lo, hi = float(b.min()), float(b.max())
    if lo == hi:
        # numpy would widen a degenerate range; keep the occupied bin at the sample value.
        edges = np.linspace(lo, lo + 1.0, bins + 1) if bins > 1 else np.array([lo, lo + 1.0])
        counts = np.zeros(bins, dtype=np.int64)
        counts[0] = b.size
        return edges, counts
    counts, edges = np.histogram(b, bins=bins, range=(lo, hi))
    return edges, counts
