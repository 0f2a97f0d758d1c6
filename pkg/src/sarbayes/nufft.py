"""Two-dimensional non-uniform DFT applied through Kaiser-Bessel gridding.

Images are stored as flat vectors of length ``N = nx * ny`` in row-major
order of an ``(ny, nx)`` array, so pixel ``(jx, jy)`` lives at index
``jy * nx + jx``. Frequencies are in cycles per pixel, restricted to
``[-1/2, 1/2)``, and the forward kernel is ``exp(-2 pi i (kx jx + ky jy))``
scaled by ``1 / sqrt(N)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import i0

OVERSAMPLING = 2.0
KERNEL_WIDTH = 13


class SizeMismatchError(ValueError):
    """Raised when a vector does not match the operator dimensions."""


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("grid dimensions must be integers")
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.nx}x{self.ny}")

    @property
    def N(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape ``(ny, nx)`` of the image."""
        return (self.ny, self.nx)


@dataclass(frozen=True, eq=False)
class FourierCoords:
    """``M`` frequency pairs ``(kx, ky)`` in cycles per pixel."""

    coords: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.coords, dtype=float)
        if k.ndim != 2 or k.shape[1] != 2:
            raise ValueError("coords must have shape (M, 2)")
        if k.shape[0] < 1:
            raise ValueError("need at least one coordinate")
        if not np.all(np.isfinite(k)):
            raise ValueError("coords must be finite")
        if np.any(k < -0.5) or np.any(k >= 0.5):
            raise ValueError("every coordinate must lie in [-1/2, 1/2)")
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "coords", k)

    @property
    def M(self) -> int:
        return self.coords.shape[0]

    @property
    def kx(self) -> np.ndarray:
        return self.coords[:, 0]

    @property
    def ky(self) -> np.ndarray:
        return self.coords[:, 1]

    @classmethod
    def uniform(cls, grid: GridSpec) -> "FourierCoords":
        """The full uniform DFT frequency set (``M = N``), row-major like images."""
        mx = np.arange(-(grid.nx // 2), grid.nx - grid.nx // 2) / grid.nx
        my = np.arange(-(grid.ny // 2), grid.ny - grid.ny // 2) / grid.ny
        ky, kx = np.meshgrid(my, mx, indexing="ij")
        return cls(np.column_stack([kx.ravel(), ky.ravel()]))

    @classmethod
    def random(cls, M: int, rng: np.random.Generator) -> "FourierCoords":
        return cls(rng.uniform(-0.5, 0.5, size=(M, 2)))


def kb_beta(width: int = KERNEL_WIDTH) -> float:
    # Fessler-Sutton min-max tuned shape for oversampling 2.
    return 2.34 * width


def kb_kernel(x, width: float, beta: float):
    """Kaiser-Bessel kernel on ``|x| <= width / 2``, zero outside."""
    x = np.asarray(x, dtype=float)
    t = 1.0 - (2.0 * x / width) ** 2
    out = np.zeros_like(x)
    inside = t >= 0
    out[inside] = i0(beta * np.sqrt(t[inside])) / i0(beta)
    return out


def kb_transform(xi, width: float, beta: float):
    """Continuous Fourier transform of :func:`kb_kernel` at frequency ``xi``."""
    xi = np.asarray(xi, dtype=float)
    z2 = beta**2 - (np.pi * width * xi) ** 2
    out = np.empty_like(xi)
    pos = z2 > 0
    z = np.sqrt(z2[pos])
    out[pos] = width * np.sinh(z) / z
    z = np.sqrt(-z2[~pos])
    out[~pos] = width * np.sinc(z / np.pi)
    return out / i0(beta)


def _axis_weights(k, K, width, beta):
    """Interpolation weights and fine-grid indices along one axis.

    Returns ``(idx, w)`` each of shape ``(M, width)``.
    """
    u = k * K
    base = np.round(u).astype(np.int64) - width // 2
    offs = np.arange(width)
    idx = base[:, None] + offs[None, :]
    w = kb_kernel(u[:, None] - idx, width, beta)
    return np.mod(idx, K), w


@dataclass(frozen=True, eq=False)
class NufftOperator:
    """The measurement operator ``F`` mapping images to phase-history samples.

    The interpolation stage is held as a sparse matrix, so the adjoint is
    its conjugate transpose followed by the transposed FFT and the same
    real deapodization. Forward and adjoint are therefore exact adjoints
    of each other up to rounding.
    """

    grid: GridSpec
    coords: FourierCoords
    oversampling: float = OVERSAMPLING
    kernel_width: int = KERNEL_WIDTH
    _interp: sp.csr_matrix = field(init=False, repr=False)
    _interp_h: sp.csr_matrix = field(init=False, repr=False)
    _deapod: np.ndarray = field(init=False, repr=False)
    _fine: tuple = field(init=False, repr=False)
    _center: tuple = field(init=False, repr=False)

    def __post_init__(self):
        g, W = self.grid, self.kernel_width
        beta = kb_beta(W)
        Kx = int(round(self.oversampling * g.nx))
        Ky = int(round(self.oversampling * g.ny))
        cx, cy = g.nx // 2, g.ny // 2
        kx, ky = self.coords.kx, self.coords.ky

        # On grids narrower than the kernel the support wraps; duplicates are summed,
        # which is exactly the periodized kernel.
        ix, wx = _axis_weights(kx, Kx, W, beta)
        iy, wy = _axis_weights(ky, Ky, W, beta)
        M = self.coords.M
        # Centering shift: the FFT works on indices in [-n/2, n/2).
        phase = np.exp(-2j * np.pi * (kx * cx + ky * cy)) / np.sqrt(g.N)
        vals = (wy[:, :, None] * wx[:, None, :]) * phase[:, None, None]
        cols = iy[:, :, None] * Kx + ix[:, None, :]
        rows = np.broadcast_to(np.arange(M)[:, None, None], cols.shape)
        S = sp.coo_matrix(
            (vals.ravel(), (rows.ravel(), cols.ravel())), shape=(M, Kx * Ky)
        ).tocsr()
        S.sum_duplicates()

        jx = np.arange(g.nx) - cx
        jy = np.arange(g.ny) - cy
        px = kb_transform(jx / Kx, W, beta)
        py = kb_transform(jy / Ky, W, beta)
        deapod = 1.0 / (py[:, None] * px[None, :])

        object.__setattr__(self, "_interp", S)
        object.__setattr__(self, "_interp_h", S.conj().T.tocsr())
        object.__setattr__(self, "_deapod", deapod)
        object.__setattr__(self, "_fine", (Ky, Kx))
        object.__setattr__(self, "_center", (cy, cx))

    @property
    def M(self) -> int:
        return self.coords.M

    @property
    def N(self) -> int:
        return self.grid.N

    def forward(self, f: np.ndarray) -> np.ndarray:
        """Apply ``F``. Accepts ``(N,)`` or a batch ``(B, N)``."""
        f = np.asarray(f)
        if f.shape[-1] != self.N or f.ndim > 2:
            raise SizeMismatchError(f"expected image of length {self.N}, got shape {f.shape}")
        batch = f.shape[:-1]
        ny, nx = self.grid.shape
        Ky, Kx = self._fine
        cy, cx = self._center
        img = f.reshape(batch + (ny, nx)) * self._deapod
        fine = np.zeros(batch + (Ky, Kx), dtype=complex)
        # Index j' = j - c sits at fine position j' mod K.
        fine[..., np.mod(np.arange(ny) - cy, Ky)[:, None], np.mod(np.arange(nx) - cx, Kx)[None, :]] = img
        G = np.fft.fft2(fine).reshape(batch + (Ky * Kx,))
        if batch:
            return np.asarray((self._interp @ G.T).T)
        return self._interp @ G

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        """Apply ``F^H``. Accepts ``(M,)`` or a batch ``(B, M)``."""
        g = np.asarray(g)
        if g.shape[-1] != self.M or g.ndim > 2:
            raise SizeMismatchError(f"expected data of length {self.M}, got shape {g.shape}")
        batch = g.shape[:-1]
        ny, nx = self.grid.shape
        Ky, Kx = self._fine
        cy, cx = self._center
        if batch:
            G = np.asarray((self._interp_h @ g.T).T)
        else:
            G = self._interp_h @ g
        fine = np.fft.ifft2(G.reshape(batch + (Ky, Kx))) * (Ky * Kx)
        img = fine[..., np.mod(np.arange(ny) - cy, Ky)[:, None], np.mod(np.arange(nx) - cx, Kx)[None, :]]
        return (img * self._deapod).reshape(batch + (self.N,))

    __call__ = forward


def _check_image(grid: GridSpec, f):
    f = np.asarray(f)
    if f.shape[-1] != grid.N:
        raise SizeMismatchError(f"expected image of length {grid.N}, got shape {f.shape}")
    return f


def dft_matrix(grid: GridSpec, coords: FourierCoords) -> np.ndarray:
    """Dense ``M x N`` non-uniform DFT matrix with unitary-style scaling."""
    jy, jx = np.divmod(np.arange(grid.N), grid.nx)
    arg = np.outer(coords.kx, jx) + np.outer(coords.ky, jy)
    return np.exp(-2j * np.pi * arg) / np.sqrt(grid.N)


def direct_dft(grid: GridSpec, coords: FourierCoords, f: np.ndarray) -> np.ndarray:
    """O(MN) direct evaluation of the forward transform."""
    f = _check_image(grid, f)
    return f @ dft_matrix(grid, coords).T


def direct_adjoint(grid: GridSpec, coords: FourierCoords, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g)
    if g.shape[-1] != coords.M:
        raise SizeMismatchError(f"expected data of length {coords.M}, got shape {g.shape}")
    return g @ dft_matrix(grid, coords).conj()


def inner(x, y) -> complex:
    """``<x, y> = y^H x`` summed over the last axis."""
    return np.sum(x * np.conj(y), axis=-1)


class MatrixOperator:
    """Dense explicit operator with the same interface as :class:`NufftOperator`.

    Meant for tiny problems, such as ``F = [1]``, where an exact matrix is
    wanted instead of a gridded approximation.
    """

    def __init__(self, grid: GridSpec, matrix, coords: FourierCoords | None = None):
        A = np.asarray(matrix, dtype=complex)
        if A.ndim != 2 or A.shape[1] != grid.N:
            raise SizeMismatchError(f"matrix must have {grid.N} columns, got shape {A.shape}")
        self.grid = grid
        self.matrix = A
        self.coords = coords if coords is not None else FourierCoords(np.zeros((A.shape[0], 2)))
        if self.coords.M != A.shape[0]:
            raise SizeMismatchError("coords and matrix rows disagree")

    @property
    def M(self) -> int:
        return self.matrix.shape[0]

    @property
    def N(self) -> int:
        return self.grid.N

    def forward(self, f):
        f = np.asarray(f)
        if f.shape[-1] != self.N or f.ndim > 2:
            raise SizeMismatchError(f"expected image of length {self.N}, got shape {f.shape}")
        return f @ self.matrix.T

    def adjoint(self, g):
        g = np.asarray(g)
        if g.shape[-1] != self.M or g.ndim > 2:
            raise SizeMismatchError(f"expected data of length {self.M}, got shape {g.shape}")
        return g @ self.matrix.conj()

    __call__ = forward
