"""On-disk formats.

Phase history CSV::

    #sar-ph-v1
    M,nx,ny
    kx,ky,re,im          (M lines)

Complex image CSV::

    #sar-img-v1
    nx,ny
    re,im                (N lines, row-major over (ny, nx))

Sample store: one ``chain_XXX.bin`` per chain holding the magic
``SARSMPL1``, ``N`` and the retained count as little-endian uint64, then per
sample ``N`` complex ``f`` values (re, im interleaved), ``N`` alpha values
and one beta, all little-endian float64. A ``manifest.txt`` next to the
chain files records the grid and run provenance.
"""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .nufft import FourierCoords, GridSpec

PH_MAGIC = "#sar-ph-v1"
IMG_MAGIC = "#sar-img-v1"
STORE_MAGIC = b"SARSMPL1"
_HEADER = np.dtype([("magic", "S8"), ("N", "<u8"), ("count", "<u8")])


class FormatError(ValueError):
    pass


def atomic_write_bytes(path, payload: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def _fmt(x: float) -> str:
    # repr round-trips float64 exactly.
    return repr(float(x))


def write_phase_history(path, ph, grid: GridSpec):
    lines = [PH_MAGIC, f"{ph.M},{grid.nx},{grid.ny}"]
    for (kx, ky), d in zip(ph.coords.coords, ph.data):
        lines.append(f"{_fmt(kx)},{_fmt(ky)},{_fmt(d.real)},{_fmt(d.imag)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _read_lines(path, magic):
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e}") from e
    if not lines or lines[0].strip() != magic:
        raise FormatError(f"{path}: expected first line {magic!r}")
    return lines


def read_phase_history(path):
    """Returns ``(PhaseHistory, GridSpec)``."""
    from .scene import PhaseHistory

    lines = _read_lines(path, PH_MAGIC)
    try:
        M, nx, ny = (int(v) for v in lines[1].split(","))
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
    except (IndexError, ValueError) as e:
        raise FormatError(f"{path}: malformed phase history: {e}") from e
    if rows.shape != (M, 4):
        raise FormatError(f"{path}: header says M={M} but found {rows.shape[0]} rows")
    ph = PhaseHistory(FourierCoords(rows[:, :2]), rows[:, 2] + 1j * rows[:, 3])
    return ph, GridSpec(nx, ny)


def write_image(path, values, grid: GridSpec):
    values = np.asarray(values).ravel()
    lines = [IMG_MAGIC, f"{grid.nx},{grid.ny}"]
    lines += [f"{_fmt(v.real)},{_fmt(v.imag)}" for v in values]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_image(path):
    """Returns ``ReflectivityImage``."""
    from .scene import ReflectivityImage

    lines = _read_lines(path, IMG_MAGIC)
    try:
        nx, ny = (int(v) for v in lines[1].split(","))
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
    except (IndexError, ValueError) as e:
        raise FormatError(f"{path}: malformed image: {e}") from e
    grid = GridSpec(nx, ny)
    if rows.shape != (grid.N, 2):
        raise FormatError(f"{path}: expected {grid.N} rows of re,im")
    return ReflectivityImage(grid, rows[:, 0] + 1j * rows[:, 1])


def chain_bytes(f, alpha, beta) -> bytes:
    """Serialize one chain: ``f`` and ``alpha`` are ``(S, N)``, ``beta`` ``(S,)``."""
    S, N = f.shape
    header = np.array([(STORE_MAGIC, N, S)], dtype=_HEADER)
    body = np.empty((S, 3 * N + 1), dtype="<f8")
    body[:, 0:2 * N:2] = f.real
    body[:, 1:2 * N:2] = f.imag
    body[:, 2 * N:3 * N] = alpha
    body[:, 3 * N] = beta
    return header.tobytes() + body.tobytes()


def read_chain(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.itemsize:
        raise FormatError(f"{path}: truncated header")
    header = np.frombuffer(raw[:_HEADER.itemsize], dtype=_HEADER)[0]
    if header["magic"] != STORE_MAGIC:
        raise FormatError(f"{path}: bad magic")
    N, S = int(header["N"]), int(header["count"])
    body = np.frombuffer(raw[_HEADER.itemsize:], dtype="<f8")
    if body.size != S * (3 * N + 1):
        raise FormatError(f"{path}: expected {S} samples of {3 * N + 1} values")
    body = body.reshape(S, 3 * N + 1)
    f = body[:, 0:2 * N:2] + 1j * body[:, 1:2 * N:2]
    return f, body[:, 2 * N:3 * N].copy(), body[:, 3 * N].copy()


def format_manifest(entries: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in entries.items())


def read_manifest(path) -> dict:
    out = {}
    for ln in Path(path).read_text().splitlines():
        if "=" in ln:
            k, v = ln.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_store(directory, store, manifest: dict | None = None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for j in range(store.n_chains):
        atomic_write_bytes(directory / f"chain_{j:03d}.bin", chain_bytes(store.f[j], store.alpha[j], store.beta[j]))
    entries = {
        "nx": store.grid.nx,
        "ny": store.grid.ny,
        "chains": store.n_chains,
        "retained_per_chain": store.retained_per_chain,
        "thinning": store.thinning,
    }
    entries.update(manifest or {})
    atomic_write_text(directory / "manifest.txt", format_manifest(entries))


def read_store(directory):
    from .gibbs import SampleStore

    directory = Path(directory)
    mpath = directory / "manifest.txt"
    if not mpath.is_file():
        raise FormatError(f"{directory}: no manifest.txt")
    man = read_manifest(mpath)
    grid = GridSpec(int(man["nx"]), int(man["ny"]))
    files = sorted(directory.glob("chain_*.bin"))
    if not files:
        raise FormatError(f"{directory}: no chain files")
    chains = [read_chain(p) for p in files]
    if len({c[0].shape for c in chains}) != 1:
        raise FormatError(f"{directory}: chains have unequal retained lengths")
    f, alpha, beta = (np.stack(x) for x in zip(*chains))
    converged = man.get("converged")
    return SampleStore(
        grid, f, alpha, beta,
        thinning=int(man.get("thinning", 1)),
        converged=None if converged is None else converged == "true",
    )
