"""Periodic-grid field containers, spectral transforms, and differential operators.

Conventions, fixed once and used everywhere in this package:

* the domain is the torus [0, L)^3 sampled at n points per axis, with
  x = (i, j, k) * (L/n) and C-order (i, j, k) array layout;
* forward transforms are unnormalized and inverse transforms divide by n^3
  (the numpy/scipy default), so the discrete Parseval identity reads
  sum_x |f(x)|^2 = (1/n^3) sum_k |f_hat(k)|^2;
* wavevectors are physical, k = (2*pi/L) * m for integer triples m, and real
  fields are stored as half spectra with m3 in [0, n/2] (rfft layout), which
  makes Hermitian symmetry structural rather than an invariant to police;
* odd-derivative operators (curl, divergence, Biot-Savart) use wavevector
  arrays whose Nyquist planes are zeroed, since the grid cannot represent
  the derivative of a Nyquist mode.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as _fft

logger = logging.getLogger(__name__)

_WORKERS = os.cpu_count() or 1


def _tune_allocator():
    """Raise glibc's mmap/trim thresholds so the multi-MB stage buffers are
    recycled from the heap instead of being mmap'd and unmapped every call
    (the map/unmap churn costs more than the transforms at 64^3)."""
    try:
        import ctypes

        libc = ctypes.CDLL("libc.so.6")
        libc.mallopt(-3, 256 * 1024 * 1024)  # M_MMAP_THRESHOLD
        libc.mallopt(-1, 256 * 1024 * 1024)  # M_TRIM_THRESHOLD
    except Exception:  # non-glibc platforms: harmless to skip
        pass


_tune_allocator()

# Relative mean-mode amplitude above which biot_savart logs that it projected.
_MEAN_MODE_TOL = 1e-13


def rfft3(a: np.ndarray) -> np.ndarray:
    """Real-to-complex 3D transform over the last three axes (batched)."""
    return _fft.rfftn(a, axes=(-3, -2, -1), workers=_WORKERS)


def irfft3(a: np.ndarray, n: int) -> np.ndarray:
    """Complex-to-real inverse of :func:`rfft3` onto an n^3 grid."""
    return _fft.irfftn(a, s=(n, n, n), axes=(-3, -2, -1), workers=_WORKERS)


class Grid:
    """Cubic periodic grid: n samples per axis on the torus [0, L)^3."""

    def __init__(self, n: int, L: float):
        n = int(n)
        if n < 4 or n % 2 != 0:
            raise ValueError(f"grid resolution must be even and >= 4, got n={n}")
        L = float(L)
        if not (L > 0.0) or not math.isfinite(L):
            raise ValueError(f"box length must be positive and finite, got L={L}")
        self.n = n
        self.L = L

    @property
    def spacing(self) -> float:
        return self.L / self.n

    @property
    def half(self) -> int:
        """Number of modes stored along the last (rfft) axis."""
        return self.n // 2 + 1

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and (self.n, self.L) == (other.n, other.L)

    def __hash__(self) -> int:
        return hash((self.n, self.L))

    def __repr__(self) -> str:
        return f"Grid(n={self.n}, L={self.L!r})"

    # -- integer mode numbers, broadcastable to the (n, n, n//2+1) half layout

    @cached_property
    def _modes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        m = np.fft.fftfreq(n, d=1.0 / n)
        mh = np.fft.rfftfreq(n, d=1.0 / n)
        return (
            m.reshape(n, 1, 1),
            m.reshape(1, n, 1),
            mh.reshape(1, 1, self.half),
        )

    @cached_property
    def k_grad(self) -> np.ndarray:
        """(3, n, n, n//2+1) wavevector array for derivatives, Nyquist zeroed."""
        m1, m2, m3 = self._modes
        nyq = self.n // 2
        d1 = np.where(np.abs(m1) == nyq, 0.0, m1)
        d2 = np.where(np.abs(m2) == nyq, 0.0, m2)
        d3 = np.where(np.abs(m3) == nyq, 0.0, m3)
        scale = 2.0 * np.pi / self.L
        k = np.empty((3, self.n, self.n, self.half))
        k[0], k[1], k[2] = np.broadcast_arrays(scale * d1, scale * d2, scale * d3)
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        """True squared wavevector magnitude |k|^2 (Nyquist included)."""
        m1, m2, m3 = self._modes
        scale = (2.0 * np.pi / self.L) ** 2
        return scale * (m1 * m1 + m2 * m2 + m3 * m3)

    @cached_property
    def k2_grad(self) -> np.ndarray:
        k = self.k_grad
        return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]

    @cached_property
    def inv_k2_grad(self) -> np.ndarray:
        """1/|k|^2 with zeros on the modes where the gradient vanishes."""
        k2 = self.k2_grad
        out = np.zeros_like(k2)
        np.divide(1.0, k2, out=out, where=k2 > 0)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule support: keep modes with every |m_i| <= n/3."""
        m1, m2, m3 = self._modes
        cut = self.n / 3.0
        return (np.abs(m1) <= cut) & (np.abs(m2) <= cut) & (np.abs(m3) <= cut)

    @cached_property
    def mode_weights(self) -> np.ndarray:
        """Multiplicity of each stored half-spectrum mode in the full spectrum."""
        w = np.full((self.n, self.n, self.half), 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        return w

    def coordinates(self) -> np.ndarray:
        """(3, n, n, n) sample coordinates, x = index * spacing."""
        ax = np.arange(self.n) * self.spacing
        x, y, z = np.meshgrid(ax, ax, ax, indexing="ij")
        return np.stack([x, y, z])


def _as_field_array(data, shape) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"field data has shape {arr.shape}, expected {shape}")
    if not np.isfinite(arr).all():
        raise ValueError("field data contains non-finite samples")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real scalar samples on a grid, immutable after construction."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        object.__setattr__(self, "data", _as_field_array(self.data, (n, n, n)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Real 3-component samples on a grid, immutable after construction."""

    grid: Grid
    data: np.ndarray  # (3, n, n, n)

    def __post_init__(self):
        n = self.grid.n
        object.__setattr__(self, "data", _as_field_array(self.data, (3, n, n, n)))

    def component(self, axis: int) -> np.ndarray:
        """Component samples for axis in {0, 1, 2}."""
        return self.data[axis]


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """Half-spectrum Fourier coefficients of a real 3-component field.

    Stores modes for m3 in [0, n/2]; coefficients at negative m3 are implied
    by conjugate symmetry and can be queried through :meth:`mode`.
    """

    grid: Grid
    modes: np.ndarray  # (3, n, n, n//2+1) complex128

    def __post_init__(self):
        arr = np.ascontiguousarray(self.modes, dtype=np.complex128)
        n, h = self.grid.n, self.grid.half
        if arr.shape != (3, n, n, h):
            raise ValueError(f"spectral data has shape {arr.shape}, expected {(3, n, n, h)}")
        if not np.isfinite(arr.view(np.float64)).all():
            raise ValueError("spectral data contains non-finite coefficients")
        arr.flags.writeable = False
        object.__setattr__(self, "modes", arr)

    def mode(self, m1: int, m2: int, m3: int) -> np.ndarray:
        """Unnormalized coefficient u_hat at integer wavevector (m1, m2, m3)."""
        n = self.grid.n
        for m in (m1, m2, m3):
            if abs(m) > n // 2:
                raise ValueError(f"mode {m} outside resolved range [-{n // 2}, {n // 2}]")
        if m3 < 0:
            return np.conj(self.mode(-m1, -m2, -m3))
        return self.modes[:, m1 % n, m2 % n, m3].copy()


def fft_forward(f: VectorField) -> SpectralVectorField:
    """Forward transform of a real vector field (unnormalized coefficients)."""
    return SpectralVectorField(f.grid, rfft3(f.data))


def fft_inverse(F: SpectralVectorField) -> VectorField:
    """Inverse transform back to real samples (divides by n^3)."""
    return VectorField(F.grid, irfft3(F.modes, F.grid.n))


def _curl_into(grid: Grid, u_hat: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Spectral curl i*k x u_hat into a preallocated buffer (hot path)."""
    k = grid.k_grad
    np.multiply(k[1], u_hat[2], out=out[0])
    out[0] -= k[2] * u_hat[1]
    np.multiply(k[2], u_hat[0], out=out[1])
    out[1] -= k[0] * u_hat[2]
    np.multiply(k[0], u_hat[1], out=out[2])
    out[2] -= k[1] * u_hat[0]
    out *= 1j
    return out


def _curl_hat(grid: Grid, u_hat: np.ndarray) -> np.ndarray:
    """Spectral curl i*k x u_hat with Nyquist-zeroed wavevectors."""
    return _curl_into(grid, u_hat, np.empty_like(np.asarray(u_hat, dtype=np.complex128)))


def project_inplace(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    """In-place Leray projection I - k k^T/|k|^2 (mean mode untouched)."""
    k = grid.k_grad
    div = k[0] * f_hat[0]
    div += k[1] * f_hat[1]
    div += k[2] * f_hat[2]
    div *= grid.inv_k2_grad
    f_hat[0] -= k[0] * div
    f_hat[1] -= k[1] * div
    f_hat[2] -= k[2] * div
    return f_hat


def solenoidal_project(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    """Leray projection I - k k^T/|k|^2, mode by mode (mean mode untouched)."""
    return project_inplace(grid, np.array(f_hat, dtype=np.complex128))


def curl(u: VectorField) -> VectorField:
    """Vorticity of a velocity field, computed spectrally.

    The result has exactly zero mean in every component (the k = 0 mode of
    i*k x u_hat vanishes identically).
    """
    u_hat = rfft3(u.data)
    return VectorField(u.grid, irfft3(_curl_hat(u.grid, u_hat), u.grid.n))


def biot_savart(w: VectorField) -> VectorField:
    """Velocity with the given curl: u_hat = i k x w_hat / |k|^2, mean zero.

    A nonzero mean mode in the input is projected to zero (a curl always has
    zero mean analytically); when the projected amplitude is non-negligible
    this is logged, as required by the operator's contract.
    """
    grid = w.grid
    w_hat = np.array(rfft3(w.data))
    mean_amp = float(np.max(np.abs(w_hat[:, 0, 0, 0]))) / grid.n**3
    scale = max(max_norm(w), np.finfo(float).tiny)
    if mean_amp > _MEAN_MODE_TOL * scale:
        logger.warning(
            "biot_savart: projecting nonzero mean mode (amplitude %.3e, relative %.3e)",
            mean_amp,
            mean_amp / scale,
        )
    w_hat[:, 0, 0, 0] = 0.0
    u_hat = _curl_hat(grid, w_hat) * grid.inv_k2_grad
    return VectorField(grid, irfft3(u_hat, grid.n))


def max_norm(f: VectorField | ScalarField) -> float:
    """Sup norm with the component-max convention: max_x max_i |f_i(x)|.

    Single source of truth for |v| = max{|a|, |b|, |c|}; every consumer of a
    sup norm in this package routes through here.
    """
    return float(np.max(np.abs(f.data)))


def l2_norm(f: VectorField | ScalarField) -> float:
    """Discrete L2 norm with volume weight spacing^3 (all components summed)."""
    return float(math.sqrt(np.sum(np.square(f.data)) * f.grid.spacing**3))


def spectral_l2(F: SpectralVectorField) -> float:
    """L2 norm evaluated from the half spectrum (Parseval-consistent)."""
    grid = F.grid
    power = np.sum(grid.mode_weights * (F.modes.real**2 + F.modes.imag**2))
    return float(math.sqrt(power * grid.spacing**3 / grid.n**3))


def divergence_inf(F: SpectralVectorField) -> float:
    """Max modulus of the spectral divergence, in physical amplitude units.

    Returns max_k |k . u_hat_k| / n^3, directly comparable to max_norm(u).
    """
    grid = F.grid
    k = grid.k_grad
    div = k[0] * F.modes[0] + k[1] * F.modes[1] + k[2] * F.modes[2]
    return float(np.max(np.abs(div))) / grid.n**3
