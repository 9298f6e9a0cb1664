import math

import numpy as np
import pytest

import zsparse as z
from zsparse.sparseness import _ball_indicator

TWO_PI = 2.0 * math.pi


@pytest.fixture
def grid16():
    return z.Grid(16, TWO_PI)


@pytest.fixture
def grid32():
    return z.Grid(32, TWO_PI)


def random_solenoidal(grid, seed, k_max=None, amplitude=1.0):
    """Random divergence-free mean-zero band-limited velocity field."""
    return z.init_lowfreq_noise(grid, seed, k_max or grid.n // 4, amplitude)


def brute_force_ball_fraction(mask: np.ndarray, L: float, r: float) -> np.ndarray:
    """Independent ball-fraction oracle: explicit shift-and-sum counting.

    Uses the same discrete ball stencil as the spectral path (cells whose
    centers lie within periodic Euclidean distance r), but counts by rolling
    the mask over every ball offset instead of convolving.
    """
    n = mask.shape[0]
    ball = _ball_indicator(n, L, float(r)).astype(bool)
    offsets = np.argwhere(ball)
    m = mask.astype(np.float64)
    counts = np.zeros_like(m)
    for off in offsets:
        counts += np.roll(m, shift=tuple(off), axis=(0, 1, 2))
    return counts / len(offsets)


def taylor_green_2d(grid):
    """Embedded 2D vortex pair: an exact viscous solution decaying as e^(-2 nu t)."""
    x, y, _ = grid.coordinates()
    u = np.stack([np.cos(x) * np.sin(y), -np.sin(x) * np.cos(y), np.zeros_like(x)])
    return z.VectorField(grid, u)


def taylor_green_3d(grid):
    """Classical 3D vortex benchmark (genuinely nonlinear, for order checks)."""
    x, y, zz = grid.coordinates()
    u = np.stack(
        [
            np.sin(x) * np.cos(y) * np.cos(zz),
            -np.cos(x) * np.sin(y) * np.cos(zz),
            np.zeros_like(x),
        ]
    )
    return z.VectorField(grid, u)
