"""Super-level-set extraction and 1D/3D sparseness measurement.

The six sets of interest collect the points where the positive or negative
part of one vorticity component exceeds a fixed fraction of the sup norm.
Their 3D sparseness is probed with discrete periodic balls: a set is
delta-semi-mixed at scale r when no ball of radius r is filled beyond
fraction delta. Ball fractions are computed by circular convolution of the
0/1 mask with a normalized ball indicator; because both factors are integer
valued, the convolution output is rounded to the nearest integer, which
makes the spectral path agree *exactly* with brute-force ball counting.

1D sparseness interpolates the underlying component trilinearly along a
segment and thresholds the interpolated values (interpolate-then-threshold),
avoiding staircase aliasing on thin sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .fields import Grid, ScalarField, VectorField, irfft3, max_norm, rfft3

#: Default 3D sparseness ratio.
DELTA_3D = 0.75
#: Default 1D sparseness ratio, the cube root of the 3D ratio.
DELTA_1D = 0.75 ** (1.0 / 3.0)

_SET_ORDER = ((1, +1), (1, -1), (2, +1), (2, -1), (3, +1), (3, -1))


class ScaleOverflowError(Exception):
    """No admissible test scale exists below the allowed bound."""


@dataclass(frozen=True, eq=False)
class LevelSet:
    """Binary mask of one super-level set V^{j,+-} on a grid."""

    grid: Grid
    mask: np.ndarray  # (n, n, n) bool
    component: int  # j in {1, 2, 3}
    sign: int  # +1 or -1
    cut: float  # absolute threshold lambda * |omega|_inf

    def __post_init__(self):
        arr = np.ascontiguousarray(self.mask, dtype=bool)
        n = self.grid.n
        if arr.shape != (n, n, n):
            raise ValueError(f"mask has shape {arr.shape}, expected {(n, n, n)}")
        arr.flags.writeable = False
        object.__setattr__(self, "mask", arr)
        if self.component not in (1, 2, 3):
            raise ValueError(f"component must be 1, 2, or 3, got {self.component}")
        if self.sign not in (+1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def set_id(self) -> str:
        return f"{self.component}{'+' if self.sign > 0 else '-'}"


def superlevel_sets(omega: VectorField, lam: float) -> list[LevelSet]:
    """The six masks {x : omega_j^+-(x) > lam * |omega|_inf}, strict inequality.

    Ordered (1,+), (1,-), (2,+), (2,-), (3,+), (3,-).
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"cut fraction must lie in (0, 1), got {lam}")
    sup = max_norm(omega)
    if sup == 0.0:
        raise ValueError("vorticity is identically zero; super-level sets are undefined")
    cut = lam * sup
    sets = []
    for j, sign in _SET_ORDER:
        comp = sign * omega.component(j - 1)
        sets.append(LevelSet(omega.grid, comp > cut, j, sign, cut))
    return sets


@lru_cache(maxsize=64)
def _ball_indicator(n: int, L: float, r: float) -> np.ndarray:
    """0/1 indicator of the discrete periodic ball centered at index (0,0,0).

    A cell belongs to the ball when its center lies within Euclidean distance
    r of the center under the minimum-image periodic metric. The identical
    stencil is used by the spectral path and by brute-force oracles.
    """
    spacing = L / n
    ax = np.arange(n)
    d = np.minimum(ax, n - ax) * spacing
    d2 = d[:, None, None] ** 2 + d[None, :, None] ** 2 + d[None, None, :] ** 2
    return (d2 <= r * r).astype(np.float64)


@lru_cache(maxsize=64)
def _ball_spectrum(n: int, L: float, r: float) -> tuple[np.ndarray, int]:
    ball = _ball_indicator(n, L, r)
    return rfft3(ball), int(ball.sum())


def ball_cell_count(grid: Grid, r: float) -> int:
    """Number of cells in the discrete periodic ball of radius r."""
    return _ball_spectrum(grid.n, grid.L, float(r))[1]


def _check_radius(grid: Grid, r: float):
    if not 0.0 < r < grid.L / 2.0:
        raise ValueError(f"ball radius must lie in (0, L/2) = (0, {grid.L / 2}), got {r}")


def _fraction_counts(grid: Grid, mask_hat: np.ndarray, r: float) -> np.ndarray:
    """Integer ball-intersection counts at every center, via FFT convolution."""
    ball_hat, count = _ball_spectrum(grid.n, grid.L, float(r))
    counts = irfft3(mask_hat * ball_hat, grid.n)
    counts = np.rint(counts)
    np.clip(counts, 0.0, count, out=counts)
    return counts


def ball_fraction_field(S: LevelSet, r: float) -> ScalarField:
    """Fraction of the discrete periodic ball B(x, r) covered by S, per center."""
    _check_radius(S.grid, r)
    mask_hat = rfft3(S.mask.astype(np.float64))
    _, count = _ball_spectrum(S.grid.n, S.grid.L, float(r))
    return ScalarField(S.grid, _fraction_counts(S.grid, mask_hat, r) / count)


def is_semi_mixed(S: LevelSet, r: float, delta: float) -> tuple[bool, float]:
    """Whether every ball fraction is <= delta; also returns the max fraction."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"sparseness ratio must lie in (0, 1), got {delta}")
    top = float(np.max(ball_fraction_field(S, r).data))
    return top <= delta, top


@dataclass
class SparsenessScan:
    """Result of scanning a radius grid for the smallest semi-mixed scale."""

    set_id: str
    delta: float
    scale: float | None  # smallest passing radius, or None
    radii: np.ndarray
    max_fractions: np.ndarray


def sparseness_scale(S: LevelSet, delta: float, radii) -> SparsenessScan:
    """Smallest radius in the ascending grid at which S is delta-semi-mixed.

    The full (r, max fraction) curve is reported as well: the max ball
    fraction is not guaranteed monotone in r, so the first passing radius is
    a scan result, not a threshold crossing.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"sparseness ratio must lie in (0, 1), got {delta}")
    radii = np.asarray(radii, dtype=np.float64)
    if radii.size == 0 or np.any(np.diff(radii) <= 0):
        raise ValueError("radius grid must be nonempty and strictly ascending")
    for r in (radii[0], radii[-1]):
        _check_radius(S.grid, float(r))
    mask_hat = rfft3(S.mask.astype(np.float64))
    tops = np.empty(radii.size)
    for i, r in enumerate(radii):
        _, count = _ball_spectrum(S.grid.n, S.grid.L, float(r))
        tops[i] = _fraction_counts(S.grid, mask_hat, float(r)).max() / count
    passing = np.nonzero(tops <= delta)[0]
    scale = float(radii[passing[0]]) if passing.size else None
    return SparsenessScan(S.set_id, delta, scale, radii, tops)


def geometric_radii(r_min: float, r_max: float, per_decade: int = 24) -> np.ndarray:
    """Geometric radius grid from r_min to r_max at per_decade points per decade."""
    if not 0 < r_min <= r_max:
        raise ValueError(f"need 0 < r_min <= r_max, got ({r_min}, {r_max})")
    count = max(2, int(math.ceil(math.log10(r_max / r_min) * per_decade)) + 1)
    return np.geomspace(r_min, r_max, count)


def fibonacci_sphere(count: int) -> np.ndarray:
    """Deterministic near-uniform direction set on the unit sphere, (count, 3)."""
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    theta = i * math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)


def _segment_coords(grid: Grid, x0: np.ndarray, direction: np.ndarray, rho: float, m_line: int):
    """Index-space coordinates of m_line points on (x0 - rho d, x0 + rho d)."""
    offsets = np.linspace(-rho, rho, m_line)
    pts = x0[None, :] + offsets[:, None] * direction[None, :]
    return pts.T / grid.spacing  # (3, m_line), periodic wrap handled by sampler


def line_fraction(
    values: np.ndarray,
    grid: Grid,
    x0,
    direction,
    rho: float,
    cut: float,
    m_line: int = 256,
    order: int = 1,
) -> float:
    """Fraction of segment samples with interpolated value > cut.

    order=1 gives trilinear interpolation (for continuous fields); order=0
    samples the nearest cell (for 0/1 masks, with cut = 0.5).
    """
    x0 = np.asarray(x0, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    norm = float(np.linalg.norm(d))
    if not math.isclose(norm, 1.0, rel_tol=1e-9):
        raise ValueError(f"direction must be a unit vector, got |d| = {norm}")
    if not 0.0 < rho < grid.L / 2.0:
        raise ValueError(f"segment half-length must lie in (0, L/2), got {rho}")
    coords = _segment_coords(grid, x0, d, rho, m_line)
    samples = ndimage.map_coordinates(
        np.asarray(values, dtype=np.float64), coords, order=order, mode="grid-wrap"
    )
    return float(np.count_nonzero(samples > cut)) / m_line


def is_1d_sparse(
    component: np.ndarray,
    grid: Grid,
    x0,
    direction,
    rho: float,
    delta: float,
    cut: float,
    m_line: int = 256,
) -> tuple[bool, float]:
    """1D delta-sparseness of {component > cut} along one segment.

    ``component`` is the signed scalar samples of the super-level set's
    source (omega_j for a '+' set, -omega_j for a '-' set).
    """
    frac = line_fraction(component, grid, x0, direction, rho, cut, m_line=m_line, order=1)
    return frac <= delta, frac


@dataclass
class PointCriterionResult:
    index: tuple[int, int, int]
    set_id: str
    passed: bool
    witness_direction: np.ndarray | None
    witness_scale: float | None
    best_fraction: float


@dataclass
class CriterionReport:
    fraction_passing: float
    scale_budget: float
    lam: float
    delta1: float
    c_m: float
    n_dir: int
    m_line: int
    radii: np.ndarray
    points: list[PointCriterionResult]


def _sample_indices(n: int, n_points: int) -> np.ndarray:
    """Deterministic, roughly uniform sample of flat grid indices."""
    total = n**3
    n_points = min(n_points, total)
    return np.linspace(0, total - 1, n_points).astype(np.int64)


def regularity_criterion_check(
    omega: VectorField,
    c_m: float,
    lam: float,
    delta1: float = DELTA_1D,
    n_points: int = 32,
    n_dir: int = 64,
    m_line: int = 256,
    radii=None,
) -> CriterionReport:
    """Pointwise 1D-sparseness check of the locally maximal component's set.

    At each sampled point the component attaining the (component-max) vector
    magnitude is selected (ties: smallest j, then + before -), and directions
    on a Fibonacci sphere are scanned over a geometric scale grid bounded by
    rho <= 1 / (2 c_m |omega|_inf^(1/2)). A point passes when some (d, rho)
    makes the set 1D delta1-sparse around it.
    """
    if not c_m > 0:
        raise ValueError(f"c_m must be positive, got {c_m}")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"cut fraction must lie in (0, 1), got {lam}")
    grid = omega.grid
    sup = max_norm(omega)
    if sup == 0.0:
        raise ValueError("vorticity is identically zero; criterion is undefined")
    cut = lam * sup
    budget = 1.0 / (2.0 * c_m * math.sqrt(sup))

    r_hi = min(budget, 0.49 * grid.L)
    if radii is None:
        r_lo = min(grid.spacing, r_hi)
        radii = geometric_radii(r_lo, r_hi) if r_hi > 0 else np.array([])
    radii = np.asarray(radii, dtype=np.float64)
    radii = radii[(radii > 0) & (radii <= r_hi)]
    if radii.size == 0:
        raise ScaleOverflowError(
            f"scale overflow: no test scale fits below min(budget, L/2) with "
            f"budget 1/(2 c_m |omega|_inf^(1/2)) = {budget:g} and L/2 = {grid.L / 2:g}"
        )

    dirs = fibonacci_sphere(n_dir)
    flat = _sample_indices(grid.n, n_points)
    indices = np.stack(np.unravel_index(flat, (grid.n,) * 3), axis=1)

    offsets = np.linspace(-1.0, 1.0, m_line)  # scaled by rho below
    # coords for all (radius, direction, sample) triples in one gather per point
    seg = offsets[None, None, :, None] * radii[:, None, None, None] * dirs[None, :, None, :]

    results: list[PointCriterionResult] = []
    passed_count = 0
    for idx in indices:
        x0 = idx * grid.spacing
        vals = omega.data[:, idx[0], idx[1], idx[2]]
        magnitude = float(np.max(np.abs(vals)))
        j, sign = 1, +1
        for cand_j, cand_sign in _SET_ORDER:
            if cand_sign * vals[cand_j - 1] == magnitude:
                j, sign = cand_j, cand_sign
                break
        component = sign * omega.component(j - 1)

        pts = (x0[None, None, None, :] + seg) / grid.spacing  # (R, D, m, 3)
        samples = ndimage.map_coordinates(
            component, pts.reshape(-1, 3).T, order=1, mode="grid-wrap"
        ).reshape(len(radii), n_dir, m_line)
        fractions = np.count_nonzero(samples > cut, axis=2) / m_line  # (R, D)

        hit = np.argwhere(fractions <= delta1)
        if hit.size:
            ri, di = hit[0]
            result = PointCriterionResult(
                index=tuple(int(v) for v in idx),
                set_id=f"{j}{'+' if sign > 0 else '-'}",
                passed=True,
                witness_direction=dirs[di].copy(),
                witness_scale=float(radii[ri]),
                best_fraction=float(fractions[ri, di]),
            )
            passed_count += 1
        else:
            result = PointCriterionResult(
                index=tuple(int(v) for v in idx),
                set_id=f"{j}{'+' if sign > 0 else '-'}",
                passed=False,
                witness_direction=None,
                witness_scale=None,
                best_fraction=float(fractions.min()),
            )
        results.append(result)

    return CriterionReport(
        fraction_passing=passed_count / len(results),
        scale_budget=budget,
        lam=lam,
        delta1=delta1,
        c_m=c_m,
        n_dir=n_dir,
        m_line=m_line,
        radii=radii,
        points=results,
    )


@dataclass
class SetReport:
    """Per-level-set slice of a snapshot's sparseness report."""

    set_id: str
    delta: float
    measured_scale: float | None
    curve_radii: list[float]
    curve_max_fractions: list[float]
    fraction_at_guaranteed: float | None = None
    semi_mixed_at_guaranteed: bool | None = None


@dataclass
class SparsenessReport:
    """Per-snapshot sparseness diagnostics (assembled by the pipeline)."""

    t: float
    nu: float
    n: int
    L: float
    omega_inf: float
    h_minus1: float
    lambda_cut: float
    delta: float
    diffusion_scale: float | None
    guaranteed_scale: float | None
    guaranteed_scale_energy: float | None
    guaranteed_scale_flagged: bool
    headline_scale: float | None
    sets: list[SetReport] = field(default_factory=list)
    skipped: bool = False
