"""Time-series analysis: escape times, observation windows, and power-law fits.

The headline quantity is the exponent beta of r ~ d^beta relating the
measured 3D sparseness scale r to the diffusion scale d = (nu/|omega|_inf)^(1/2).
At fixed viscosity, a super-level set shrinking like |omega|_inf^(-alpha)
produces beta = 2*alpha, so the fitted slope halves into the class exponent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

#: Landmark class exponents: energy level, a priori bound, regularity threshold,
#: and the empirically reported burst value.
ALPHA_LANDMARKS = (1.0 / 3.0, 2.0 / 5.0, 1.0 / 2.0, 3.0 / 5.0)
_LANDMARK_NAMES = {1.0 / 3.0: "1/3", 2.0 / 5.0: "2/5", 1.0 / 2.0: "1/2", 3.0 / 5.0: "3/5"}


@dataclass
class OmegaSeries:
    """Sup-norm history (t_i, |omega(t_i)|_inf) of one run at fixed viscosity."""

    t: np.ndarray
    omega_inf: np.ndarray
    nu: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.omega_inf = np.asarray(self.omega_inf, dtype=np.float64)
        if self.t.ndim != 1 or self.t.shape != self.omega_inf.shape:
            raise ValueError("t and omega_inf must be 1D arrays of equal length")
        if self.t.size >= 2 and not np.all(np.diff(self.t) > 0):
            raise ValueError("sample times must be strictly increasing")
        if np.any(self.omega_inf < 0):
            raise ValueError("omega_inf values must be nonnegative")
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")


def escape_times(series: OmegaSeries) -> np.ndarray:
    """Indices i with omega_inf[j] > omega_inf[i] for every j > i.

    Discrete version of the escape-time definition; the last sample has no
    later samples and never qualifies. One reverse pass tracking the running
    minimum of the suffix.
    """
    w = series.omega_inf
    if w.size < 2:
        raise ValueError("need at least 2 samples to compute escape times")
    out = []
    suffix_min = math.inf
    for i in range(w.size - 2, -1, -1):
        suffix_min = min(suffix_min, w[i + 1])
        if w[i] < suffix_min:
            out.append(i)
    return np.array(out[::-1], dtype=np.int64)


@dataclass(frozen=True)
class ObservationWindow:
    """Admissible observation interval after an escape time, plus its midpoint."""

    t_lo: float
    t_hi: float
    midpoint: float


def pick_s(t: float, omega_inf_t: float, c_m: float) -> ObservationWindow:
    """Window [t + 1/(4 c_m w), t + 1/(c_m w)] and its midpoint t + 5/(8 c_m w)."""
    if not omega_inf_t > 0:
        raise ValueError(f"omega_inf must be positive, got {omega_inf_t}")
    if not c_m > 0:
        raise ValueError(f"c_m must be positive, got {c_m}")
    base = 1.0 / (c_m * omega_inf_t)
    return ObservationWindow(t_lo=t + base / 4.0, t_hi=t + base, midpoint=t + 5.0 * base / 8.0)


def snap_to_window(times, window: ObservationWindow) -> int | None:
    """Index of the sample nearest the window midpoint, or None if none falls inside."""
    times = np.asarray(times, dtype=np.float64)
    if times.size and times[-1] < window.t_lo:
        raise ValueError(
            f"window overflow: window starts at t={window.t_lo:g} "
            f"but the trajectory ends at t={times[-1]:g}"
        )
    inside = np.nonzero((times >= window.t_lo) & (times <= window.t_hi))[0]
    if inside.size == 0:
        return None
    return int(inside[np.argmin(np.abs(times[inside] - window.midpoint))])


def diffusion_scale(omega_inf: float, nu: float):
    """d = sqrt(nu / |omega|_inf), the sup-norm diffusion scale."""
    if np.any(np.asarray(omega_inf) <= 0):
        raise ValueError("omega_inf must be positive")
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    return np.sqrt(nu / np.asarray(omega_inf, dtype=np.float64))[()]


@dataclass(frozen=True)
class PowerLawFit:
    intercept: float  # log r at log d = 0
    slope: float
    residual_rms: float  # RMS of log-residuals
    n_used: int


def fit_power_law(d, r) -> PowerLawFit:
    """Ordinary least squares of log r against log d.

    Exactly scale-covariant: rescaling r shifts only the intercept. Two
    distinct points interpolate exactly but emit a warning; fewer than two
    distinct abscissae are an error.
    """
    d = np.asarray(d, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if d.shape != r.shape or d.ndim != 1:
        raise ValueError("d and r must be 1D arrays of equal length")
    if np.any(d <= 0) or np.any(r <= 0):
        raise ValueError("power-law fit requires strictly positive d and r")
    if d.size < 2:
        raise ValueError(f"need at least 2 rows to fit, got {d.size}")
    x = np.log(d)
    y = np.log(r)
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate fit: all diffusion scales are equal")
    if d.size < 3:
        warnings.warn("fitting a power law through only 2 points: exact interpolation")
    xm, ym = x.mean(), y.mean()
    slope = float(np.dot(x - xm, y - ym) / np.dot(x - xm, x - xm))
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    return PowerLawFit(
        intercept=intercept,
        slope=slope,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_used=int(d.size),
    )


def alpha_from_slope(beta: float) -> float:
    """Class exponent from the fitted slope at fixed viscosity: alpha = beta / 2."""
    return beta / 2.0


def slope_from_alpha(alpha: float) -> float:
    return 2.0 * alpha


def class_label(alpha: float) -> str:
    """Reporting bucket for a class exponent (a convention, not a claim).

    Boundaries are half-open: [0, 1/3] energy, (1/3, 2/5] a priori,
    (2/5, 1/2) subcritical gap, [1/2, inf) beyond the regularity threshold.
    """
    if alpha < 0:
        return "unclassified (negative exponent)"
    if alpha <= 1.0 / 3.0:
        return "energy class"
    if alpha <= 2.0 / 5.0:
        return "a priori class"
    if alpha < 1.0 / 2.0:
        return "subcritical gap"
    return "beyond regularity threshold"


def z_label(alpha: float, atol: float = 1e-6) -> str:
    """Class name Z_alpha, using the fraction form at landmark exponents."""
    for landmark, name in _LANDMARK_NAMES.items():
        if abs(alpha - landmark) <= atol:
            return f"Z_{name}"
    return f"Z_{alpha:.3f}"


def lorentz_alpha(p: float) -> float:
    """Class exponent matching weak-L^p decay of super-level volumes: alpha = p/3."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    return p / 3.0


def lorentz_p(alpha: float) -> float:
    """Inverse conversion: p = 3 * alpha."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return 3.0 * alpha


def growth_window(t, omega_inf) -> tuple[float, float]:
    """Default fit window: the growth leg of the sup-norm burst.

    Anchored on the interval from the global minimum of |omega|_inf to the
    subsequent maximum (the burst build-up), and trimmed at the front to
    where the series first reaches half of that peak. On a series that only
    rises from near zero this reduces to [t at half peak, t at peak].
    """
    t = np.asarray(t, dtype=np.float64)
    w = np.asarray(omega_inf, dtype=np.float64)
    if t.size == 0:
        raise ValueError("empty series")
    i_min = int(np.argmin(w))
    i_peak = i_min + int(np.argmax(w[i_min:]))
    half = w[i_peak] / 2.0
    start = i_min + int(np.nonzero(w[i_min : i_peak + 1] >= half)[0][0])
    return float(t[start]), float(t[i_peak])
