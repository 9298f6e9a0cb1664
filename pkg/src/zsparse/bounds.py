"""Duality bounds and frozen constants for the sparseness diagnostics.

This module evaluates, in closed form, the constants that the geometric
checks are calibrated against:

* the extremal harmonic-measure value on the unit disk for a boundary set of
  prescribed length, h(0, D, K_lam) = (2/pi) arcsin((1-(1-lam)^2)/(1+(1-lam)^2));
* the frozen pair (h*, M) solving (1/2) h* + (1 - h*) M = 1 with h* evaluated
  at lam = 1 - (3/4)^(1/3), and the derived cut fraction lambda = 1/(2M);
* the duality constant c*(lam, delta) of the mixing bound: if
  ||f||_{H^-1} <= c* r^(5/2) ||f||_inf then each of the six component
  super-level sets cut at lam ||f||_inf is r-semi-mixed with ratio delta.

The c* derivation path: by duality ||f||_{H^-1} >= |integral f_i phi| / ||phi||_{H^1}
for the radial cutoff phi = 1 on B(x0, r) decaying linearly to 0 across a
shell of width eta*r. Splitting the integral into the set part, the ball
remainder, and the shell gives I - |II| - |III| >= V3 r^3 ||f||_inf
(delta(1+lam) - 1)/2 once (1+eta)^3 = (delta(1+lam)+1)/2, while
||phi||_{H^1} <= c(eta) r^(1/2) for r <= 1 with
c(eta)^2 = V3 [(1+eta)^3 + ((1+eta)^3 - 1)/eta^2]. Hence
c* = (V3 / c(eta)) (delta(1+lam) - 1)/2. The linear ramp is one admissible
cutoff; a sharper profile would only enlarge c*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Grid, VectorField, max_norm, rfft3
from .sparseness import LevelSet, is_semi_mixed, superlevel_sets

#: Volume of the unit ball in R^3.
V3 = 4.0 * math.pi / 3.0


def harmonic_measure_extremal(lam: float) -> float:
    """Extremal harmonic measure at the disk center for boundary length 2*lam."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    q = (1.0 - lam) ** 2
    return (2.0 / math.pi) * math.asin((1.0 - q) / (1.0 + q))


@dataclass(frozen=True)
class FrozenConstants:
    """The calibration constants h*, M, and the cut fraction 1/(2M)."""

    h_star: float
    M: float
    lambda_cut: float


def frozen_constants() -> FrozenConstants:
    """h* at lam = 1 - (3/4)^(1/3); M from (1/2) h* + (1 - h*) M = 1; lambda = 1/(2M)."""
    h_star = harmonic_measure_extremal(1.0 - 0.75 ** (1.0 / 3.0))
    m = (1.0 - 0.5 * h_star) / (1.0 - h_star)
    return FrozenConstants(h_star=h_star, M=m, lambda_cut=1.0 / (2.0 * m))


@dataclass(frozen=True)
class LemmaConstants:
    """Parameters of the H^-1 mixing bound for one (lam, delta) pair."""

    lam: float
    delta: float
    eta: float
    c_cutoff: float  # c(eta) in ||phi||_{H^1} <= c(eta) r^(1/2)
    c_star: float


def lemma_constants(lam: float, delta: float) -> LemmaConstants:
    """Shell parameter eta, cutoff constant c(eta), and duality constant c*."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"cut fraction must lie in (0, 1), got {lam}")
    lower = 1.0 / (1.0 + lam)
    if not lower < delta < 1.0:
        raise ValueError(
            f"hypothesis violation: delta must lie in (1/(1+lam), 1) = ({lower:g}, 1), got {delta}"
        )
    cube = (delta * (1.0 + lam) + 1.0) / 2.0
    eta = cube ** (1.0 / 3.0) - 1.0
    c_cutoff = math.sqrt(V3 * (cube + (cube - 1.0) / eta**2))
    c_star = (V3 / c_cutoff) * (delta * (1.0 + lam) - 1.0) / 2.0
    return LemmaConstants(lam=lam, delta=delta, eta=eta, c_cutoff=c_cutoff, c_star=c_star)


def h_minus1_norm(f: VectorField) -> float:
    """Discrete H^-1 norm: sqrt(sum_k |f_hat_k|^2 / (1 + |k|^2)), Parseval-normalized.

    The weight uses physical wavevectors and includes the mean mode (its
    weight is 1); mean-free inputs such as vorticities get no k = 0 term.
    """
    grid = f.grid
    f_hat = rfft3(f.data)
    power = (f_hat.real**2 + f_hat.imag**2) * (grid.mode_weights / (1.0 + grid.k2))
    return float(math.sqrt(power.sum() * grid.spacing**3 / grid.n**3))


@dataclass(frozen=True)
class GuaranteedScale:
    """Smallest scale at which the mixing bound certifies semi-mixedness."""

    r_star: float
    r_star_energy: float | None  # coarser form with the H^-1 norm replaced by an energy bound
    flagged: bool  # True when r_star >= L/2: certificate valid but unverifiable on the box


def guaranteed_sparseness_scale(
    omega: VectorField, constants: LemmaConstants, u0_l2: float | None = None
) -> GuaranteedScale:
    """r* = (||omega||_{H^-1} / (c* ||omega||_inf))^(2/5).

    Homogeneous of degree zero in omega: rescaling the field moves both
    norms together. When a reference velocity L2 norm is supplied, the
    coarser scale with ||omega||_{H^-1} replaced by that energy bound
    (||curl u||_{H^-1} <= ||u||_2) is reported alongside.
    """
    sup = max_norm(omega)
    if sup == 0.0:
        raise ValueError("vorticity is identically zero; no scale is defined")
    h = h_minus1_norm(omega)
    r_star = (h / (constants.c_star * sup)) ** 0.4
    r_energy = None
    if u0_l2 is not None:
        r_energy = (u0_l2 / (constants.c_star * sup)) ** 0.4
    return GuaranteedScale(
        r_star=r_star,
        r_star_energy=r_energy,
        flagged=r_star >= omega.grid.L / 2.0,
    )


@dataclass
class MixingLemmaVerdict:
    """Contrapositive check of the mixing bound on one field and radius."""

    passed: bool
    any_set_not_semi_mixed: bool
    h_minus1: float
    bound: float  # c* r^(5/2) ||f||_inf
    max_fractions: dict[str, float]


def verify_mixing_lemma(f: VectorField, lam: float, delta: float, r: float) -> MixingLemmaVerdict:
    """Check: if any super-level set fails delta-semi-mixedness at r, then
    ||f||_{H^-1} > c* r^(5/2) ||f||_inf must hold.

    A returned ``passed=False`` signals an implementation bug in c*, the
    H^-1 norm, or the ball fractions, never new mathematics.
    """
    grid = f.grid
    limit = min(1.0, grid.L / 2.0)
    if not 0.0 < r < limit:
        raise ValueError(f"radius must lie in (0, min(1, L/2)) = (0, {limit:g}), got {r}")
    constants = lemma_constants(lam, delta)
    sup = max_norm(f)
    h = h_minus1_norm(f)
    bound = constants.c_star * r**2.5 * sup
    fractions: dict[str, float] = {}
    any_failed = False
    if sup > 0.0:
        for s in superlevel_sets(f, lam):
            ok, top = is_semi_mixed(s, r, delta)
            fractions[s.set_id] = top
            any_failed = any_failed or not ok
    passed = (not any_failed) or (h > bound)
    return MixingLemmaVerdict(
        passed=passed,
        any_set_not_semi_mixed=any_failed,
        h_minus1=h,
        bound=bound,
        max_fractions=fractions,
    )
