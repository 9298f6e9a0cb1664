"""zsparse: sparseness-scale diagnostics for vorticity super-level sets.

A numerical laboratory around periodic-box Navier-Stokes flows: a
pseudo-spectral solver produces vorticity snapshots, whose component
super-level sets are probed for 1D/3D sparseness; an H^-1 duality bound
certifies an a priori semi-mixedness scale; and power-law fits of the
measured scale against the diffusion scale estimate the class exponent.
"""

from .bounds import (
    FrozenConstants,
    GuaranteedScale,
    LemmaConstants,
    MixingLemmaVerdict,
    frozen_constants,
    guaranteed_sparseness_scale,
    h_minus1_norm,
    harmonic_measure_extremal,
    lemma_constants,
    verify_mixing_lemma,
)
from .fields import (
    Grid,
    ScalarField,
    SpectralVectorField,
    VectorField,
    biot_savart,
    curl,
    fft_forward,
    fft_inverse,
    l2_norm,
    max_norm,
)
from .scaling import (
    ObservationWindow,
    OmegaSeries,
    PowerLawFit,
    alpha_from_slope,
    class_label,
    diffusion_scale,
    escape_times,
    fit_power_law,
    growth_window,
    lorentz_alpha,
    lorentz_p,
    pick_s,
    slope_from_alpha,
    snap_to_window,
    z_label,
)
from .snapshots import Snapshot, SnapshotFormatError, read_snapshot, write_snapshot
from .solver import (
    FileInit,
    FlowState,
    KidaInit,
    LowFreqNoiseInit,
    RunResult,
    SolverConfig,
    SolverInstabilityError,
    init_kida,
    init_lowfreq_noise,
    run,
    step,
)
from .sparseness import (
    DELTA_1D,
    DELTA_3D,
    CriterionReport,
    LevelSet,
    ScaleOverflowError,
    SparsenessReport,
    SparsenessScan,
    ball_fraction_field,
    is_1d_sparse,
    is_semi_mixed,
    regularity_criterion_check,
    sparseness_scale,
    superlevel_sets,
)

__version__ = "0.1.0"
