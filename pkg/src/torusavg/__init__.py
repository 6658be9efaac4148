"""Pseudo-spectral simulator for a slow-fast stochastic dispersive system on the torus.

The slow equation carries a fractional dispersion and a damped power
nonlinearity, the fast equation is strongly dissipative and mixes quickly,
and the two interact through scalar couplings on the mean mode.  The package
provides the spectral discretization, exponential integrators for the
coupled, averaged and block-frozen dynamics, estimators for the invariant
statistics of the frozen fast equation, ensemble experiment drivers with
reproducible counter-based noise, and a command-line interface.
"""

from .ergodics import (
    FbarEstimate,
    FbarProvider,
    FrozenFastConfig,
    dissipativity_curve,
    estimate_fbar,
    fbar_provider,
    sensitivity_in_u,
    solve_frozen_fast,
)
from .experiments import (
    EnsembleStats,
    ExperimentError,
    StrongErrorResult,
    SweepResult,
    default_checkpoints,
    eps_sweep,
    holder_study,
    khasminskii_study,
    rough_initial_slow,
    run_averaged_ensemble,
    run_coupled_ensemble,
    smooth_initial_slow,
    strong_error,
    viscosity_sweep,
    write_results,
)
from .integrators import (
    AveragedPathResult,
    CoupledPathResult,
    KhasminskiiPathResult,
    PathAborted,
    StepScheme,
    khasminskii_path,
    make_noise,
    simulate_averaged_path,
    simulate_coupled_path,
    step_averaged,
    step_fast,
    step_slow,
)
from .model import (
    LEMMA_IDS,
    AssumptionError,
    CouplingSpec,
    LemmaReport,
    ModelParams,
    assumption_margins,
    check_lemma,
    default_couplings,
    gamma_bound,
    nonlinearity,
    validate,
)
from .spectral import (
    Field,
    LinearSymbol,
    SpectralGrid,
    apply_propagator,
    frac_laplacian,
    inner_l2,
    make_grid,
    norm_h1,
    norm_l2,
    norm_lp,
    pad_coeffs,
    random_field,
    truncate_coeffs,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "AveragedPathResult",
    "CoupledPathResult",
    "CouplingSpec",
    "EnsembleStats",
    "ExperimentError",
    "FbarEstimate",
    "FbarProvider",
    "Field",
    "FrozenFastConfig",
    "KhasminskiiPathResult",
    "LEMMA_IDS",
    "LemmaReport",
    "LinearSymbol",
    "ModelParams",
    "PathAborted",
    "SpectralGrid",
    "StepScheme",
    "StrongErrorResult",
    "SweepResult",
    "apply_propagator",
    "assumption_margins",
    "check_lemma",
    "default_checkpoints",
    "default_couplings",
    "dissipativity_curve",
    "eps_sweep",
    "estimate_fbar",
    "fbar_provider",
    "frac_laplacian",
    "gamma_bound",
    "holder_study",
    "inner_l2",
    "khasminskii_path",
    "khasminskii_study",
    "make_grid",
    "make_noise",
    "nonlinearity",
    "norm_h1",
    "norm_l2",
    "norm_lp",
    "pad_coeffs",
    "random_field",
    "rough_initial_slow",
    "run_averaged_ensemble",
    "run_coupled_ensemble",
    "sensitivity_in_u",
    "simulate_averaged_path",
    "simulate_coupled_path",
    "smooth_initial_slow",
    "solve_frozen_fast",
    "step_averaged",
    "step_fast",
    "step_slow",
    "strong_error",
    "truncate_coeffs",
    "validate",
    "viscosity_sweep",
    "write_results",
]
