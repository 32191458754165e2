"""fenelab: a spectral micro-macro laboratory for the FENE dumbbell model.

Simulates the coupled incompressible-flow / configuration-distribution
system near equilibrium with a weighted Galerkin basis on the configuration
ball and a dealiased Fourier pseudo-spectral method in space, and provides
verification tooling: per-mode linear analysis, energy ledgers with the
stress/source work cancellation, and decay-exponent fitting against the
theoretical near-equilibrium rate table.
"""

from .ball import (
    BallBasis,
    ConfigCoeffs,
    apply_drag,
    apply_fokker_planck,
    ball_quadrature,
    build_basis,
    equilibrium_mass,
    load_basis,
    poincare_constant,
    save_basis,
    source_coeffs,
    stress,
    weighted_norms,
)
from .config import (
    RunConfig,
    load_config,
    make_initial_data,
    read_series_csv,
    save_config,
    surrogate_norm,
    write_series_csv,
)
from .decay import (
    DecayReport,
    FitResult,
    decay_report,
    fit_exponent,
    saturation_time,
    splitting_diagnostic,
    theoretical_targets,
)
from .dynamics import (
    CoupledSolver,
    MicroMacroState,
    RunResult,
    load_checkpoint,
    run,
    save_checkpoint,
)
from .errors import (
    CflViolationError,
    ContractViolationError,
    DiscretizationFailureError,
    IllConditionedBasisError,
    InstabilityError,
    InvalidParameterError,
    MassInjectionError,
)
from .flow import (
    FlowGrid,
    VelocityField,
    advect,
    heat_reference_series,
    leray_project,
    load_field,
    low_freq_energy,
    save_field,
    velocity_norms,
)
from .modes import ModeSystem, assemble, lyapunov_check, spectral_abscissa
from .params import FeneParams

__version__ = "1.0.0"

__all__ = [
    "BallBasis",
    "CflViolationError",
    "ConfigCoeffs",
    "ContractViolationError",
    "CoupledSolver",
    "DecayReport",
    "DiscretizationFailureError",
    "FeneParams",
    "FitResult",
    "FlowGrid",
    "IllConditionedBasisError",
    "InstabilityError",
    "InvalidParameterError",
    "MassInjectionError",
    "MicroMacroState",
    "ModeSystem",
    "RunConfig",
    "RunResult",
    "VelocityField",
    "advect",
    "apply_drag",
    "apply_fokker_planck",
    "assemble",
    "ball_quadrature",
    "build_basis",
    "decay_report",
    "equilibrium_mass",
    "fit_exponent",
    "heat_reference_series",
    "leray_project",
    "load_basis",
    "load_checkpoint",
    "load_config",
    "load_field",
    "low_freq_energy",
    "lyapunov_check",
    "make_initial_data",
    "poincare_constant",
    "read_series_csv",
    "run",
    "saturation_time",
    "save_basis",
    "save_checkpoint",
    "save_config",
    "save_field",
    "source_coeffs",
    "spectral_abscissa",
    "splitting_diagnostic",
    "stress",
    "surrogate_norm",
    "theoretical_targets",
    "velocity_norms",
    "weighted_norms",
    "write_series_csv",
]
