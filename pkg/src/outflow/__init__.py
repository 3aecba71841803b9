"""Exterior-domain compressible outflow laboratory."""

from .grids import AngularGrid, RadialGrid
from .params import (
    FluidParams,
    damping_beta,
    dpressure,
    pressure,
    q_coeff,
    sound_speed,
    validate_params,
)
from .states import AxiState, SymState, compatibility_residual, perturb_axi, perturb_sym
from .steady import (
    FitWindowTooSmall,
    NonConvergence,
    SteadyProfile,
    div_u_profile,
    grad_u_split,
    solve_steady,
    verify_decay,
    viscous_term_magnitude,
)

__version__ = "0.1.0"

__all__ = [
    "AngularGrid",
    "RadialGrid",
    "FluidParams",
    "pressure",
    "dpressure",
    "q_coeff",
    "sound_speed",
    "damping_beta",
    "validate_params",
    "SymState",
    "AxiState",
    "perturb_sym",
    "perturb_axi",
    "compatibility_residual",
    "SteadyProfile",
    "solve_steady",
    "verify_decay",
    "div_u_profile",
    "grad_u_split",
    "viscous_term_magnitude",
    "NonConvergence",
    "FitWindowTooSmall",
    "__version__",
]
