"""Semi-geostrophic balance model on the non-traditional f-plane.

A structured-grid solver for the variational balance model of rotating
Boussinesq flow with the full Coriolis vector: thermal-wind diagnosis,
elliptic balance inversion, prognostic stepping of the density deviation and
the skewed mean vorticity, and an executable verification suite for the
underlying averaging and splitting identities.
"""

from .balance import (BalanceIterate, EllipticityReport, SolverOptions,
                      balance_fixed_point, compute_U_and_B, ellipticity_margin,
                      rhs_f, rhs_g)
from .calculus import SpectralWorkspace
from .config import RunConfig, parse_config
from .diagnostics import (DiagnosticsReport, conservation_report, hamiltonian,
                          potential_vorticity, snapshot_report)
from .dynamics import (BalancedFields, ReconstructedVelocity, State,
                       diagnose_balanced, omega_tendency, reconstruct_velocity,
                       rho_tendency, rk4_step)
from .errors import (ConfigError, FieldFormatError, NonConvergenceError,
                     NonEllipticError, SolvabilityError)
from .fileio import read_field, write_field
from .grid import (ObliqueGrid, ScalarField2, ScalarField3, VectorField3,
                   sample_function, sample_surface_function)
from .presets import initial_state
from .rotation import (MatrixSet, ModelParams, TiltParams, build_matrix_set,
                       verify_matrix_identities)
from .thermal import (GeostrophicFields, complete_axis_component,
                      complete_mean_flow, compute_theta, diagnose_geostrophic,
                      gamma_field, geostrophic_wind, operator_C)
from .verification import run_verification

__version__ = "0.1.0"

__all__ = [
    "BalanceIterate", "BalancedFields", "ConfigError", "DiagnosticsReport",
    "EllipticityReport", "FieldFormatError", "GeostrophicFields", "MatrixSet",
    "ModelParams", "NonConvergenceError", "NonEllipticError", "ObliqueGrid",
    "ReconstructedVelocity", "RunConfig", "ScalarField2", "ScalarField3",
    "SolvabilityError", "SolverOptions", "SpectralWorkspace", "State",
    "TiltParams", "VectorField3", "balance_fixed_point", "build_matrix_set",
    "complete_axis_component", "complete_mean_flow", "compute_U_and_B",
    "compute_theta", "conservation_report", "diagnose_balanced",
    "diagnose_geostrophic", "ellipticity_margin", "gamma_field",
    "geostrophic_wind", "hamiltonian", "initial_state", "omega_tendency",
    "operator_C", "parse_config", "potential_vorticity", "read_field",
    "reconstruct_velocity", "rho_tendency", "rhs_f", "rhs_g", "rk4_step",
    "run_verification", "sample_function", "sample_surface_function",
    "snapshot_report", "verify_matrix_identities", "write_field",
]
