"""Transport coefficients of a relativistic polyatomic gas from moment closures
and the Chapman-Enskog expansion."""

from .chapman_enskog import (
    cem_bulk_viscosity,
    cem_heat_conductivity,
    cem_identity_checks,
    cem_inputs,
    cem_shear_viscosity,
    cem_transport,
)
from .equilibrium_thermo import (
    ThermoState,
    ThetaTable,
    build_theta_table,
    gradient_ratios,
    make_state,
)
from .errors import (
    DomainError,
    IdentityViolation,
    MissingTheta,
    NonConvergence,
    RecurrenceMismatch,
    SingularSystem,
    TransportError,
)
from .evaluate import evaluate_methods
from .maxwellian_iteration import TransportResult, assemble, cofactor, mi_transport
from .nonrel_limits import convergence_sweep, internal_energy_moment, theta11_star_expansion
from .special_integrals import GasParameters, QuadratureConfig, j_mn, weighted_j

__version__ = "0.1.0"
