"""Chapman-Enskog transport coefficients.

These are closed forms in a handful of equilibrium scalars and do not depend
on a truncation order, so none of the functions here take one. Natural units
throughout; every coefficient is proportional to the relaxation time
``gas.tau``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .equilibrium_thermo import GradientRatios, ThermoState, ThetaTable, gradient_ratios
from .errors import DomainError, IdentityViolation, SingularSystem
from .maxwellian_iteration import TransportResult
from .special_integrals import GasParameters

IDENTITY_TOL = 1e-8
BULK_VARIANTS = ("derived", "as_printed")


@dataclass(frozen=True)
class CemInputs:
    """The only equilibrium scalars the closed forms read."""

    state: ThermoState
    theta02: float
    theta12: float
    theta_star11: float
    theta_star12: float
    theta_star13: float
    theta_star23: float
    ratios: GradientRatios


def cem_inputs(state: ThermoState, table: ThetaTable, check: bool = True) -> CemInputs:
    """Collect the closed-form inputs from a table, checking the two shift identities."""
    inputs = CemInputs(
        state=state,
        theta02=table.t(0, 2),
        theta12=table.t(1, 2),
        theta_star11=table.ts(1, 1),
        theta_star12=table.ts(1, 2),
        theta_star13=table.ts(1, 3),
        theta_star23=table.ts(2, 3),
        ratios=gradient_ratios(state, table),
    )
    if check:
        pairs = ((inputs.theta_star12, 3.0 * table.t(1, 1)),
                 (inputs.theta_star13, 2.0 * inputs.theta12))
        for got, want in pairs:
            if abs(got - want) > IDENTITY_TOL * abs(want):
                raise IdentityViolation(f"shifted moment {got!r} differs from {want!r}")
    return inputs


def cem_heat_conductivity(inputs: CemInputs, gas: GasParameters = GasParameters()) -> float:
    s = inputs.state
    rho, p, temp = s.rho, s.p, s.temperature
    bracket = inputs.theta_star12 - (rho / p) * inputs.theta12 * inputs.theta_star11
    return -(gas.tau / (9.0 * temp * temp)) * (rho * rho / p) * inputs.theta12 * bracket


def cem_bulk_viscosity(inputs: CemInputs, gas: GasParameters = GasParameters(),
                       variant: str = "derived") -> float:
    """Bulk viscosity.

    ``variant="as_printed"`` omits the 1/T factor, which leaves the result
    dimensionally a viscosity times a temperature. The two agree at T = 1.
    """
    if variant not in BULK_VARIANTS:
        raise DomainError(f"variant must be one of {BULK_VARIANTS}, got {variant!r}")
    s, r = inputs.state, inputs.ratios
    if not r.gram_det > 0.0:
        raise SingularSystem(f"moment Gram determinant is not positive: {r.gram_det!r}")
    rho = s.rho
    bracket = (inputs.theta_star12 * r.r_time_lambda / 3.0
               + inputs.theta_star13 * r.r_time_lambda_u / 6.0
               + 5.0 * inputs.theta_star23 / 9.0)
    scale = gas.tau / s.temperature if variant == "derived" else gas.tau
    return scale * rho * bracket


def cem_shear_viscosity(inputs: CemInputs, gas: GasParameters = GasParameters()) -> float:
    s = inputs.state
    return gas.tau * s.rho * inputs.theta_star23 / (3.0 * s.temperature)


@dataclass(frozen=True)
class IdentityReport:
    """Relative residuals of combinations that vanish identically."""

    heat_gradient: float      # p r_space + (2/3) rho theta_{1,2}
    mass_balance: float       # rho r_time + e r_time_u + p
    energy_balance: float     # e r_time + rho theta_{0,2} r_time_u + rho theta_{1,2} / 3

    @property
    def worst(self) -> float:
        return max(self.heat_gradient, self.mass_balance, self.energy_balance)


def _relative(*terms: float) -> float:
    scale = max(abs(t) for t in terms)
    return abs(sum(terms)) / scale if scale else 0.0


def cem_identity_checks(inputs: CemInputs, tol: float = IDENTITY_TOL,
                        raise_on_failure: bool = True) -> IdentityReport:
    s, r = inputs.state, inputs.ratios
    rho, e, p = s.rho, s.energy, s.p
    report = IdentityReport(
        heat_gradient=_relative(p * r.r_space_lambda, 2.0 * rho * inputs.theta12 / 3.0),
        mass_balance=_relative(rho * r.r_time_lambda, e * r.r_time_lambda_u, p),
        energy_balance=_relative(e * r.r_time_lambda, rho * inputs.theta02 * r.r_time_lambda_u,
                                 rho * inputs.theta12 / 3.0),
    )
    if raise_on_failure and not report.worst <= tol:
        raise IdentityViolation(f"identity residuals exceed {tol:g}: {report}")
    return report


def cem_transport(state: ThermoState, table: ThetaTable,
                  gas: GasParameters = GasParameters(), bulk_variant: str = "derived") -> TransportResult:
    inputs = cem_inputs(state, table)
    report = cem_identity_checks(inputs)
    nu = cem_bulk_viscosity(inputs, gas, bulk_variant)
    chi = cem_heat_conductivity(inputs, gas)
    mu = cem_shear_viscosity(inputs, gas)
    unit = gas.tau * state.p
    if unit:
        reduced = (nu / unit, chi / unit, mu / unit)
    else:
        probe = GasParameters(gas.a_poly, 1.0, gas.units)
        reduced = tuple(f / state.p for f in (cem_bulk_viscosity(inputs, probe, bulk_variant),
                                             cem_heat_conductivity(inputs, probe),
                                             cem_shear_viscosity(inputs, probe)))
    diags = {"identity_residual": report.worst, "gram_det": inputs.ratios.gram_det,
             "min_pivot": float("nan"), "bulk_variant": bulk_variant}
    return TransportResult(nu, chi, mu, "CEM", reduced, state.temperature, diags)
