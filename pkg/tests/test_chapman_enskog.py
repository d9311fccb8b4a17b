import dataclasses
import inspect

import numpy as np
import pytest

from conftest import state_and_table
from reltransport.chapman_enskog import (
    CemInputs,
    cem_bulk_viscosity,
    cem_heat_conductivity,
    cem_identity_checks,
    cem_inputs,
    cem_shear_viscosity,
    cem_transport,
)
from reltransport.equilibrium_thermo import theta_star_quadrature
from reltransport.errors import DomainError, IdentityViolation, SingularSystem
from reltransport.maxwellian_iteration import mi_transport
from reltransport.special_integrals import GasParameters

# Self-generated regression value (gamma = 1, a = 0), chi / (tau p).
FROZEN_CHI_GAMMA1 = 0.8593896498352575


def inputs_at(gamma, a=0.0):
    return cem_inputs(*state_and_table(gamma, a))


def test_closed_forms_take_no_truncation_order():
    for fn in (cem_heat_conductivity, cem_bulk_viscosity, cem_shear_viscosity):
        params = inspect.signature(fn).parameters
        assert not {"n", "n_moments", "order"} & set(params)
    assert {f.name for f in dataclasses.fields(CemInputs)} == {
        "state", "theta02", "theta12", "theta_star11", "theta_star12", "theta_star13",
        "theta_star23", "ratios"}


def test_zero_relaxation_time():
    inp = inputs_at(3.0)
    gas = GasParameters(0.0, 0.0)
    assert cem_heat_conductivity(inp, gas) == 0.0
    assert cem_bulk_viscosity(inp, gas) == 0.0
    assert cem_shear_viscosity(inp, gas) == 0.0


def test_heat_conductivity_frozen_and_positive():
    inp = inputs_at(1.0)
    chi = cem_heat_conductivity(inp)
    assert chi > 0
    assert chi / inp.state.p == pytest.approx(FROZEN_CHI_GAMMA1, rel=1e-9)


def test_heat_conductivity_stays_bounded():
    ratio = cem_heat_conductivity(inputs_at(1000.0)) / cem_heat_conductivity(inputs_at(100.0))
    assert 0.1 <= ratio <= 10


def test_bulk_viscosity_close_to_moment_closures_at_large_gamma():
    state, table = state_and_table(1000.0)
    nu = cem_bulk_viscosity(cem_inputs(state, table))
    for n in (2, 3):
        assert mi_transport(state, table, n).nu == pytest.approx(nu, rel=0.05)


def test_bulk_variants_differ_by_temperature():
    inp = inputs_at(4.0)
    printed = cem_bulk_viscosity(inp, variant="as_printed")
    assert printed == pytest.approx(cem_bulk_viscosity(inp) * inp.state.temperature, rel=1e-14)
    with pytest.raises(DomainError):
        cem_bulk_viscosity(inp, variant="other")


def test_bulk_viscosity_rejects_degenerate_gram():
    inp = inputs_at(2.0)
    bad = dataclasses.replace(inp, ratios=dataclasses.replace(inp.ratios, gram_det=0.0))
    with pytest.raises(SingularSystem):
        cem_bulk_viscosity(bad)


def test_shear_viscosity_limit_and_quadrature_cross_check():
    assert cem_shear_viscosity(inputs_at(1000.0)) / inputs_at(1000.0).state.p == pytest.approx(1, rel=1e-2)
    gas = GasParameters(1.0, tau=0.7)
    state, _ = state_and_table(100.0, 1.0)
    inp = inputs_at(100.0, 1.0)
    expect = (100.0 * state.n_density) * theta_star_quadrature(2, state, gas) * 0.7 / 3
    assert cem_shear_viscosity(inp, gas) == pytest.approx(expect, rel=1e-10)


def test_shear_moment_approaches_limit_monotonically():
    mus, moments = [], []
    for g in (100.0, 300.0, 1000.0, 3000.0):
        inp = inputs_at(g)
        mus.append(cem_shear_viscosity(inp) / inp.state.p)
        moments.append(inp.theta_star23 * g * g / 3)
    for seq in (mus, moments):
        gaps = [abs(x - 1) for x in seq]
        assert gaps == sorted(gaps, reverse=True)


@pytest.mark.parametrize("a", [0.0, 1.0, 2.0])
def test_signs_on_grid(a):
    gas = GasParameters(a)
    for g in (0.1, 0.5, 2.0, 10.0, 100.0, 1000.0):
        res = cem_transport(*state_and_table(g, a), gas)
        assert res.chi > 0 and res.mu > 0
        assert res.nu > 0  # sign audit: no sign change found on this grid


def test_identities_hold():
    for g, a in ((0.1, 0.0), (1.0, 0.0), (100.0, 1.0), (1000.0, 0.0)):
        report = cem_identity_checks(inputs_at(g, a))
        assert report.worst < 1e-8
    assert cem_identity_checks(inputs_at(1.0)).heat_gradient < 1e-15


def test_identity_negative_control():
    inp = inputs_at(1.0)
    bad = dataclasses.replace(inp, theta12=inp.theta12 * 1.01)
    report = cem_identity_checks(bad, raise_on_failure=False)
    assert report.heat_gradient == pytest.approx(1e-2 / 1.01, rel=1e-6)
    with pytest.raises(IdentityViolation):
        cem_identity_checks(bad)


def test_inputs_reject_broken_shift_identity():
    state, table = state_and_table(2.0)
    bad = table.with_theta(star_updates={(1, 3): table.ts(1, 3) * (1 + 1e-6)})
    with pytest.raises(IdentityViolation):
        cem_inputs(state, bad)


def test_transport_result_is_tau_independent_when_reduced():
    state, table = state_and_table(2.0)
    r1 = cem_transport(state, table, GasParameters(0.0, 1.0))
    r0 = cem_transport(state, table, GasParameters(0.0, 0.0))
    assert r1.method == "CEM"
    assert (r0.nu, r0.chi, r0.mu) == (0.0, 0.0, 0.0)
    assert np.allclose(r0.reduced, r1.reduced, rtol=1e-15)
