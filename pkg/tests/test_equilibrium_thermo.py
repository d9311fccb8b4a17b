import numpy as np
import pytest

from reltransport.equilibrium_thermo import (
    RECURRENCE_TOL,
    build_theta_table,
    check_a7_identity,
    gradient_ratios,
    make_state,
    quadrature_reference,
    theta_direct,
    theta_star_direct,
    theta_star_quadrature,
)
from reltransport.errors import DomainError, MissingTheta, RecurrenceMismatch, SingularSystem
from reltransport.special_integrals import GasParameters

GRID = [(g, a) for a in (0.0, 1.0) for g in (0.1, 1.0, 10.0, 100.0)]


@pytest.mark.parametrize("gamma,a", GRID)
def test_state_invariants(gamma, a):
    state = make_state(gamma, n_density=2.5, gas=GasParameters(a))
    assert state.p * gamma == pytest.approx(2.5, rel=1e-15)
    assert state.omega > 1.0
    assert state.g1 > 0.0
    assert state.rho == 2.5 and state.energy == pytest.approx(2.5 * state.omega)


@pytest.mark.parametrize("a", [0.0, 1.0])
def test_nonrelativistic_energy(a):
    state = make_state(1000.0, gas=GasParameters(a))
    assert 1000.0 * (state.omega - 1) == pytest.approx(a + 2.5, rel=1e-2)
    # the reduced enthalpy defect carries the extra p/rho: (a + 7/2) p/rho
    assert state.g1 == pytest.approx((a + 3.5) * state.p / state.rho, rel=1e-2)


def test_state_gamma_domain():
    with pytest.raises(DomainError):
        make_state(0.01)
    with pytest.raises(DomainError):
        make_state(2e4)
    with pytest.raises(DomainError):
        make_state(1.0, n_density=0.0)


def test_theta_direct_closed_forms():
    state = make_state(3.0)
    assert theta_direct(0, 0, state) == 1.0
    assert theta_direct(1, 1, state) == pytest.approx(1 / 3, rel=1e-12)
    assert theta_direct(1, 2, state) == pytest.approx(3 * (1 / 3) * (state.omega + 1 / 3), rel=1e-12)
    assert theta_direct(0, 1, state) == pytest.approx(state.omega, rel=1e-14)
    with pytest.raises(DomainError):
        theta_direct(2, 2, state)


@pytest.mark.parametrize("gamma,a", GRID)
def test_dual_path(gamma, a):
    gas = GasParameters(a)
    state = make_state(gamma, gas=gas)
    rec = build_theta_table(state, gas, source="recurrence", validate="strict")
    ref = quadrature_reference(state, gas)
    for key, v in ref.items():
        if key[0] <= 2:
            assert rec.t(*key) == pytest.approx(v, rel=1e-6), key
    assert rec.t(0, 0) == 1.0
    assert rec.t(1, 1) == pytest.approx(1 / gamma, rel=1e-10)
    assert ref[(1, 1)] == pytest.approx(1 / gamma, rel=1e-10)
    assert rec.t(1, 2) == pytest.approx(ref[(1, 2)], rel=1e-8)
    assert all(v > 0 for v in rec.theta.values())
    assert all(v > 0 for v in rec.theta_star.values())


@pytest.mark.parametrize("gamma,a", GRID)
def test_shift_relation_against_own_quadrature(gamma, a):
    gas = GasParameters(a)
    state = make_state(gamma, gas=gas)
    table = build_theta_table(state, gas, source="quadrature")
    for (k, n), v in table.theta_star.items():
        if (k, n) in ((1, 1), (2, 3)):
            continue
        assert v == pytest.approx(theta_star_direct(k, n, state, gas), rel=1e-8), (k, n)
    assert table.ts(1, 2) == pytest.approx(3 * table.t(1, 1), rel=1e-12)
    assert table.ts(1, 3) == pytest.approx(2 * table.t(1, 2), rel=1e-12)


def test_theta_star_quadrature_paths():
    state = make_state(1.0)
    for k in (1, 2):
        assert theta_star_quadrature(k, state) == pytest.approx(
            theta_star_direct(k, 2 * k - 1, state), rel=1e-8)
    big = make_state(5000.0)
    assert theta_star_quadrature(2, big) * 5000.0 ** 2 / 3 == pytest.approx(1.0, rel=2e-3)
    with pytest.raises(DomainError):
        theta_star_quadrature(3, state)


def test_table_errors_and_lookup():
    state = make_state(1.0)
    table = build_theta_table(state, j_max=3, source="quadrature")
    with pytest.raises(MissingTheta):
        table.t(2, 6)
    with pytest.raises(MissingTheta):
        table.ts(3, 5)
    with pytest.raises(DomainError):
        build_theta_table(state, j_max=1)
    with pytest.raises(DomainError):
        build_theta_table(state, GasParameters(1.0))


def test_spot_validation_catches_a_bad_recurrence(monkeypatch):
    from reltransport import equilibrium_thermo as et

    real = et._recurrence_thetas

    def broken(*args):
        th = real(*args)
        return {k: v * (1 + 1e-3) if k != (0, 0) else v for k, v in th.items()}

    monkeypatch.setattr(et, "_recurrence_thetas", broken)
    with pytest.raises(RecurrenceMismatch):
        build_theta_table(make_state(2.0), validate="spot")
    assert RECURRENCE_TOL == 1e-6


def test_gradient_ratios():
    for gamma, a in GRID:
        state = make_state(gamma, gas=GasParameters(a))
        table = build_theta_table(state, GasParameters(a), source="quadrature")
        r = gradient_ratios(state, table)
        assert r.gram_det > 0
        rho, e, p = state.rho, state.energy, state.p
        th02, th12 = table.t(0, 2), table.t(1, 2)
        # direct 2x2 solve of the two balance contractions
        sol = np.linalg.solve([[rho, e], [e, rho * th02]], [-p, -rho * th12 / 3])
        assert r.r_time_lambda == pytest.approx(sol[0], rel=1e-9)
        assert r.r_time_lambda_u == pytest.approx(sol[1], rel=1e-9)
        assert p * r.r_space_lambda + 2 / 3 * rho * th12 == pytest.approx(0.0, abs=1e-12 * rho * th12)


def test_gradient_ratios_reject_nonpositive_gram():
    state = make_state(1.0)
    table = build_theta_table(state, source="quadrature")
    bad = table.with_theta({(0, 2): state.omega ** 2 * 0.5})
    with pytest.raises(SingularSystem):
        gradient_ratios(state, bad)


@pytest.mark.parametrize("gamma,a", [(1.0, 0.0), (100.0, 1.0), (0.1, 0.0), (10.0, 1.0)])
def test_a7_identity(gamma, a):
    gas = GasParameters(a)
    assert check_a7_identity(make_state(gamma, gas=gas), gas) < 1e-6


def test_a7_negative_control():
    state = make_state(1.0)
    residual = check_a7_identity(state, theta11_star=lambda g: 0.3)
    assert residual == pytest.approx(abs(state.omega - 1 / 0.3), rel=1e-6)
    assert residual > 0.1
