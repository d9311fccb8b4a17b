"""Equilibrium scalar tables theta_{k,j}, theta*_{k,n} and derived state quantities.

All quantities are in natural units (m = c = k_B = 1), so the temperature is
T = 1/gamma, the mass density equals the number density and p = n T.

theta_{k,j} is the coefficient of the k-th spatial-projector term in the
decomposition of the (j+1)-rank equilibrium moment, per unit mass density.
theta*_{k,n} is the analogous coefficient of the moment weighted by
1/(p.U (1 + I)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from math import comb
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError, MissingTheta, RecurrenceMismatch, SingularSystem
from .special_integrals import (
    DEFAULT_CONFIG,
    GAMMA_MAX,
    GAMMA_MIN,
    GasParameters,
    QuadratureConfig,
    weighted_many,
)

RECURRENCE_TOL = 1e-6
FD_REL_STEP = 1e-6
# Nominal relative uncertainty of table entries, by construction path.
QUADRATURE_NOISE_FLOOR = 1e-14
RECURRENCE_NOISE = 1e-9


@dataclass(frozen=True)
class ThermoState:
    gamma: float
    n_density: float
    omega: float
    p: float
    g1: float
    a_poly: float = 0.0

    @property
    def temperature(self) -> float:
        return 1.0 / self.gamma

    @property
    def rho(self) -> float:
        """Mass density; equals the number density for unit particle mass."""
        return self.n_density

    @property
    def energy(self) -> float:
        """Energy density e = rho * omega."""
        return self.n_density * self.omega


def _check_state_gamma(gamma: float):
    if not (GAMMA_MIN <= gamma <= GAMMA_MAX):
        raise DomainError(f"gamma must lie in [{GAMMA_MIN}, {GAMMA_MAX:g}], got {gamma}")


def _omega(gamma: float, gas: GasParameters, cfg: QuadratureConfig, level=None) -> float:
    num, den = weighted_many([(2, 2, 1), (2, 1, 0)], gamma, gas, cfg, level=level)
    return num.value / den.value


def make_state(gamma: float, n_density: float = 1.0, gas: GasParameters = GasParameters(),
               cfg: QuadratureConfig = DEFAULT_CONFIG) -> ThermoState:
    """Equilibrium point at coldness ``gamma`` and number density ``n_density``."""
    _check_state_gamma(gamma)
    if not n_density > 0.0:
        raise DomainError(f"n_density must be positive, got {n_density}")
    omega = _omega(gamma, gas, cfg)
    p = n_density / gamma
    g1 = (omega - 1.0) + 1.0 / gamma
    return ThermoState(float(gamma), float(n_density), omega, p, g1, gas.a_poly)


def _check_index(k: int, j: int):
    if not (j >= 0 and 0 <= 2 * k <= j + 1):
        raise DomainError(f"theta index needs 0 <= 2k <= j+1, got k={k}, j={j}")


def _theta_spec(k: int, j: int) -> tuple[int, int, int]:
    return (2 * k + 2, j + 1 - 2 * k, j)


def _theta_factor(k: int, j: int) -> float:
    return comb(j + 1, 2 * k) / (2 * k + 1)


def theta_direct(k: int, j: int, state: ThermoState, gas: GasParameters = GasParameters(),
                 cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """theta_{k,j} as a ratio of two weighted moments."""
    _check_index(k, j)
    num, den = weighted_many([_theta_spec(k, j), (2, 1, 0)], state.gamma, gas, cfg)
    return _theta_factor(k, j) * num.value / den.value


def theta_star_direct(k: int, n: int, state: ThermoState, gas: GasParameters = GasParameters(),
                      cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """theta*_{k,n} straight from its defining weighted moment (any n >= 1, 2k <= n+1)."""
    if not (n >= 1 and 0 <= 2 * k <= n + 1):
        raise DomainError(f"theta* index needs n >= 1 and 0 <= 2k <= n+1, got k={k}, n={n}")
    num, den = weighted_many([(2 * k + 2, n - 2 * k, n - 1), (2, 1, 0)], state.gamma, gas, cfg)
    return comb(n + 1, 2 * k) / (2 * k + 1) * num.value / den.value


def theta_star_quadrature(k: int, state: ThermoState, gas: GasParameters = GasParameters(),
                          cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """theta*_{k,2k-1} for k in {1, 2}: the entries not reachable from theta_{k,j}."""
    if k not in (1, 2):
        raise DomainError(f"theta_star_quadrature is defined for k in {{1, 2}}, got {k}")
    num, den = weighted_many([(2 * k + 2, -1, 2 * k - 2), (2, 1, 0)], state.gamma, gas, cfg)
    return num.value / den.value / (2 * k + 1)


@dataclass(frozen=True)
class ThetaTable:
    state: ThermoState
    theta: Mapping[tuple[int, int], float]
    theta_star: Mapping[tuple[int, int], float]
    source: str
    j_max: int
    noise: float = QUADRATURE_NOISE_FLOOR
    validated: tuple = field(default=())

    def t(self, k: int, j: int) -> float:
        try:
            return self.theta[(k, j)]
        except KeyError:
            raise MissingTheta(f"theta_{k},{j} not in table (j_max={self.j_max})") from None

    def ts(self, k: int, n: int) -> float:
        try:
            return self.theta_star[(k, n)]
        except KeyError:
            raise MissingTheta(f"theta*_{k},{n} not in table") from None

    def with_theta(self, updates: Mapping[tuple[int, int], float] | None = None,
                   star_updates: Mapping[tuple[int, int], float] | None = None,
                   source: str | None = None) -> "ThetaTable":
        """Copy with some entries replaced; used for sensitivity probes and fault injection."""
        theta = dict(self.theta)
        theta.update(updates or {})
        star = dict(self.theta_star)
        star.update(star_updates or {})
        return replace(self, theta=MappingProxyType(theta), theta_star=MappingProxyType(star),
                       source=source or self.source, validated=())


def _index_set(j_max: int):
    return [(k, j) for j in range(j_max + 1) for k in range((j + 1) // 2 + 1)]


def _quadrature_thetas(state, gas, cfg, j_max, level=None):
    keys = _index_set(j_max)
    specs = [_theta_spec(k, j) for k, j in keys] + [(2, 1, 0)]
    res = weighted_many(specs, state.gamma, gas, cfg, level=level)
    den = res[-1].value
    vals = {key: _theta_factor(*key) * r.value / den for key, r in zip(keys, res[:-1])}
    rel_err = max((r.est_error / r.value for r in res if math.isfinite(r.est_error)), default=0.0)
    return vals, res[-1].level, rel_err


def _theta0_row(gamma: float, j_top: int, gas, cfg, level: int) -> np.ndarray:
    """theta_{0,j} for j = 0..j_top by quadrature at a fixed level."""
    specs = [(2, j + 1, j) for j in range(j_top + 1)] + [(2, 1, 0)]
    res = weighted_many(specs, gamma, gas, cfg, level=level)
    return np.array([r.value for r in res[:-1]]) / res[-1].value


def _d_dgamma(f: Callable[[float], float], gamma: float, rel_step: float = FD_REL_STEP):
    """Central difference at steps h and h/2 combined by one Richardson stage."""
    h = gamma * rel_step
    d1 = (f(gamma + h) - f(gamma - h)) / (2 * h)
    d2 = (f(gamma + h / 2) - f(gamma - h / 2)) / h
    return (4 * d2 - d1) / 3


def _recurrence_thetas(state, gas, cfg, j_max, level):
    g = state.gamma
    # gamma-derivatives of theta_{0,j}, all j at once from four shifted node sets
    derivs = _d_dgamma(lambda x: _theta0_row(x, j_max - 1, gas, cfg, level), g)
    th = {(0, 0): 1.0}
    for j in range(j_max):
        # spatial-projector branches
        for h in range(1, (j + 1) // 2 + 1):
            th[(h, j + 1)] = (j + 2) / g * (th[(h, j)] + (j + 3 - 2 * h) / (2 * h) * th[(h - 1, j)])
        if j % 2 == 0:
            top = (j + 2) // 2
            if (top, j + 1) in th:  # never happens: the ranges are disjoint
                raise RecurrenceMismatch(f"branch overlap at theta_{top},{j + 1}")
            th[(top, j + 1)] = th[(j // 2, j)] / g
        # theta_{0,0} = 1 has zero derivative
        deriv = 0.0 if j == 0 else float(derivs[j])
        th[(0, j + 1)] = state.omega * th[(0, j)] - deriv
    return th


def _fill_star(theta, state, gas, cfg, j_max):
    star = {}
    for n in range(1, j_max + 2):
        for k in range(n // 2 + 1):
            if (k, n - 1) in theta:
                star[(k, n)] = (n + 1) / (n + 1 - 2 * k) * theta[(k, n - 1)]
    star[(1, 1)] = theta_star_quadrature(1, state, gas, cfg)
    star[(2, 3)] = theta_star_quadrature(2, state, gas, cfg)
    return star


def build_theta_table(state: ThermoState, gas: GasParameters = GasParameters(),
                      cfg: QuadratureConfig = DEFAULT_CONFIG, j_max: int = 6,
                      source: str = "recurrence", validate: str = "spot",
                      seed: int = 0) -> ThetaTable:
    """Tabulate theta_{k,j} for j <= j_max and the theta* entries derived from them.

    ``source="recurrence"`` climbs the recurrences in j (gamma-derivatives by
    Richardson-extrapolated central differences at a fixed quadrature level);
    ``source="quadrature"`` evaluates every entry from its weighted-moment
    ratio. ``validate`` is "none", "spot" (two seeded random entries are
    recomputed by quadrature) or "strict" (every entry).
    """
    if j_max < 2:
        raise DomainError(f"j_max must be >= 2, got {j_max}")
    if source not in ("recurrence", "quadrature"):
        raise DomainError(f"unknown theta source {source!r}")
    if validate not in ("none", "spot", "strict"):
        raise DomainError(f"unknown validation mode {validate!r}")
    if abs(state.a_poly - gas.a_poly) > 0.0:
        raise DomainError("state and gas disagree on a_poly")

    direct, level, rel_err = _quadrature_thetas(state, gas, cfg, j_max)
    if source == "quadrature":
        theta = direct
        noise = max(rel_err, QUADRATURE_NOISE_FLOOR)
    else:
        theta = _recurrence_thetas(state, gas, cfg, j_max, level)
        noise = RECURRENCE_NOISE

    checked = ()
    if validate != "none" and source == "recurrence":
        keys = _index_set(j_max)
        if validate == "spot":
            rng = np.random.default_rng(seed)
            keys = [keys[i] for i in sorted(rng.choice(len(keys), size=2, replace=False))]
        for key in keys:
            gap = abs(theta[key] - direct[key]) / abs(direct[key])
            if not gap <= RECURRENCE_TOL:
                raise RecurrenceMismatch(
                    f"theta_{key[0]},{key[1]}: recurrence {theta[key]!r} vs quadrature "
                    f"{direct[key]!r} (relative gap {gap:.3e})")
        checked = tuple(keys)

    bad = [key for key, v in theta.items() if not (math.isfinite(v) and v > 0)]
    if bad:
        raise RecurrenceMismatch(f"non-positive or non-finite theta entries: {bad}")
    star = _fill_star(theta, state, gas, cfg, j_max)
    return ThetaTable(state, MappingProxyType(theta), MappingProxyType(star), source, j_max,
                      noise, checked)


def quadrature_reference(state: ThermoState, gas: GasParameters = GasParameters(),
                         cfg: QuadratureConfig = DEFAULT_CONFIG, j_max: int = 6) -> dict:
    """All theta_{k,j} with j <= j_max by direct quadrature (for dual-path comparisons)."""
    return _quadrature_thetas(state, gas, cfg, j_max)[0]


@dataclass(frozen=True)
class GradientRatios:
    """Equilibrium time-derivative eliminations, per unit spatial divergence term.

    With H the spatial-projector contraction of the gradient of lambda_mu:
    U.d(lambda) = r_time_lambda H and U U.d(lambda_mu) = r_time_lambda_u H;
    the spatial gradient of lambda equals r_space_lambda times the
    U-contracted spatial gradient of lambda_mu.
    """

    r_time_lambda: float
    r_time_lambda_u: float
    r_space_lambda: float
    gram_det: float


def gradient_ratios(state: ThermoState, table: ThetaTable) -> GradientRatios:
    rho, e, p = state.rho, state.energy, state.p
    th02, th12 = table.t(0, 2), table.t(1, 2)
    gram = rho * rho * th02 - e * e
    if not gram > 0.0:
        raise SingularSystem(f"moment Gram determinant is not positive: {gram!r}")
    r1 = -(p * rho * th02 - e * rho * th12 / 3.0) / gram
    r2 = -(rho * rho * th12 / 3.0 - p * e) / gram
    r3 = -(2.0 / 3.0) * (rho / p) * th12
    return GradientRatios(r1, r2, r3, gram)


def check_a7_identity(state: ThermoState, gas: GasParameters = GasParameters(),
                      cfg: QuadratureConfig = DEFAULT_CONFIG,
                      theta11_star: Callable[[float], float] | None = None) -> float:
    """Residual of omega = 1/(gamma th) + d ln(th)/d gamma with th = theta*_{1,1}.

    ``theta11_star`` may replace the quadrature for negative controls.
    """
    g = state.gamma
    if theta11_star is None:
        level = weighted_many([(4, -1, 0), (2, 1, 0)], g, gas, cfg)[0].level

        def theta11_star(x):
            num, den = weighted_many([(4, -1, 0), (2, 1, 0)], x, gas, cfg, level=level)
            return num.value / den.value / 3.0

    th = theta11_star(g)
    dlog = _d_dgamma(lambda x: math.log(theta11_star(x)), g, rel_step=1e-4)
    return abs(state.omega - 1.0 / (g * th) - dlog)
