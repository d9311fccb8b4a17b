"""Large-gamma (nonrelativistic) behaviour and cross-method convergence.

Every asymptotic series used here is a power series in 1/gamma, so limits are
estimated by one Richardson stage assuming f(gamma) = L + c/gamma + O(1/gamma^2).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .equilibrium_thermo import ThermoState, build_theta_table, make_state
from .errors import DomainError, TransportError
from .evaluate import METHODS, evaluate_methods
from .special_integrals import DEFAULT_CONFIG, GasParameters, QuadratureConfig

SWEEP_GAMMA_MIN = 10.0
SWEEP_GAMMA_MAX = 1.0e4
EXPANSION_GAMMA_MIN = 10.0
DEFAULT_GRID = (10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0)


def internal_energy_moment(state: ThermoState, gas: GasParameters = GasParameters(),
                           cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Mean internal energy in units of T for the measure I**a exp(-I/T).

    With x = I/T the temperature scales out; the integrals are done numerically,
    with the algebraic endpoint behaviour x**a handled by the quadrature weight.
    """
    a = gas.a_poly
    if not a > -1.0:
        raise DomainError(f"internal-state exponent must exceed -1, got {a}")

    def moment(shift):
        head = integrate.quad(lambda x: math.exp(-x), 0.0, 1.0, weight="alg",
                              wvar=(a + shift, 0.0), epsabs=0.0, epsrel=cfg.rel_tol)[0]
        tail = integrate.quad(lambda x: x ** (a + shift) * math.exp(-x), 1.0, math.inf,
                              epsabs=0.0, epsrel=cfg.rel_tol)[0]
        return head + tail

    return moment(1.0) / moment(0.0)


def theta11_star_expansion(state: ThermoState, gas: GasParameters = GasParameters(),
                           order: int = 2, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Truncated large-gamma series of theta*_{1,1} (one or two terms)."""
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order}")
    g = state.gamma
    if g < EXPANSION_GAMMA_MIN:
        raise DomainError(f"the expansion needs gamma >= {EXPANSION_GAMMA_MIN:g}, got {g}")
    value = 1.0 / g
    if order == 2:
        value += (-internal_energy_moment(state, gas, cfg) - 2.5) / g ** 2
    return value


@dataclass(frozen=True)
class Extrapolation:
    value: float
    error: float  # change from the previous pair; inf when only two points exist

    @property
    def relative_error(self) -> float:
        return abs(self.error / self.value) if self.value else math.inf


def richardson(gammas, values) -> Extrapolation:
    """Limit of values(gamma) as gamma -> infinity, first order in 1/gamma.

    Uses the two largest finite points; the error bar is the shift relative
    to the estimate from the next pair down.
    """
    pts = [(g, v) for g, v in zip(gammas, values) if math.isfinite(v)]
    if len(pts) < 2:
        return Extrapolation(math.nan, math.inf)

    def pair(lo, hi):
        (g1, f1), (g2, f2) = lo, hi
        return (g2 * f2 - g1 * f1) / (g2 - g1)

    best = pair(pts[-2], pts[-1])
    if len(pts) < 3:
        return Extrapolation(best, math.inf)
    return Extrapolation(best, abs(best - pair(pts[-3], pts[-2])))


@dataclass
class LimitReport:
    gamma_grid: list
    a_poly: float
    nu_hat: dict = field(default_factory=dict)
    mu_hat: dict = field(default_factory=dict)
    chi_hat: dict = field(default_factory=dict)      # chi T / (tau p): vanishes like 1/gamma
    chi_reduced: dict = field(default_factory=dict)  # chi / (tau p): finite limit
    shear_moment_scaled: list = field(default_factory=list)  # gamma^2 theta*_{2,3} / 3
    energy_excess: list = field(default_factory=list)        # gamma (omega - 1)
    failures: list = field(default_factory=list)     # (gamma, method, message)

    def chi_ratios(self, method: str) -> list:
        """chi_hat(gamma_{i+1}) / chi_hat(gamma_i) along the grid."""
        v = self.chi_hat[method]
        return [b / a for a, b in zip(v, v[1:])]

    def pair_gaps(self, quantity: str) -> dict:
        """Pairwise relative gaps |x - y| / max(|x|, |y|) per grid point."""
        table = getattr(self, quantity)
        names = [m for m in METHODS if m in table]
        gaps = {}
        for i, m1 in enumerate(names):
            for m2 in names[i + 1:]:
                gaps[(m1, m2)] = [abs(x - y) / max(abs(x), abs(y))
                                  for x, y in zip(table[m1], table[m2])]
        return gaps

    def extrapolate(self, series) -> Extrapolation:
        return richardson(self.gamma_grid, series)

    @property
    def limits(self) -> dict:
        out = {"shear_moment_scaled": self.extrapolate(self.shear_moment_scaled),
               "energy_excess": self.extrapolate(self.energy_excess)}
        for name in ("nu_hat", "mu_hat", "chi_hat", "chi_reduced"):
            for method, series in getattr(self, name).items():
                out[f"{name}:{method}"] = self.extrapolate(series)
        return out

    @property
    def ok(self) -> bool:
        return not self.failures


def _sweep_point(args):
    gamma, gas, methods, cfg = args
    state = make_state(gamma, 1.0, gas, cfg)
    table = build_theta_table(state, gas, cfg, source="quadrature")
    return state, table.ts(2, 3), evaluate_methods(gamma, gas, methods, cfg=cfg)


def convergence_sweep(gamma_grid=DEFAULT_GRID, gas: GasParameters = GasParameters(),
                      cfg: QuadratureConfig = DEFAULT_CONFIG, methods=METHODS,
                      workers: int = 1) -> LimitReport:
    """All methods on a large-gamma grid, reduced to dimensionless ratios."""
    grid = [float(g) for g in gamma_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("gamma grid must be strictly increasing with at least two points")
    if grid[0] < SWEEP_GAMMA_MIN or grid[-1] > SWEEP_GAMMA_MAX:
        raise DomainError(f"gamma grid must lie in [{SWEEP_GAMMA_MIN:g}, {SWEEP_GAMMA_MAX:g}]")
    jobs = [(g, gas, tuple(methods), cfg) for g in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_point, jobs))
    else:
        points = [_sweep_point(j) for j in jobs]

    report = LimitReport(grid, gas.a_poly)
    for name in ("nu_hat", "mu_hat", "chi_hat", "chi_reduced"):
        getattr(report, name).update({m: [] for m in METHODS if m in methods})
    for gamma, (state, ts23, results) in zip(grid, points):
        report.shear_moment_scaled.append(ts23 * gamma * gamma / 3.0)
        report.energy_excess.append(gamma * (state.omega - 1.0))
        for method, res in results.items():
            if isinstance(res, TransportError):
                report.failures.append((gamma, method, str(res)))
                vals = (math.nan,) * 4
            else:
                nu, chi, mu = res.reduced
                vals = (nu, mu, chi * res.temperature, chi)
                if not all(np.isfinite(vals)):
                    report.failures.append((gamma, method, "non-finite coefficient"))
            for name, v in zip(("nu_hat", "mu_hat", "chi_hat", "chi_reduced"), vals):
                getattr(report, name)[method].append(v)
    return report
