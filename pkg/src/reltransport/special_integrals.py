"""Relativistic kinetic integrals J_{m,n}(gamma) and their internal-energy moments.

    J_{m,n}(gamma) = int_0^inf exp(-gamma cosh s) cosh^n(s) sinh^m(s) ds

Every value is carried in the rescaled form ``exp(gamma) * J`` so that the
large-gamma (nonrelativistic) regime never underflows. Downstream quantities
are ratios taken at equal gamma, where the common factor cancels.

The quadrature is a fixed-node composite Gauss rule: for a given refinement
level the nodes depend smoothly on gamma, so finite differences in gamma are
not polluted by adaptive re-partitioning noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import DomainError, NonConvergence

GAMMA_MIN = 0.05
GAMMA_MAX = 1.0e4
SERIES_GAMMA_MIN = 5.0

_NODES_PER_PANEL = 16
_BASE_S_PANELS = 8
# Polynomial growth allowance used to size truncation points. Fixed so that the
# node set does not depend on which moments are requested together.
_MIN_POWER_ALLOWANCE = 16

J21_SERIES_COEFFS = (1 / 4, 15 / 32, 105 / 512, -315 / (32 * 128))
J4M1_SERIES_COEFFS = (3 / 4, -15 / 32)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_floor: float = 1e-300
    s_cut_decades: float = 40.0
    max_subdivisions: int = 64

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise DomainError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if not self.abs_floor > 0.0:
            raise DomainError("abs_floor must be positive")
        if not self.s_cut_decades > 0.0:
            raise DomainError("s_cut_decades must be positive")
        if self.max_subdivisions < _BASE_S_PANELS:
            raise DomainError(f"max_subdivisions must be >= {_BASE_S_PANELS}")

    @property
    def cut(self) -> float:
        """Truncation depth in e-folds."""
        return self.s_cut_decades * math.log(10.0)


@dataclass(frozen=True)
class GasParameters:
    """Gas model in natural units (m = c = k_B = 1); phi(I) = I**a_poly."""

    a_poly: float = 0.0
    tau: float = 1.0
    units: str = "natural"

    def __post_init__(self):
        if not self.a_poly > -1.0:
            raise DomainError(f"a_poly must exceed -1, got {self.a_poly}")
        if not self.tau >= 0.0:
            raise DomainError(f"tau must be nonnegative, got {self.tau}")
        if self.units != "natural":
            raise DomainError(f"unsupported unit system {self.units!r}")


@dataclass(frozen=True)
class WeightedMoment:
    """exp(gamma) * int_0^inf J*_{m,n} (1+I)^p phi(I) dI, with an error estimate."""

    m: int
    n: int
    p_power: int
    value: float
    est_error: float
    level: int = 0


DEFAULT_CONFIG = QuadratureConfig()


def _check_gamma(gamma: float, lo: float = 0.0):
    if not (gamma > lo and math.isfinite(gamma)):
        raise DomainError(f"gamma must be finite and > {lo}, got {gamma}")


def _check_mn(m: int, n: int):
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if m + n < -1:
        raise DomainError(f"m + n must be >= -1, got m={m}, n={n}")
    if n < 0 and m < 2:
        raise DomainError("negative n is only supported together with m >= 2")


@lru_cache(maxsize=None)
def _legendre_unit(q: int):
    t, w = roots_legendre(q)
    return 0.5 * (t + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def _jacobi_unit(q: int, a: float):
    # int_0^1 u^a f(u) du  ~  sum w_i f(u_i)
    t, w = roots_jacobi(q, 0.0, a)
    return 0.5 * (t + 1.0), w / 2.0 ** (a + 1.0)


def _s_truncation(g: np.ndarray, power: int, cut: float) -> np.ndarray:
    # Solve g (cosh s - 1) >= cut + power * s approximately, smoothly in g.
    s0 = np.arccosh(1.0 + cut / g)
    return np.arccosh(1.0 + (cut + power * s0) / g)


def _inner_scaled(pairs: Sequence[tuple[int, int]], g: np.ndarray, level: int,
                  cfg: QuadratureConfig) -> dict[tuple[int, int], np.ndarray]:
    """exp(g) J_{m,n}(g) for every (m, n) in ``pairs`` and every entry of ``g``."""
    power = max([_MIN_POWER_ALLOWANCE] + [m + abs(n) for m, n in pairs])
    panels = _BASE_S_PANELS * 2 ** level
    u, w = _legendre_unit(_NODES_PER_PANEL)
    edges = np.arange(panels)[:, None]
    unit_nodes = ((edges + u[None, :]) / panels).ravel()
    unit_weights = np.tile(w / panels, panels)

    s_max = _s_truncation(g, power, cfg.cut)
    s = s_max[:, None] * unit_nodes[None, :]
    ws = s_max[:, None] * unit_weights[None, :]
    log_c = np.log(np.cosh(s))
    log_sh = np.log(np.sinh(s))
    # cosh(s) - 1 without cancellation near s = 0
    base = -2.0 * g[:, None] * np.sinh(0.5 * s) ** 2
    out = {}
    for m, n in pairs:
        expo = base + n * log_c + (m * log_sh if m else 0.0)
        out[(m, n)] = np.sum(ws * np.exp(expo), axis=1)
    return out


def _x_rule(gamma: float, a: float, p_max: int, level: int, cfg: QuadratureConfig):
    """Nodes/weights for int_0^inf exp(-x) x^a F(x) dx, weight x^a included."""
    cut = cfg.cut
    x_max = cut + (max(a, 0.0) + max(p_max, _MIN_POWER_ALLOWANCE) + 1.0) * math.log1p(cut)
    # First panel scales with the near-singularity of the integrand at x = -gamma.
    x0 = min(gamma / (1.0 + gamma), x_max)
    edges = [0.0, x0]
    while edges[-1] < x_max:
        edges.append(min(edges[-1] + min(edges[-1], 4.0), x_max))
    edges = np.asarray(edges)
    if level:
        fine = []
        k = 2 ** level
        for lo, hi in zip(edges[:-1], edges[1:]):
            fine.extend(lo + (hi - lo) * np.arange(k) / k)
        fine.append(edges[-1])
        edges = np.asarray(fine)
    q = _NODES_PER_PANEL
    uj, wj = _jacobi_unit(q, float(a))
    ul, wl = _legendre_unit(q)
    xs = [edges[1] * uj]
    ws = [edges[1] ** (a + 1.0) * wj]
    lo, hi = edges[1:-1], edges[2:]
    width = (hi - lo)[:, None]
    x_rest = lo[:, None] + width * ul[None, :]
    xs.append(x_rest.ravel())
    ws.append((width * wl[None, :] * x_rest ** a).ravel())
    x = np.concatenate(xs)
    wx = np.concatenate(ws) * np.exp(-x)
    return x, wx


def _weighted_values(specs: Sequence[tuple[int, int, int]], gamma: float, a: float,
                     level: int, cfg: QuadratureConfig) -> np.ndarray:
    pairs = sorted({(m, n) for m, n, _ in specs})
    p_max = max(p for _, _, p in specs)
    x, wx = _x_rule(gamma, a, p_max, level, cfg)
    inner = _inner_scaled(pairs, gamma + x, level, cfg)
    lift = np.log1p(x / gamma)
    scale = gamma ** (-(a + 1.0))
    vals = np.empty(len(specs))
    for i, (m, n, p) in enumerate(specs):
        vals[i] = scale * np.sum(wx * np.exp(p * lift) * inner[(m, n)])
    return vals


def weighted_many(specs: Iterable[tuple[int, int, int]], gamma: float,
                  gas: GasParameters, cfg: QuadratureConfig = DEFAULT_CONFIG,
                  level: int | None = None) -> list[WeightedMoment]:
    """Evaluate several weighted moments on one shared node set.

    With ``level`` given, that refinement level is used as is (no error
    estimate, ``est_error`` is nan). Otherwise levels are raised until two
    successive levels agree to ``cfg.rel_tol``.
    """
    specs = [(int(m), int(n), int(p)) for m, n, p in specs]
    if not specs:
        return []
    _check_gamma(gamma)
    for m, n, p in specs:
        _check_mn(m, n)
        if p < 0:
            raise DomainError(f"p_power must be >= 0, got {p}")
    a = gas.a_poly
    if level is not None:
        vals = _weighted_values(specs, gamma, a, level, cfg)
        return [WeightedMoment(m, n, p, float(v), math.nan, level)
                for (m, n, p), v in zip(specs, vals)]

    lvl = 0
    coarse = _weighted_values(specs, gamma, a, lvl, cfg)
    while True:
        if _BASE_S_PANELS * 2 ** (lvl + 1) > cfg.max_subdivisions:
            raise NonConvergence(
                f"quadrature did not reach rel_tol={cfg.rel_tol} at gamma={gamma} "
                f"within {cfg.max_subdivisions} subdivisions")
        fine = _weighted_values(specs, gamma, a, lvl + 1, cfg)
        err = np.abs(fine - coarse)
        ok = err <= cfg.rel_tol * np.abs(fine) + cfg.abs_floor
        if np.all(ok) and np.all(fine > 0):
            return [WeightedMoment(m, n, p, float(v), float(e), lvl + 1)
                    for (m, n, p), v, e in zip(specs, fine, err)]
        lvl += 1
        coarse = fine


def weighted_j(m: int, n: int, p_power: int, gamma: float, gas: GasParameters,
               cfg: QuadratureConfig = DEFAULT_CONFIG) -> WeightedMoment:
    """exp(gamma) * int_0^inf J_{m,n}(gamma (1+I)) (1+I)^p I^a dI.

    The I-integral is carried out in x = gamma I, so the outer weight is
    exp(-x) x^a and the normalisation of phi is fixed to one.
    """
    return weighted_many([(m, n, p_power)], gamma, gas, cfg)[0]


def j_mn(m: int, n: int, gamma: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
         scaled: bool = True) -> float:
    """J_{m,n}(gamma); returned as exp(gamma) * J unless ``scaled`` is False."""
    _check_gamma(gamma)
    _check_mn(m, n)
    g = np.array([float(gamma)])

    def at(level):
        return float(_inner_scaled([(m, n)], g, level, cfg)[(m, n)][0])

    lvl = 0
    coarse = at(lvl)
    while True:
        if _BASE_S_PANELS * 2 ** (lvl + 1) > cfg.max_subdivisions:
            raise NonConvergence(f"J_{m},{n} did not converge at gamma={gamma}")
        fine = at(lvl + 1)
        if abs(fine - coarse) <= cfg.rel_tol * abs(fine) + cfg.abs_floor:
            break
        lvl += 1
        coarse = fine
    return fine if scaled else fine * math.exp(-gamma)


def j21_series(gamma: float, order: int = 4, scaled: bool = True) -> float:
    """Large-gamma expansion of J_{2,1}, truncated after ``order`` terms."""
    if not 1 <= order <= len(J21_SERIES_COEFFS):
        raise DomainError(f"order must be in 1..{len(J21_SERIES_COEFFS)}")
    if not gamma >= SERIES_GAMMA_MIN:
        raise DomainError(f"series needs gamma >= {SERIES_GAMMA_MIN}, got {gamma}")
    bracket = sum(c / gamma ** (k + 1) for k, c in enumerate(J21_SERIES_COEFFS[:order]))
    val = 2.0 * math.sqrt(2.0 * math.pi) * gamma ** -0.5 * bracket
    return val if scaled else val * math.exp(-gamma)


def j4m1_series(gamma: float, order: int = 2, scaled: bool = True) -> float:
    """Large-gamma expansion of J_{4,-1}, truncated after ``order`` terms."""
    if not 1 <= order <= len(J4M1_SERIES_COEFFS):
        raise DomainError(f"order must be in 1..{len(J4M1_SERIES_COEFFS)}")
    if not gamma >= SERIES_GAMMA_MIN:
        raise DomainError(f"series needs gamma >= {SERIES_GAMMA_MIN}, got {gamma}")
    bracket = sum(c / gamma ** k for k, c in enumerate(J4M1_SERIES_COEFFS[:order]))
    val = 2.0 * math.sqrt(2.0 * math.pi) * gamma ** -2.5 * bracket
    return val if scaled else val * math.exp(-gamma)


def j_mn_substituted(m: int, n: int, gamma: float, rel_tol: float = 1e-12) -> float:
    """exp(gamma) J_{m,n} through cosh s = 1 + x/gamma and adaptive quadrature.

    A structurally different route from :func:`j_mn`; used as a cross-check.
    """
    from scipy.integrate import quad

    _check_gamma(gamma)
    if m < 1:
        raise DomainError("the substituted form needs m >= 1")
    half = (m - 1) / 2.0

    def f(x):
        y = x / gamma
        return (1.0 + y) ** n * (y * (2.0 + y)) ** half

    # x^{(m-1)/2} endpoint behaviour is left to the adaptive rule.
    val, _ = quad(lambda x: math.exp(-x) * f(x), 0.0, np.inf,
                  epsabs=0.0, epsrel=rel_tol, limit=500)
    return val / gamma


@dataclass(frozen=True)
class EquilibriumGrid:
    """Tensor-product nodes in (internal energy, rapidity) for rest-frame averages.

    ``weight`` carries the invariant measure d^3p/p0, the equilibrium factor
    and the internal-energy density, all up to one common constant. Averages
    are normalised per particle, i.e. divided by the mean of ``p0``.
    """

    gamma: float
    level: int
    weight: np.ndarray
    p0: np.ndarray
    momentum_sq: np.ndarray
    lift: np.ndarray
    excitation: np.ndarray

    def mean(self, values) -> float:
        """Per-particle average of ``values`` (an array broadcastable to the grid)."""
        w = self.weight
        return float(np.sum(w * values) / np.sum(w * self.p0))


def equilibrium_grid(gamma: float, gas: GasParameters, cfg: QuadratureConfig = DEFAULT_CONFIG,
                     level: int = 1, power: int = 24) -> EquilibriumGrid:
    """Build the node set used by the moment solvers.

    ``excitation`` is gamma * ((1 + I) p0 - 1), the total kinetic plus internal
    energy in units of the temperature, evaluated without cancellation.
    ``power`` bounds the polynomial growth of the integrands to be averaged.
    """
    _check_gamma(gamma)
    x, wx = _x_rule(gamma, gas.a_poly, power, level, cfg)
    g = gamma + x
    panels = _BASE_S_PANELS * 2 ** level
    u, w = _legendre_unit(_NODES_PER_PANEL)
    unit_nodes = ((np.arange(panels)[:, None] + u[None, :]) / panels).ravel()
    unit_weights = np.tile(w / panels, panels)
    s_max = _s_truncation(g, max(power, _MIN_POWER_ALLOWANCE), cfg.cut)
    s = s_max[:, None] * unit_nodes[None, :]
    ws = s_max[:, None] * unit_weights[None, :]
    half = np.sinh(0.5 * s) ** 2
    sh2 = np.sinh(s) ** 2
    weight = wx[:, None] * ws * np.exp(-2.0 * g[:, None] * half) * sh2
    lift = np.broadcast_to((1.0 + x / gamma)[:, None], s.shape)
    excitation = x[:, None] + 2.0 * g[:, None] * half
    return EquilibriumGrid(float(gamma), int(level), weight, np.cosh(s), sh2,
                           np.array(lift), excitation)
