"""Maxwellian-iteration transport coefficients for the 14- and 35-field closures.

Each coefficient comes from an overdetermined linear system in the
non-equilibrium Lagrange-multiplier components. The last row of every system
carries the unknown flux (bulk stress, heat flux or shear stress); demanding
that the augmented matrix be singular fixes that flux as a ratio of
cofactors. ``n_moments`` 3 is the 35-field system, 2 the 14/15-field one,
whose matrices are minors of the former.

Three sets of matrix entries are available (``entry_variant``):

* ``as_printed``: the entry lists exactly as published;
* ``pattern_consistent``: the same, with the three entries whose index
  pattern breaks the structure of their row (a41, a42, a75) repaired;
* ``derived``: entries re-derived from the kinetic model. Starts from
  ``pattern_consistent`` and differs from it in ten further places; it is the
  only variant whose coefficients are positive and agree with a direct
  momentum-space solution.

Two solvers exist for the ``derived`` physics. ``cofactor`` evaluates the
determinant formulas on the theta table; at large gamma the bulk system
becomes catastrophically ill-conditioned because every theta_{0,k} tends to 1.
``centered`` solves the same Galerkin problem in a basis of centred energy
polynomials with entries computed by direct quadrature, which stays well
conditioned for every gamma. ``auto`` uses the cofactor path whenever its
estimated error is small and the centred one otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np
import scipy.linalg

from .equilibrium_thermo import (
    GradientRatios,
    ThermoState,
    ThetaTable,
    gradient_ratios,
)
from .errors import DomainError, SingularSystem
from .special_integrals import DEFAULT_CONFIG, GasParameters, QuadratureConfig, equilibrium_grid

KINDS = ("bulk", "heat", "shear")
ENTRY_VARIANTS = ("as_printed", "pattern_consistent", "derived")
SOLVERS = ("auto", "cofactor", "centered")
METHOD_NAMES = {2: "MI_N2", 3: "MI_N3"}

# Rows/columns (0-based) of the 35-field matrices kept in the 14-field minors.
N2_ROWS = {"bulk": (0, 2, 4, 5, 6), "heat": (0, 3, 4), "shear": (0, 2)}
N2_COLS = {"bulk": (0, 1, 2, 4), "heat": (0, 1), "shear": (0,)}

GRADIENT_BASIS = {
    "bulk": ("U.d(lambda)", "UU.d(lambda_mu)", "h.d(lambda_mu)"),
    "heat": ("h.d(lambda)", "hU.d(lambda_mu)"),
    "shear": ("h<h.d(lambda_mu)>",),
}

AUTO_ERROR_THRESHOLD = 1e-10
_PROBE_STEP = 1e-12
_PROBE_SAMPLES = 3


@dataclass(frozen=True)
class MiSystem:
    kind: str
    n_moments: int
    coeff: np.ndarray
    rhs_decomp: np.ndarray
    row_labels: tuple
    col_labels: tuple
    basis: tuple
    entry_variant: str

    @property
    def augmented_size(self) -> int:
        return self.coeff.shape[0]


def _check_variant(entry_variant: str):
    if entry_variant not in ENTRY_VARIANTS:
        raise DomainError(f"entry_variant must be one of {ENTRY_VARIANTS}, got {entry_variant!r}")


def _bulk_full(t: Callable[[int, int], float], variant: str):
    q = 1.0 / t(1, 2)
    fixed = variant != "as_printed"
    derived = variant == "derived"
    a = np.empty((7, 6))
    for k in range(1, 5):
        a[0, k - 1] = t(0, k + 1) + 3 * t(0, 3) * q * t(0, k)
        a[1, k - 1] = t(0, k + 2) + 3 * t(0, 4) * q * t(0, k)
    a[0, 4] = t(1, 4) / 10 + 0.5 * t(0, 3) * t(1, 3) * q
    a[0, 5] = t(1, 5) / 5 + 0.9 * t(0, 3) * t(1, 4) * q
    a[1, 4] = t(1, 5) / 15 + 0.5 * t(0, 4) * t(1, 3) * q
    a[1, 5] = t(1, 6) / 7 + 0.9 * t(0, 4) * t(1, 4) * q

    a[2] = [
        (t(1, 2) if derived else t(1, 1)) + 1.5 * t(0, 1) * t(1, 3) * q,
        (t(1, 3) / 2 if derived else t(1, 3) / 3) + 1.5 * t(0, 2) * t(1, 3) * q,
        0.3 * t(1, 4) + 1.5 * t(0, 3) * t(1, 3) * q,
        (t(1, 5) / 5 if derived else 4 / 15 * t(1, 5)) + 1.5 * t(0, 4) * t(1, 3) * q,
        t(2, 4) / 3 + 0.25 * t(1, 3) ** 2 * q,
        t(2, 5) / 3 + 0.45 * t(1, 4) * t(1, 3) * q,
    ]
    kappa4 = t(1, 4) if fixed else t(0, 4)
    a[3] = [
        0.5 * t(1, 3) + 0.9 * t(0, 1) * kappa4 * q,
        0.3 * t(1, 4) + 0.9 * t(0, 2) * kappa4 * q,
        0.2 * t(1, 5) + 0.9 * t(0, 3) * t(1, 4) * q,
        t(1, 6) / 7 + 0.9 * t(0, 4) * t(1, 4) * q,
        t(2, 5) / 9 + 0.15 * t(1, 3) * t(1, 4) * q,
        t(2, 6) / 7 + 0.27 * t(1, 4) ** 2 * q,
    ]
    a[4] = [t(0, 0), t(0, 1), t(0, 2), t(0, 3), t(1, 2) / 3, t(1, 3) / 2]
    a[5] = [t(0, 1), t(0, 2), t(0, 3), t(0, 4), t(1, 3) / 6, 0.3 * t(1, 4)]
    a[6] = [3 * t(1, 1), t(1, 2), t(1, 3) / 2, 0.3 * t(1, 4),
            5 / 3 * (t(2, 3) if fixed else t(2, 5)), t(2, 4)]

    # rhs_i = -tau * (alpha U.d(lambda) + beta UU.d(lambda_mu) + delta h.d(lambda_mu))
    alpha = [t(0, 2), t(0, 3), t(1, 2), 0.5 * t(1, 3)]
    beta = [t(0, 3), t(0, 4), 0.5 * t(1, 3), 0.3 * t(1, 4)]
    delta = [t(1, 3) / 6, (0.1 if derived else 0.3) * t(1, 4), 5 / 3 * t(2, 3), t(2, 4) / 3]
    rhs = np.zeros((7, 3))
    rhs[:4] = -np.column_stack([alpha, beta, delta])
    rows = ("UU n=2", "UUU n=3", "h n=2", "hU n=3", "mass", "energy", "bulk stress")
    cols = ("X1 lambda", "X2 U.lambda_1", "X3 UU.lambda_2", "X4 UUU.lambda_3",
            "X5 h.lambda_2", "X6 hU.lambda_3")
    return a, rhs, rows, cols


def _heat_full(t: Callable[[int, int], float], variant: str):
    q = 1.0 / t(1, 2)
    derived = variant == "derived"
    b = np.empty((5, 4))
    b[0] = [0.0 if derived else -t(1, 3) / 3,
            -t(1, 4) / 5 + t(1, 3) ** 2 / 6 * q,
            -t(1, 5) / 5 + 0.15 * t(1, 3) * t(1, 4) * q,
            -t(2, 5) / 15 + 0.1 * t(1, 3) * t(2, 4) * q]
    b[1] = [0.0 if derived else -t(1, 4) / 5,
            -2 / 15 * t(1, 5) + 0.1 * t(1, 4) * t(1, 3) * q,
            -t(1, 6) / 7 + 0.09 * t(1, 4) ** 2 * q,
            -t(2, 6) / 35 + 0.06 * t(1, 4) * t(2, 4) * q]
    b[2] = [0.0 if derived else -2 / 3 * t(2, 4),
            (-2 / 9 if derived else -4 / 15) * t(2, 5) + t(2, 4) * t(1, 3) / 3 * q,
            -t(2, 6) / 7 + 0.3 * t(1, 4) * t(2, 4) * q,
            -t(3, 6) / 5 + 0.2 * t(2, 4) ** 2 * q]
    b[3] = [t(1, 1), 2 / 3 * t(1, 2), 0.5 * t(1, 3), t(2, 3)]
    b[4] = [t(1, 2) / 3, t(1, 3) / 3, 0.3 * t(1, 4), t(2, 4) / 5]
    # rhs_i = +tau * (alpha h.d(lambda) + beta hU.d(lambda_mu))
    rhs = np.zeros((5, 2))
    rhs[:3] = [[t(1, 2) / 3, t(1, 3) / 3],
               [t(1, 3) / 6, t(1, 4) / 5],
               [(5 / 3 if derived else 1.0) * t(2, 3), 2 / 3 * t(2, 4)]]
    rows = ("hU n=2", "hUU n=3", "hhh n=3", "particle flux", "heat flux")
    cols = ("X1 h.lambda_1", "X2 hU.lambda_2", "X3 hUU.lambda_3", "X4 hhh.lambda_3")
    return b, rhs, rows, cols


def _shear_full(t: Callable[[int, int], float], variant: str):
    c = np.array([
        [2 / 15 * t(2, 4), 2 / 15 * t(2, 5)],
        [2 / 45 * t(2, 5), (2 / 35 if variant == "derived" else 1 / 35) * t(2, 6)],
        [2 / 3 * t(2, 3), 2 / 5 * t(2, 4)],
    ])
    rhs = np.array([[-2 / 3 * t(2, 3)], [-2 / 15 * t(2, 4)], [0.0]])
    rows = ("hh n=2", "hhU n=3", "shear stress")
    cols = ("X1 hh.lambda_2", "X2 hhU.lambda_3")
    return c, rhs, rows, cols


_BUILDERS = {"bulk": _bulk_full, "heat": _heat_full, "shear": _shear_full}


def assemble(kind: str, n_moments: int, state: ThermoState, table: ThetaTable,
             entry_variant: str = "derived") -> MiSystem:
    """Coefficient matrix and gradient decomposition of one MI subsystem."""
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    if n_moments not in (2, 3):
        raise DomainError(f"n_moments must be 2 or 3, got {n_moments}")
    _check_variant(entry_variant)
    coeff, rhs, rows, cols = _BUILDERS[kind](table.t, entry_variant)
    if n_moments == 2:
        r, c = N2_ROWS[kind], N2_COLS[kind]
        coeff = coeff[np.ix_(r, c)]
        rhs = rhs[list(r)]
        rows = tuple(rows[i] for i in r)
        cols = tuple(cols[j] for j in c)
    if not np.all(np.isfinite(coeff)):
        raise SingularSystem(f"non-finite entries in the {kind} matrix")
    coeff.setflags(write=False)
    rhs.setflags(write=False)
    return MiSystem(kind, n_moments, coeff, rhs, rows, cols, GRADIENT_BASIS[kind], entry_variant)


def _lu(m: np.ndarray):
    # exactly singular minors are legitimate here; their zero pivot is the answer
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return scipy.linalg.lu_factor(m, check_finite=True)


def determinant(matrix) -> float:
    """Determinant through LU factorisation with partial pivoting."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("determinant needs a square matrix")
    if m.shape[0] == 0:
        return 1.0
    lu, piv = _lu(m)
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    return float((-1) ** swaps * np.prod(np.diag(lu)))


def cofactor(matrix, row: int, col: int) -> float:
    """(-1)^(row+col) times the minor with ``row`` and ``col`` removed (0-based)."""
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if m.ndim != 2 or m.shape[1] != n:
        raise DomainError("cofactor needs a square matrix")
    if not (0 <= row < n and 0 <= col < n):
        raise DomainError(f"index ({row}, {col}) out of range for a {n}x{n} matrix")
    minor = np.delete(np.delete(m, row, axis=0), col, axis=1)
    return (-1) ** (row + col) * determinant(minor)


def _drivers(kind: str, ratios: GradientRatios) -> np.ndarray:
    if kind == "bulk":
        return np.array([ratios.r_time_lambda, ratios.r_time_lambda_u, 1.0])
    if kind == "heat":
        return np.array([ratios.r_space_lambda, 1.0])
    return np.array([1.0])


def _prefactor(kind: str, state: ThermoState) -> float:
    """Maps the cofactor sum to the coefficient per unit relaxation time."""
    T = state.temperature
    if kind == "bulk":
        return state.rho / (3.0 * T)
    if kind == "heat":
        return state.rho / (2.0 * T * T)
    return state.rho / (2.0 * T)


@dataclass(frozen=True)
class CofactorSolution:
    value_per_tau: float
    cofactor_sum: float
    cofactors: np.ndarray
    multipliers: np.ndarray
    rc_residual: float
    min_pivot: float


_EXTENDED_DPS = 50


def _cofactors_extended(a: np.ndarray) -> list:
    """Last-column cofactors of the augmented matrix, in extended precision.

    The entries are taken exactly from their binary values, so the only error
    left in the cofactor ratios is the one inherited from the inputs.
    """
    m = a.shape[0]
    last = m - 1
    out = []
    for i in range(m):
        minor = mpmath.matrix(np.delete(a, i, axis=0).tolist())
        out.append((-1) ** (i + last) * mpmath.det(minor))
    return out


def solve_cofactor(system: MiSystem, state: ThermoState, ratios: GradientRatios,
                   cfg: QuadratureConfig = DEFAULT_CONFIG) -> CofactorSolution:
    """Flux coefficient from the singularity of the augmented matrix."""
    a = system.coeff
    m = a.shape[0]
    last = m - 1
    drive = system.rhs_decomp @ _drivers(system.kind, ratios)
    with mpmath.workdps(_EXTENDED_DPS):
        cof = _cofactors_extended(a)
        if not (mpmath.isfinite(cof[last]) and abs(cof[last]) >= cfg.abs_floor):
            raise SingularSystem(f"{system.kind} system: denominator cofactor {cof[last]}")
        s_ext = mpmath.fsum(mpmath.mpf(float(drive[i])) * cof[i] for i in range(last)) / cof[last]
        s = float(s_ext)
        # complete the right-hand side with the flux entry implied by singularity
        b = drive.copy()
        b[last] = -s
        aug = mpmath.matrix(np.column_stack([a, b]).tolist())
        scale = mpmath.fsum(abs(mpmath.mpf(float(b[i])) * cof[i]) for i in range(m))
        rc = float(abs(mpmath.det(aug)) / scale) if scale else 0.0
        cof = np.array([float(c) for c in cof])
    x = np.linalg.lstsq(a, b, rcond=None)[0]
    lu, _ = _lu(a[:last])
    piv = np.abs(np.diag(lu))
    return CofactorSolution(_prefactor(system.kind, state) * s, s, cof, x, rc,
                            float(piv.min() / piv.max()))


# ---------------------------------------------------------------------------
# Well-conditioned route: centred Galerkin solve with quadrature entries.
# ---------------------------------------------------------------------------

def _centered_level(gamma: float, a_poly: float, level: int, cfg: QuadratureConfig):
    grid = equilibrium_grid(gamma, GasParameters(a_poly), cfg, level=level)
    p0 = grid.p0.ravel()
    w = grid.weight.ravel() / np.dot(grid.weight.ravel(), p0)  # per-particle averages
    psq, eps, E = grid.momentum_sq.ravel(), grid.lift.ravel(), grid.excitation.ravel()
    one = np.ones_like(E)
    # gamma |p|^2 eps^2 rescaled to O(1) at both ends of the gamma range
    xs = psq * eps ** 2 * gamma ** 2 / (1.0 + gamma)

    def gram(rows, cols, weight):
        return (np.asarray(rows) * weight) @ np.asarray(cols).T

    # bulk: polynomials in the energy; the mass and energy rows are satisfied exactly
    wp0 = w * p0
    wpe = w * psq * eps
    m2 = gram([one, E], [one, E], wp0)
    euler = np.linalg.solve(m2, -np.array([wpe @ one, wpe @ E]) / 3.0)

    def bulk(basis):
        basis = np.asarray(basis)
        mat = gram(basis, basis, wp0)
        rhs = -(basis @ wp0 * euler[0] + basis @ (wp0 * E) * euler[1] + basis @ wpe / 3.0)
        rhs[:2] = 0.0
        c = np.linalg.solve(mat, rhs)
        stress = -(c @ (basis @ wpe)) / 3.0
        return stress * gamma * gamma  # nu / (tau p) at unit density

    # heat: the rest-frame velocity part drops out of covariances
    wv = w * psq * eps / 3.0
    ww = wv * p0 * eps
    mv, mw = wv.sum(), ww.sum()

    def cov(rows, cols, weight, mean):
        rows, cols = np.asarray(rows), np.asarray(cols)
        return gram(rows, cols, weight) / mean - np.outer(rows @ weight, cols @ weight) / mean ** 2

    def heat(trial, test):
        mat = mw * cov(test, trial, ww, mw)
        rhs = -2.0 * mv * cov([E], test, wv, mv)[0] / gamma
        c = np.linalg.solve(mat, rhs)
        flux = -mv * (cov([E], trial, wv, mv)[0] @ c) / gamma
        return 0.5 * flux * gamma ** 3  # chi / (tau p) = flux / (2 T^2 p)

    ws4 = w * psq ** 2 * eps ** 3

    def shear(basis):
        basis = np.asarray(basis)
        mat = gram(basis, basis, ws4 * p0 * eps)
        load = basis @ ws4
        c = np.linalg.solve(mat, 2.0 * gamma * load)
        return gamma * (c @ load) / 30.0

    return {
        2: np.array([bulk([one, E, E * E, xs]), heat([E], [E]), shear([one])]),
        3: np.array([bulk([one, E, E * E, E ** 3, xs, xs * E]),
                     heat([E, E * E, xs], [E, p0 * eps * E, xs]),
                     shear([one, E])]),
    }


@lru_cache(maxsize=256)
def _centered_cached(gamma: float, a_poly: float, cfg: QuadratureConfig):
    lo = _centered_level(gamma, a_poly, 0, cfg)
    hi = _centered_level(gamma, a_poly, 1, cfg)
    err = {n: np.abs(hi[n] - lo[n]) / np.abs(hi[n]) for n in (2, 3)}
    return hi, err


def centered_reduced(state: ThermoState, n_moments: int,
                     cfg: QuadratureConfig = DEFAULT_CONFIG):
    """(nu, chi, mu) / (tau p) from the centred solver, with quadrature error estimates."""
    vals, err = _centered_cached(state.gamma, state.a_poly, cfg)
    return vals[n_moments].copy(), err[n_moments].copy()


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransportResult:
    nu: float
    chi: float
    mu: float
    method: str
    reduced: tuple  # (nu, chi, mu) / (tau p), independent of tau
    temperature: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def nondimensional(self) -> tuple:
        """(nu/(tau p), chi T/(tau p), mu/(tau p))."""
        r = self.reduced
        return (r[0], r[1] * self.temperature, r[2])


def _probe_error(kind, system_factory, state, table, cofsum, cfg):
    """Relative error of the cofactor sum implied by the table's noise level."""
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(_PROBE_SAMPLES):
        bump = {key: v * (1.0 + _PROBE_STEP * rng.uniform(-1, 1)) for key, v in table.theta.items()}
        tab = table.with_theta(bump)
        st = replace(state, omega=state.omega * (1.0 + _PROBE_STEP * rng.uniform(-1, 1)))
        try:
            sol = solve_cofactor(system_factory(st, tab), st, gradient_ratios(st, tab), cfg)
            worst = max(worst, abs(sol.cofactor_sum - cofsum))
        except (SingularSystem, np.linalg.LinAlgError):
            return math.inf
    return worst / abs(cofsum) * table.noise / _PROBE_STEP if cofsum else math.inf


def mi_transport(state: ThermoState, table: ThetaTable, n_moments: int,
                 gas: GasParameters = GasParameters(), entry_variant: str = "derived",
                 solver: str = "auto", cfg: QuadratureConfig = DEFAULT_CONFIG) -> TransportResult:
    """Bulk viscosity, heat conductivity and shear viscosity by Maxwellian iteration."""
    _check_variant(entry_variant)
    if solver not in SOLVERS:
        raise DomainError(f"solver must be one of {SOLVERS}, got {solver!r}")
    if solver == "centered" and entry_variant != "derived":
        raise DomainError("the centred solver implements the derived entries only")
    if n_moments not in (2, 3):
        raise DomainError(f"n_moments must be 2 or 3, got {n_moments}")
    ratios = gradient_ratios(state, table)
    p = state.p
    reduced, diags = [], {}
    centred = None
    for idx, kind in enumerate(KINDS):
        def factory(st, tab, kind=kind):
            return assemble(kind, n_moments, st, tab, entry_variant)

        system = factory(state, table)
        sol = solve_cofactor(system, state, ratios, cfg)
        est = _probe_error(kind, factory, state, table, sol.cofactor_sum, cfg)
        value = sol.value_per_tau / p
        used = "cofactor"
        centred_err = None
        if entry_variant == "derived" and (
                solver == "centered" or (solver == "auto" and not est <= AUTO_ERROR_THRESHOLD)):
            if centred is None:
                centred = centered_reduced(state, n_moments, cfg)
            value = float(centred[0][idx])
            centred_err = float(centred[1][idx])
            used = "centered"
        reduced.append(value)
        diags[kind] = {
            "solver": used,
            "min_pivot": sol.min_pivot,
            "rc_residual": sol.rc_residual,
            "cofactor_ratios": tuple(sol.cofactors[:-1] / sol.cofactors[-1]),
            "multipliers": tuple(sol.multipliers),
            "cofactor_value": sol.value_per_tau / p,
            "est_rel_error": est,
            "centered_quadrature_error": centred_err,
        }
    tau = gas.tau
    nu, chi, mu = (tau * p * r for r in reduced)
    diags["min_pivot"] = min(diags[k]["min_pivot"] for k in KINDS)
    diags["entry_variant"] = entry_variant
    return TransportResult(nu, chi, mu, METHOD_NAMES[n_moments], tuple(reduced),
                           state.temperature, diags)
