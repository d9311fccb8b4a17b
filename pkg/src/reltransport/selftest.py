"""Built-in numerical self-checks, shared by the command line and the test suite."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .equilibrium_thermo import (
    ThetaTable,
    build_theta_table,
    check_a7_identity,
    make_state,
    quadrature_reference,
    theta_star_direct,
)
from .maxwellian_iteration import (
    ENTRY_VARIANTS,
    KINDS,
    N2_COLS,
    N2_ROWS,
    assemble,
    mi_transport,
)
from .special_integrals import (
    DEFAULT_CONFIG,
    GasParameters,
    QuadratureConfig,
    j21_series,
    j4m1_series,
    j_mn,
)

THETA_GRID = (0.1, 1.0, 10.0, 100.0)
A_GRID = (0.0, 1.0)
DUAL_PATH_TOL = 1e-6
SHIFT_TOL = 1e-8
A7_TOL = 1e-6
RC_TOL = 1e-9
FAULT_FACTOR = 1.0 + 1e-3


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _timed(name, fn):
    start = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start)


def _inject_fault(table: ThetaTable) -> ThetaTable:
    """Corrupt one theta entry without recomputing the entries derived from it."""
    return table.with_theta({(1, 2): table.t(1, 2) * FAULT_FACTOR}, source="corrupted")


def _tables(cfg, fault):
    for a in A_GRID:
        gas = GasParameters(a)
        for g in THETA_GRID:
            state = make_state(g, gas=gas, cfg=cfg)
            table = build_theta_table(state, gas, cfg, source="recurrence", validate="none")
            if fault:
                table = _inject_fault(table)
            yield gas, state, table


def check_series(cfg: QuadratureConfig = DEFAULT_CONFIG):
    worst = 0.0
    for g in (20.0, 50.0, 100.0):
        exact = j_mn(2, 1, g, cfg)
        rel = abs(j21_series(g, 4) - exact) / exact
        # first omitted term is not printed; the last printed one bounds the remainder
        bound = (315 / 4096) / g ** 4 / (1 / (4 * g))
        if not rel < bound:
            return False, f"J21 at gamma={g}: relative gap {rel:.2e} exceeds {bound:.2e}"
        worst = max(worst, rel)
    rel50 = abs(j21_series(50.0, 4) - j_mn(2, 1, 50.0, cfg)) / j_mn(2, 1, 50.0, cfg)
    rel4 = abs(j4m1_series(50.0, 2) - j_mn(4, -1, 50.0, cfg)) / j_mn(4, -1, 50.0, cfg)
    ok = rel50 < 1e-4 and rel4 < 2e-3
    return ok, f"J21 gap {rel50:.2e} at gamma=50 (max {worst:.2e}); J4,-1 gap {rel4:.2e}"


def check_dual_path(cfg: QuadratureConfig = DEFAULT_CONFIG, fault: bool = False):
    worst, where = 0.0, None
    for gas, state, table in _tables(cfg, fault):
        ref = quadrature_reference(state, gas, cfg, j_max=6)
        for key, val in ref.items():
            if key[0] > 2:
                continue
            gap = abs(table.t(*key) - val) / val
            if gap > worst:
                worst, where = gap, (state.gamma, gas.a_poly, key)
    return worst < DUAL_PATH_TOL, f"max relative gap {worst:.2e} at (gamma, a, (k, j)) = {where}"


def check_shift_relation(cfg: QuadratureConfig = DEFAULT_CONFIG, fault: bool = False):
    """theta* from shifted theta entries against its own defining quadrature."""
    worst, where = 0.0, None
    for gas, state, table in _tables(cfg, fault):
        for k, n in ((0, 1), (0, 3), (1, 2), (1, 3), (1, 4), (2, 4), (2, 5)):
            shifted = (n + 1) / (n + 1 - 2 * k) * table.t(k, n - 1)
            direct = theta_star_direct(k, n, state, gas, cfg)
            gap = abs(shifted - direct) / direct
            if gap > worst:
                worst, where = gap, (state.gamma, gas.a_poly, (k, n))
        for got, want in ((table.ts(1, 2), 3 * table.t(1, 1)), (table.ts(1, 3), 2 * table.t(1, 2))):
            gap = abs(got - want) / want
            if gap > worst:
                worst, where = gap, (state.gamma, gas.a_poly, "shift identity")
    return worst < SHIFT_TOL, f"max relative gap {worst:.2e} at {where}"


def check_a7(cfg: QuadratureConfig = DEFAULT_CONFIG):
    worst = 0.0
    for a in A_GRID:
        gas = GasParameters(a)
        for g in THETA_GRID:
            worst = max(worst, check_a7_identity(make_state(g, gas=gas, cfg=cfg), gas, cfg))
    return worst < A7_TOL, f"max residual {worst:.2e}"


def check_submatrix(cfg: QuadratureConfig = DEFAULT_CONFIG):
    gas = GasParameters(0.0)
    state = make_state(1.0, gas=gas, cfg=cfg)
    table = build_theta_table(state, gas, cfg, source="quadrature")
    for variant in ENTRY_VARIANTS:
        for kind in KINDS:
            full = assemble(kind, 3, state, table, variant)
            small = assemble(kind, 2, state, table, variant)
            cut = full.coeff[np.ix_(N2_ROWS[kind], N2_COLS[kind])]
            if not np.array_equal(small.coeff, cut):
                return False, f"{kind} ({variant}) minor differs"
            if not np.array_equal(small.rhs_decomp, full.rhs_decomp[list(N2_ROWS[kind])]):
                return False, f"{kind} ({variant}) right-hand side differs"
    return True, "all kinds and entry variants match exactly"


def check_rouche_capelli(cfg: QuadratureConfig = DEFAULT_CONFIG):
    worst = 0.0
    for a in A_GRID:
        gas = GasParameters(a)
        for g in THETA_GRID:
            state = make_state(g, gas=gas, cfg=cfg)
            table = build_theta_table(state, gas, cfg, source="quadrature")
            for n in (2, 3):
                for variant in ENTRY_VARIANTS:
                    res = mi_transport(state, table, n, gas, variant, solver="cofactor", cfg=cfg)
                    worst = max(worst, max(res.diagnostics[k]["rc_residual"] for k in KINDS))
    return worst < RC_TOL, f"max residual {worst:.2e}"


def run_quick(cfg: QuadratureConfig = DEFAULT_CONFIG, inject_theta_fault: bool = False) -> list:
    return [
        _timed("series agreement", lambda: check_series(cfg)),
        _timed("dual-path theta", lambda: check_dual_path(cfg, inject_theta_fault)),
        _timed("shift relation", lambda: check_shift_relation(cfg, inject_theta_fault)),
        _timed("derivative identity", lambda: check_a7(cfg)),
        _timed("submatrix identity", lambda: check_submatrix(cfg)),
        _timed("determinant consistency", lambda: check_rouche_capelli(cfg)),
    ]


def _full_checks(cfg):
    from .nonrel_limits import convergence_sweep

    out = []
    reports = {a: convergence_sweep(gas=GasParameters(a), cfg=cfg) for a in A_GRID}
    for a, rep in reports.items():
        lim = rep.limits

        def mu_limit(lim=lim):
            e = lim["mu_hat:cem"]
            return abs(e.value - 1) < 1e-3, f"{e.value:.7f} +/- {e.error:.1e}"

        def moment_limit(lim=lim):
            e = lim["shear_moment_scaled"]
            return abs(e.value - 1) < 1e-3, f"{e.value:.7f} +/- {e.error:.1e}"

        def energy(rep=rep, a=a):
            i = rep.gamma_grid.index(1000.0)
            gap = abs(rep.energy_excess[i] - (a + 2.5))
            return gap < 5e-3, f"gamma (omega - 1) - (a + 5/2) = {gap:.2e} at gamma=1000"

        def cross(rep=rep):
            idx = [rep.gamma_grid.index(g) for g in (10.0, 100.0, 1000.0)]
            for q in ("mu_hat", "chi_reduced"):
                for pair, gaps in rep.pair_gaps(q).items():
                    g = [gaps[i] for i in idx]
                    if not (g[0] > g[1] > g[2] and g[2] < 0.05):
                        return False, f"{q} {pair}: gaps {g}"
            return True, "mu and chi gaps shrink over gamma 10, 100, 1000 and are < 5% at 1000"

        out += [
            _timed(f"mu_hat extrapolates to 1 +/- 1e-3 (a={a:g})", mu_limit),
            _timed(f"scaled theta*_23 extrapolates to 1 +/- 1e-3 (a={a:g})", moment_limit),
            _timed(f"energy excess limit (a={a:g})", energy),
            _timed(f"cross-method convergence (a={a:g})", cross),
        ]
    return out


def run_full(cfg: QuadratureConfig = DEFAULT_CONFIG, inject_theta_fault: bool = False) -> list:
    return run_quick(cfg, inject_theta_fault) + _full_checks(cfg)
