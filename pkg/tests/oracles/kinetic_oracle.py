"""Independent rest-frame oracle for the moment-closure transport coefficients.

The full tensorial moment system (all 15 or 35 components) is assembled in
the fluid rest frame from scalar integrals of the equilibrium distribution
and solved as a square linear system, with no tensor decomposition into
scalar subproblems. Gradients are imposed one mode at a time and the
transport coefficients are read off the stress-energy deviation.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from reltransport.special_integrals import GasParameters, weighted_many

# exponent vector: (p0, px, py, pz, eps) with eps = 1 + I
Mono = tuple


def _dfact(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def _angular(kx: int, ky: int, kz: int) -> float:
    if kx % 2 or ky % 2 or kz % 2:
        return 0.0
    return _dfact(kx - 1) * _dfact(ky - 1) * _dfact(kz - 1) / _dfact(kx + ky + kz + 1)


class MomentOracle:
    """Equilibrium averages <(p0)^a px^b py^c pz^d (1+I)^e> per unit density."""

    def __init__(self, gamma: float, a_poly: float, max_p: int = 9, max_eps: int = 7):
        self.gamma = gamma
        specs = [(2, 1, 0)]
        for m in range(0, max_p + 1, 2):
            for k0 in range(0, max_p + 2):
                for c in range(0, max_eps + 1):
                    specs.append((2 + m, k0, c))
        vals = weighted_many(specs, gamma, GasParameters(a_poly=a_poly))
        self._w = {s: v.value for s, v in zip(specs, vals)}
        self._rho = self._w[(2, 1, 0)]

    def avg(self, mono: Mono) -> float:
        k0, kx, ky, kz, c = mono
        ang = _angular(kx, ky, kz)
        if ang == 0.0:
            return 0.0
        return ang * self._w[(2 + kx + ky + kz, k0, c)] / self._rho

    def avg_poly(self, poly: dict) -> float:
        return sum(coef * self.avg(m) for m, coef in poly.items())


def _mono(indices, eps: int) -> Mono:
    e = [0, 0, 0, 0, eps]
    for i in indices:
        e[i] += 1
    return tuple(e)


def _mul(a: Mono, b: Mono) -> Mono:
    return tuple(x + y for x, y in zip(a, b))


def _sym_indices(n: int):
    return list(itertools.combinations_with_replacement(range(4), n))


def _gradient_response(mo: MomentOracle, spatial: dict) -> np.ndarray:
    """Complete a gradient set with time derivatives from the equilibrium balance laws.

    Gradient variables per direction alpha: d lambda, d(1/T), dU^1..3 (20 total).
    `spatial` maps (kind, alpha, i) to values for alpha in 1..3.
    Returns the array grad[alpha, v] with v in (lam, beta, u1, u2, u3).
    """
    beta = mo.gamma
    grad = np.zeros((4, 5))
    for (kind, alpha, i), val in spatial.items():
        col = {"lam": 0, "beta": 1, "u": 1 + i}[kind]
        grad[alpha, col] = val

    def div_row(indices, eps):
        # d_alpha <p^alpha p^A eps^n f_E> as linear form in grad (flattened)
        row = np.zeros((4, 5))
        base = _mono(indices, eps)
        for alpha in range(4):
            pa = _mul(base, _mono([alpha], 0))
            row[alpha, 0] = -mo.avg(pa)
            row[alpha, 1] = -mo.avg(_mul(pa, _mono([0], 1)))
            for i in (1, 2, 3):
                row[alpha, 1 + i] = beta * mo.avg(_mul(pa, _mono([i], 1)))
        return row

    rows = [div_row((), 0)] + [div_row((b,), 1) for b in range(4)]
    # unknowns: time derivatives grad[0, :]
    a_mat = np.array([r[0] for r in rows])
    rhs = -np.array([np.sum(r[1:] * grad[1:]) for r in rows])
    grad[0] = np.linalg.solve(a_mat, rhs)
    return grad, div_row


def solve_moments(mo: MomentOracle, n_moments: int, spatial: dict, tau: float = 1.0):
    """Solve the linearised moment system; return the stress-energy deviation T - T_E."""
    grad, div_row = _gradient_response(mo, spatial)
    basis = [(idx, n) for n in range(n_moments + 1) for idx in _sym_indices(n)]
    basis_m = []
    for idx, n in basis:
        mult = len(set(itertools.permutations(idx)))
        basis_m.append((_mono(idx, n), float(mult)))
    nk = len(basis_m)
    theta12 = 3.0 * mo.avg(_mono((0, 1, 1), 2))

    def response(test: Mono) -> np.ndarray:
        return np.array([-mult * mo.avg(_mul(test, m)) for m, mult in basis_m])

    heat = [response(_mono((0, i), 1)) for i in (1, 2, 3)]
    rows, rhs = [], []
    for n in range(2, n_moments + 1):
        for idx in _sym_indices(n):
            test = _mul(_mono(idx, n), _mono((0,), 0))
            row = response(test)
            for i in (1, 2, 3):
                row = row - (3.0 / theta12) * mo.avg(_mul(test, _mono((i,), 1))) * heat[i - 1]
            rows.append(row)
            rhs.append(-tau * np.sum(div_row(idx, n) * grad))
    for mu in range(4):
        rows.append(response(_mono((mu,), 0)))
        rhs.append(0.0)
    rows.append(response(_mono((0, 0), 1)))
    rhs.append(0.0)
    a_mat = np.array(rows)
    assert a_mat.shape == (nk, nk)
    coef = np.linalg.solve(a_mat, np.array(rhs))
    dev = np.zeros((4, 4))
    for a_, b_ in itertools.product(range(4), repeat=2):
        dev[a_, b_] = response(_mono((a_, b_), 1)) @ coef
    return dev, grad


@lru_cache(maxsize=None)
def oracle_coefficients(gamma: float, a_poly: float, n_moments: int, tau: float = 1.0):
    """(nu, chi, mu) per unit density, natural units, from the full moment system."""
    mo = MomentOracle(gamma, a_poly)
    temp = 1.0 / gamma
    # bulk: isotropic expansion with unit divergence
    dev, _ = solve_moments(mo, n_moments, {("u", i, i): 1.0 / 3.0 for i in (1, 2, 3)}, tau)
    nu = -np.trace(dev[1:, 1:]) / 3.0
    # heat: unit gradient of the scalar multiplier along x; at fixed multiplier a
    # temperature gradient is balanced by the induced acceleration
    dev, grad = solve_moments(mo, n_moments, {("lam", 1, 0): 1.0}, tau)
    d_t = -temp**2 * grad[1, 1]
    accel = grad[0, 2]
    chi = -dev[0, 1] / (d_t + temp * accel)
    # shear: dU^x/dy = dU^y/dx = 1
    dev, _ = solve_moments(mo, n_moments, {("u", 2, 1): 1.0, ("u", 1, 2): 1.0}, tau)
    mu = -dev[1, 2] / 2.0
    return nu, chi, mu
