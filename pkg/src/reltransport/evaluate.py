"""Evaluate several transport methods at one equilibrium point, sharing the theta table."""

from __future__ import annotations

from .chapman_enskog import cem_transport
from .equilibrium_thermo import build_theta_table, make_state
from .errors import DomainError, TransportError
from .maxwellian_iteration import TransportResult, mi_transport
from .special_integrals import DEFAULT_CONFIG, GasParameters, QuadratureConfig

METHODS = ("mi2", "mi3", "cem")


def evaluate_methods(gamma: float, gas: GasParameters = GasParameters(),
                     methods=METHODS, n_density: float = 1.0,
                     entry_variant: str = "derived", solver: str = "auto",
                     cfg: QuadratureConfig = DEFAULT_CONFIG) -> dict:
    """Map each method name to its TransportResult, or to the TransportError it raised.

    Results are returned in the canonical method order regardless of the
    order requested.
    """
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise DomainError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
    out: dict[str, TransportResult | TransportError] = {}
    try:
        state = make_state(gamma, n_density, gas, cfg)
        table = build_theta_table(state, gas, cfg, source="quadrature")
    except TransportError as exc:
        return {m: exc for m in METHODS if m in methods}
    for name in METHODS:
        if name not in methods:
            continue
        try:
            if name == "cem":
                out[name] = cem_transport(state, table, gas)
            else:
                out[name] = mi_transport(state, table, 2 if name == "mi2" else 3, gas,
                                         entry_variant=entry_variant, solver=solver, cfg=cfg)
        except TransportError as exc:
            out[name] = exc
    return out
