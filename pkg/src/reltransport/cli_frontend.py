"""Command-line interface: parameter sweeps, self-checks and theta-table dumps.

Settings are resolved with precedence command-line flag > file named by the
RTC_CONFIG environment variable (key=value lines) > built-in default.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .equilibrium_thermo import build_theta_table, make_state, theta_star_direct
from .errors import NonConvergence, TransportError
from .evaluate import METHODS, evaluate_methods
from .maxwellian_iteration import ENTRY_VARIANTS, SOLVERS
from .special_integrals import GAMMA_MAX, GAMMA_MIN, GasParameters, QuadratureConfig

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
CONFIG_ENV = "RTC_CONFIG"
CSV_COLUMNS = ("gamma", "a", "method", "nu", "chi", "mu", "nu_hat", "chi_hat", "mu_hat",
               "diag_min_pivot", "status")
STATUSES = ("ok", "singular", "nonconverged")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    gamma_min: float = 1.0
    gamma_max: float = 1000.0
    points: int = 4
    spacing: str = "log"
    a_values: tuple = (0.0,)
    methods: tuple = METHODS
    tau: float = 1.0
    n_density: float = 1.0
    entry_variant: str = "derived"
    output_format: str = "csv"
    rel_tol: float = 1e-10
    solver: str = "auto"
    workers: int = 1

    def validate(self) -> "SweepSpec":
        checks = [
            (GAMMA_MIN <= self.gamma_min < self.gamma_max <= GAMMA_MAX,
             f"need {GAMMA_MIN} <= gamma-min < gamma-max <= {GAMMA_MAX:g}"),
            (self.points >= 2, "points must be at least 2"),
            (self.spacing in ("log", "linear"), "spacing must be log or linear"),
            (len(self.a_values) > 0 and all(a > -1 for a in self.a_values),
             "a-values must be a nonempty list of numbers > -1"),
            (len(self.methods) > 0 and set(self.methods) <= set(METHODS),
             f"methods must be a nonempty subset of {','.join(METHODS)}"),
            (self.tau >= 0, "tau must be nonnegative"),
            (self.n_density > 0, "n-density must be positive"),
            (self.entry_variant in ENTRY_VARIANTS, "unknown entry variant"),
            (self.output_format in ("csv", "json"), "output-format must be csv or json"),
            (0 < self.rel_tol <= 1e-3, "rel-tol must lie in (0, 1e-3]"),
            (self.solver in SOLVERS, f"solver must be one of {','.join(SOLVERS)}"),
            (self.workers >= 1, "workers must be at least 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise UsageError(message)
        return self

    def gamma_grid(self) -> list:
        if self.spacing == "log":
            grid = np.geomspace(self.gamma_min, self.gamma_max, self.points)
        else:
            grid = np.linspace(self.gamma_min, self.gamma_max, self.points)
        grid[0], grid[-1] = self.gamma_min, self.gamma_max
        return [float(g) for g in grid]


@dataclass(frozen=True)
class OutputRow:
    gamma: float
    a: float
    method: str
    nu: float | None
    chi: float | None
    mu: float | None
    nu_hat: float | None
    chi_hat: float | None
    mu_hat: float | None
    diag_min_pivot: float | None
    status: str


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------

def _float_list(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None


def _method_list(text: str) -> tuple:
    chosen = [m.strip().lower() for m in text.split(",") if m.strip()]
    return tuple(m for m in METHODS if m in chosen) if set(chosen) <= set(METHODS) else tuple(chosen)


def _variant(text: str) -> str:
    return text.strip().lower().replace("-", "_")


_CONVERTERS = {
    "gamma_min": float, "gamma_max": float, "points": int, "spacing": str.lower,
    "a_values": _float_list, "methods": _method_list, "tau": float, "n_density": float,
    "entry_variant": _variant, "output_format": str.lower, "rel_tol": float,
    "solver": str.lower, "workers": int,
}


def read_config_file(path: str) -> dict:
    """Parse key=value lines; blank lines and '#' comments are ignored."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {CONFIG_ENV} file {path!r}: {exc}") from None
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_").lower()
        if key not in _CONVERTERS:
            raise UsageError(f"{path}:{number}: unknown setting {key!r}")
        out[key] = value
    return out


def resolve_spec(flags: dict, environ=None) -> SweepSpec:
    """Merge flags over the RTC_CONFIG file over defaults, then validate."""
    environ = os.environ if environ is None else environ
    raw = {}
    if environ.get(CONFIG_ENV):
        raw.update(read_config_file(environ[CONFIG_ENV]))
    raw.update({k: v for k, v in flags.items() if v is not None})
    values = {}
    for key, value in raw.items():
        try:
            values[key] = _CONVERTERS[key](value) if isinstance(value, str) else value
        except ValueError:
            raise UsageError(f"invalid value for {key.replace('_', '-')}: {value!r}") from None
    return SweepSpec(**values).validate()


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def _status(exc: TransportError) -> str:
    return "nonconverged" if isinstance(exc, NonConvergence) else "singular"


def _clean(x: float) -> float:
    return float(x) + 0.0  # folds -0.0 into 0.0


def _point_rows(args) -> list:
    gamma, a, spec = args
    gas = GasParameters(a, spec.tau)
    cfg = QuadratureConfig(rel_tol=spec.rel_tol)
    results = evaluate_methods(gamma, gas, spec.methods, spec.n_density, spec.entry_variant,
                               spec.solver, cfg)
    rows = []
    for method, res in results.items():
        if isinstance(res, TransportError):
            rows.append(OutputRow(gamma, a, method, None, None, None, None, None, None, None,
                                  _status(res)))
            continue
        vals = (res.nu, res.chi, res.mu) + tuple(res.nondimensional)
        if not all(math.isfinite(v) for v in vals):
            rows.append(OutputRow(gamma, a, method, None, None, None, None, None, None, None,
                                  "nonconverged"))
            continue
        pivot = res.diagnostics.get("min_pivot")
        pivot = None if pivot is None or not math.isfinite(pivot) else float(pivot)
        rows.append(OutputRow(gamma, a, method, *(_clean(v) for v in vals), pivot, "ok"))
    return rows


def run_sweep(spec: SweepSpec) -> list:
    jobs = [(g, a, spec) for g in spec.gamma_grid() for a in spec.a_values]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_point_rows, jobs))
    else:
        chunks = [_point_rows(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return format(value, ".12g")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows) -> str:
    return json.dumps([asdict(r) for r in rows], indent=1) + "\n"


def rows_from_json(text: str) -> list:
    names = [f.name for f in fields(OutputRow)]
    return [OutputRow(**{k: item[k] for k in names}) for item in json.loads(text)]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_sweep(spec: SweepSpec, out=None) -> int:
    out = out or sys.stdout
    rows = run_sweep(spec)
    out.write(rows_to_csv(rows) if spec.output_format == "csv" else rows_to_json(rows))
    failed = [r for r in rows if r.status != "ok"]
    for r in failed:
        print(f"row gamma={r.gamma:g} a={r.a:g} method={r.method}: {r.status}", file=sys.stderr)
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_selftest(level: str = "quick", output_format: str = "text",
                 inject_theta_fault: bool = False, out=None) -> int:
    from .selftest import run_full, run_quick

    out = out or sys.stdout
    runner = run_full if level == "full" else run_quick
    results = runner(inject_theta_fault=inject_theta_fault)
    if output_format == "json":
        out.write(json.dumps({"level": level, "passed": all(r.passed for r in results),
                              "checks": [r.as_dict() for r in results]}, indent=1) + "\n")
    else:
        for r in results:
            out.write(r.line() + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def theta_rows(gamma: float, a: float, j_max: int) -> list:
    """(label, recurrence-or-shifted value, quadrature value, relative gap) rows."""
    gas = GasParameters(a)
    state = make_state(gamma, gas=gas)
    rec = build_theta_table(state, gas, j_max=j_max, source="recurrence", validate="none")
    quad = build_theta_table(state, gas, j_max=j_max, source="quadrature")
    rows = []
    for (k, j), v in sorted(rec.theta.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        q = quad.t(k, j)
        rows.append((f"theta {k} {j}", v, q, abs(v - q) / abs(q)))
    for (k, n), v in sorted(quad.theta_star.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        d = theta_star_direct(k, n, state, gas)
        rows.append((f"theta* {k} {n}", v, d, abs(v - d) / abs(d)))
    return rows


def cmd_theta(gamma: float, a: float, j_max: int, out=None) -> int:
    out = out or sys.stdout
    out.write("kind,k,j,primary,quadrature,rel_gap\n")
    for label, v, q, gap in theta_rows(gamma, a, j_max):
        kind, k, j = label.split()
        out.write(f"{kind},{k},{j},{_fmt(v)},{_fmt(q)},{gap:.3g}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reltransport",
        description="Transport coefficients of a relativistic polyatomic gas.")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="tabulate nu, chi, mu over a gamma grid",
                        description="Unset options fall back to the RTC_CONFIG file, then defaults.")
    d = SweepSpec()
    sw.add_argument("--gamma-min", type=float, help=f"smallest gamma (default {d.gamma_min:g})")
    sw.add_argument("--gamma-max", type=float, help=f"largest gamma (default {d.gamma_max:g})")
    sw.add_argument("--points", type=int, help=f"grid points (default {d.points})")
    sw.add_argument("--spacing", choices=("log", "linear"), help="grid spacing (default log)")
    sw.add_argument("--a-values", help="comma-separated internal-state exponents (default 0)")
    sw.add_argument("--methods", help="comma-separated subset of mi2,mi3,cem (default all)")
    sw.add_argument("--tau", type=float, help="relaxation time (default 1)")
    sw.add_argument("--n-density", type=float, help="number density (default 1)")
    sw.add_argument("--entry-variant", type=_variant,
                    choices=ENTRY_VARIANTS, metavar="{as-printed,pattern-consistent,derived}",
                    help="matrix entries for the moment systems (default derived)")
    sw.add_argument("--output-format", choices=("csv", "json"), help="default csv")
    sw.add_argument("--rel-tol", type=float, help=f"quadrature tolerance (default {d.rel_tol:g})")
    sw.add_argument("--solver", choices=SOLVERS, help="moment-system solver (default auto)")
    sw.add_argument("--workers", type=int, help="worker processes (default 1)")

    st = sub.add_parser("selftest", help="run the built-in numerical checks")
    st.add_argument("--level", choices=("quick", "full"), default="quick")
    st.add_argument("--output-format", choices=("text", "json"), default="text")
    st.add_argument("--inject-theta-fault", action="store_true",
                    help="corrupt one theta entry (negative control; the run must fail)")

    th = sub.add_parser("theta", help="dump theta tables from both evaluation paths")
    th.add_argument("--gamma", type=float, required=True)
    th.add_argument("--a", type=float, default=0.0)
    th.add_argument("--j-max", type=int, default=6)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "sweep":
            flags = {k: v for k, v in vars(args).items() if k != "command"}
            return cmd_sweep(resolve_spec(flags))
        if args.command == "selftest":
            return cmd_selftest(args.level, args.output_format, args.inject_theta_fault)
        return cmd_theta(args.gamma, args.a, args.j_max)
    except UsageError as exc:
        print(f"reltransport: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        if isinstance(exc, ValueError):  # DomainError: bad arguments
            print(f"reltransport: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"reltransport: computation failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
