"""
Batch front-end: a JSON run configuration in, CSV or JSON reports out.

Subcommands: ``brackets``, ``classify``, ``solve``, ``spectrum`` and
``eta-conditions``.  Output is byte-deterministic for a given configuration.

Exit status: 0 success, 2 configuration error, 3 numerical failure, 4 chart
discrepancy detected under ``--strict``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import platform
import sys
from dataclasses import dataclass
from importlib import metadata

import numpy as np
import scipy
import sympy as sp

from . import __version__
from . import constraints as K
from . import symbolic as S
from .errors import ConfigError, DiracWindowError
from .profiles import DERIVATIVE_CAP, VARIANTS, EtaProfile, make_profile, to_epsilon
from .radial import Constants, chart_discrepancy, classify, epsilon_ode, integrate_numeric
from .spectrum import (eta_boundary_conditions, frobenius_coeffs, series_value, spectrum_sweep,
                       taylor_coeffs)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DISCREPANCY = 0, 2, 3, 4

HBAR_SI = 1.054571817e-34      # J s
ELECTRON_MASS_SI = 9.1093837015e-31  # kg
SPEED_OF_LIGHT_SI = 299792458.0

STRICT_GRID = np.linspace(0.3, 1.5, 49)
STRICT_TOL = 1e-9

# default configuration; every accepted key appears here
DEFAULTS = {
    "profile": {"variant": "zero", "parameters": {}, "rho_c": 1.0, "chart": None,
                "normalize_to": None, "cap": DERIVATIVE_CAP},
    "quantum": {"l_min": 0, "l_max": 0, "k": [0, 1], "energy": 2.0},
    "solver": {"truncation": 6, "series_degree": 9, "tolerance": 1e-10, "epsilon_range": [0.85, 1.15],
               "samples": 31, "points": [0.0, 1.0], "r_samples": [0.5, 1.0, 2.0],
               "phase_point": {}, "conditions_order": 2, "workers": None},
    "constants": {"hbar": None, "m": None, "units": "natural", "window_factor": 1.0},
    "output": {"format": "json", "path": None, "precision": 12},
}

# keys whose value is a free-form mapping (not checked key by key)
_OPEN_MAPS = {"profile.parameters", "solver.phase_point"}


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration (a plain nested dict plus typed accessors)."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict | None) -> RunConfig:
        merged = _merge(DEFAULTS, raw or {}, "")
        cfg = cls(merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> RunConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        return cls.from_dict(raw)

    def __getitem__(self, section):
        return self.data[section]

    # -- validation --------------------------------------------------------
    def validate(self):
        p, q, s, c, o = (self.data[k] for k in ("profile", "quantum", "solver", "constants", "output"))
        if p["variant"] not in VARIANTS:
            raise ConfigError("profile.variant", f"unknown variant {p['variant']!r}; expected one of {sorted(VARIANTS)}")
        _positive(p["rho_c"], "profile.rho_c")
        _integer(p["cap"], "profile.cap", minimum=3)
        for key in ("l_min", "l_max"):
            _integer(q[key], f"quantum.{key}", minimum=0)
        if q["l_min"] > q["l_max"]:
            raise ConfigError("quantum.l_min", "l_min must not exceed l_max")
        if not isinstance(q["k"], list) or not q["k"]:
            raise ConfigError("quantum.k", "expected a nonempty list of exponents")
        for i, k in enumerate(q["k"]):
            if k not in (0, 1) or isinstance(k, bool):
                raise ConfigError(f"quantum.k[{i}]", "boundary exponents are 0 and 1")
        _number(q["energy"], "quantum.energy")
        _integer(s["truncation"], "solver.truncation", minimum=0)
        if s["truncation"] > p["cap"] - 3:
            raise ConfigError("solver.truncation", f"must be at most profile.cap - 3 = {p['cap'] - 3}")
        _integer(s["series_degree"], "solver.series_degree", minimum=0)
        if s["series_degree"] > p["cap"] - 1:
            raise ConfigError("solver.series_degree", f"must be at most profile.cap - 1 = {p['cap'] - 1}")
        _positive(s["tolerance"], "solver.tolerance")
        rng = s["epsilon_range"]
        if not (isinstance(rng, list) and len(rng) == 2 and all(_is_number(x) for x in rng) and rng[0] < rng[1]):
            raise ConfigError("solver.epsilon_range", "expected [lo, hi] with lo < hi")
        if rng[0] <= 0 <= rng[1]:
            raise ConfigError("solver.epsilon_range", "range must exclude the irregular point eps = 0")
        _integer(s["samples"], "solver.samples", minimum=2)
        for key in ("points", "r_samples"):
            if not isinstance(s[key], list) or not all(_is_number(x) for x in s[key]):
                raise ConfigError(f"solver.{key}", "expected a list of numbers")
        for name, val in s["phase_point"].items():
            try:
                sym = S.var(name)
            except KeyError:
                raise ConfigError(f"solver.phase_point.{name}", "not a canonical variable") from None
            if sym == S.r:
                raise ConfigError("solver.phase_point.r", "r is taken from solver.r_samples")
            _number(val, f"solver.phase_point.{name}")
        _integer(s["conditions_order"], "solver.conditions_order", minimum=2)
        if s["conditions_order"] > p["cap"] - 2:
            raise ConfigError("solver.conditions_order", f"must be at most profile.cap - 2 = {p['cap'] - 2}")
        if s["workers"] is not None:
            _integer(s["workers"], "solver.workers", minimum=1)
        if c["units"] not in ("natural", "SI"):
            raise ConfigError("constants.units", "expected 'natural' or 'SI'")
        for key in ("hbar", "m"):
            if c[key] is not None:
                _positive(c[key], f"constants.{key}")
        _positive(c["window_factor"], "constants.window_factor")
        if o["format"] not in ("csv", "json"):
            raise ConfigError("output.format", "expected 'csv' or 'json'")
        _integer(o["precision"], "output.precision", minimum=1)
        if o["precision"] > 17:
            raise ConfigError("output.precision", "at most 17 significant digits")
        try:
            prof = self.profile()
            if prof.chart != "window":
                to_epsilon(prof).eval(1.0, 1)
        except (TypeError, ValueError, DiracWindowError) as exc:
            raise ConfigError("profile", str(exc)) from None
        if prof.chart == "window":
            raise ConfigError("profile.variant", "interior (window chart) profiles have no radial representation")

    # -- typed access --------------------------------------------------------
    def profile(self) -> EtaProfile:
        p = self.data["profile"]
        params = dict(p["parameters"])
        params["cap"] = p["cap"]
        return make_profile(p["variant"], params, rho_c=float(p["rho_c"]), chart=p["chart"],
                            normalize_to=p["normalize_to"])

    def constants(self) -> Constants:
        c = self.data["constants"]
        si = c["units"] == "SI"
        hbar = c["hbar"] if c["hbar"] is not None else (HBAR_SI if si else 1.0)
        m = c["m"] if c["m"] is not None else (ELECTRON_MASS_SI if si else 1.0)
        return Constants(float(hbar), float(m))

    def l_values(self):
        q = self.data["quantum"]
        return list(range(q["l_min"], q["l_max"] + 1))


def _merge(defaults: dict, raw: dict, prefix: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(prefix or "<root>", "expected an object")
    out = copy.deepcopy(defaults)
    for key, val in raw.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in defaults:
            raise ConfigError(path, "unknown key")
        if isinstance(defaults[key], dict) and path not in _OPEN_MAPS:
            out[key] = _merge(defaults[key], val, path)
        elif path in _OPEN_MAPS and not isinstance(val, dict):
            raise ConfigError(path, "expected an object")
        else:
            out[key] = copy.deepcopy(val)
    return out


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _number(x, path):
    if not _is_number(x):
        raise ConfigError(path, f"expected a finite number, got {x!r}")


def _positive(x, path):
    _number(x, path)
    if not x > 0:
        raise ConfigError(path, f"must be positive, got {x!r}")


def _integer(x, path, minimum=None):
    if not isinstance(x, int) or isinstance(x, bool):
        raise ConfigError(path, f"expected an integer, got {x!r}")
    if minimum is not None and x < minimum:
        raise ConfigError(path, f"must be at least {minimum}, got {x}")


# ---------------------------------------------------------------------------
# commands; each returns (columns, rows, meta)

def cmd_brackets(cfg: RunConfig):
    profile = cfg.profile()
    # exact form where one is recognisable (1.4142135623730951 -> sqrt(2))
    w = sp.nsimplify(cfg["constants"]["window_factor"])
    structure = K.DiracStructure.build(K.ConstraintSet.standard(window_factor=w))
    table = K.commutator_table(structure)
    point = {v.name: 1.0 for v in S.CANONICAL_VARS if v.symbol != S.r}
    point.update(cfg["solver"]["phase_point"])
    columns = ["a", "b", "r", "bracket", "planck_factored", "reference", "value_re", "value_im", "anomaly"]
    rows = []
    for entry in table:
        for rv in cfg["solver"]["r_samples"]:
            pt = {**point, "r": rv}
            val = S.eval_numeric(entry.bracket, pt, profile)
            anomaly = 0.0
            if set(entry.pair) == {"p_r", "p_rho"}:
                anomaly = K.anomaly_term(profile, rv, cfg.constants().hbar)
            rows.append({"a": entry.pair[0], "b": entry.pair[1], "r": rv,
                         "bracket": sp.sstr(entry.bracket), "planck_factored": sp.sstr(entry.planck_factored),
                         "reference": entry.reference_form, "value_re": val.real, "value_im": val.imag,
                         "anomaly": anomaly})
    meta = {"planck_function": sp.sstr(structure.planck_function), "window_factor": sp.sstr(w),
            "phase_point": point}
    return columns, rows, meta


def cmd_classify(cfg: RunConfig):
    profile = cfg.profile()
    energy = cfg["quantum"]["energy"]
    columns = ["l", "point", "classification", "limit_P_re", "limit_P_im", "limit_Q_re", "limit_Q_im",
               "exponent_P", "exponent_Q"]
    rows = []
    for l in cfg.l_values():
        ode = epsilon_ode(profile, l, energy, cfg.constants())
        for pt in cfg["solver"]["points"]:
            rep = classify(ode, float(pt))
            rows.append({"l": l, "point": pt, "classification": rep.classification,
                         "limit_P_re": complex(rep.limit_P).real, "limit_P_im": complex(rep.limit_P).imag,
                         "limit_Q_re": complex(rep.limit_Q).real, "limit_Q_im": complex(rep.limit_Q).imag,
                         "exponent_P": rep.exponent_P, "exponent_Q": rep.exponent_Q})
    return columns, rows, {"energy_bar": energy}


def cmd_solve(cfg: RunConfig):
    profile = cfg.profile()
    s = cfg["solver"]
    energy, degree, tol = cfg["quantum"]["energy"], s["series_degree"], s["tolerance"]
    lo, hi = s["epsilon_range"]
    grid = np.linspace(lo, hi, s["samples"])
    columns = ["l", "k", "eps", "R_series", "R_numeric", "abs_diff"]
    rows, summary = [], []
    for l in cfg.l_values():
        ode = epsilon_ode(profile, l, energy, cfg.constants())
        coeffs = taylor_coeffs(ode, max(degree - 1, 0))
        for k in sorted(set(cfg["quantum"]["k"])):
            a = frobenius_coeffs(coeffs, k, energy, N=degree)
            ser = np.array([series_value(a, e, k) for e in grid])
            num = _integrate_from_boundary(ode, a, k, grid, tol)
            diff = np.abs(ser - num)
            for e, rs, rn, d in zip(grid, ser, num, diff):
                rows.append({"l": l, "k": k, "eps": e, "R_series": rs, "R_numeric": rn, "abs_diff": d})
            summary.append({"l": l, "k": k, "max_abs_diff": float(np.max(diff)),
                            "max_rel_diff": float(np.max(diff) / max(np.max(np.abs(num)), 1e-300))})
    return columns, rows, {"energy_bar": energy, "series_degree": degree, "summary": summary}


def _integrate_from_boundary(ode, a, k, grid, tol):
    """Integrator values on ``grid`` started from the series data at eps = 1."""
    init = (series_value(a, 1.0, k), series_value(a, 1.0, k, derivative=True))
    out = np.empty(len(grid), dtype=float)
    left = [i for i, e in enumerate(grid) if e < 1.0]
    right = [i for i, e in enumerate(grid) if e >= 1.0]
    for idx in (left[::-1], right):
        if idx:
            pts = grid[idx]
            sol = integrate_numeric(ode, init, 1.0, float(pts[-1]), tol, samples=pts)
            out[idx] = np.real(sol.R)
    return out


def cmd_spectrum(cfg: RunConfig):
    profile = cfg.profile()
    constants = cfg.constants()
    n_max = cfg["solver"]["truncation"]
    res = spectrum_sweep(profile, cfg.l_values(), ks=tuple(sorted(set(cfg["quantum"]["k"]))),
                         n_values=range(n_max + 1), constants=constants, workers=cfg["solver"]["workers"])
    columns = ["k", "n", "l", "E_bar_re", "E_bar_im", "E_re", "E_im", "kk_term", "remainder_re", "remainder_im",
               "rejected", "eta_residual_re", "eta_residual_im", "det_residual", "note"]
    rows = []
    for e in res.entries:
        zb = complex(e.energy_bar)
        ze = complex(e.energy) if e.energy is not None else complex(math.nan)
        rem = complex(e.remainder)
        cond = complex(e.eta_conditions[0]) if e.eta_conditions else complex(math.nan, math.nan)
        rows.append({"k": e.k, "n": e.n, "l": e.l, "E_bar_re": zb.real, "E_bar_im": zb.imag,
                     "E_re": ze.real, "E_im": ze.imag, "kk_term": e.kk_term,
                     "remainder_re": rem.real, "remainder_im": rem.imag, "rejected": e.rejected,
                     "eta_residual_re": cond.real, "eta_residual_im": cond.imag,
                     "det_residual": e.residual, "note": e.note})
    units = cfg["constants"]["units"]
    meta = {"energy_unit": res.energy_unit, "energy_units": "J" if units == "SI" else "natural",
            "omega": res.omega, "casimir_scale": res.casimir_scale}
    if units == "SI":
        meta["mass_quantum_z1"] = K.mass_quantum(1, profile.rho_c, constants.hbar, SPEED_OF_LIGHT_SI)
    return columns, rows, meta


def cmd_eta_conditions(cfg: RunConfig):
    profile = cfg.profile()
    order = cfg["solver"]["conditions_order"]
    columns = ["l", "order", "root", "E_bar_re", "E_bar_im", "residual_re", "residual_im"]
    columns += [f"a{j}_{part}" for j in range(order) for part in ("re", "im")]
    rows = []
    for l in cfg.l_values():
        coeffs = taylor_coeffs(epsilon_ode(profile, l, 0.0, cfg.constants()), order + 1)
        for i, cond in enumerate(eta_boundary_conditions(coeffs, order)):
            z = complex(math.nan) if cond.energy_bar is None else complex(cond.energy_bar)
            row = {"l": l, "order": order, "root": i, "E_bar_re": z.real, "E_bar_im": z.imag,
                   "residual_re": complex(cond.residual).real, "residual_im": complex(cond.residual).imag}
            for j, aj in enumerate(cond.coefficients):
                row[f"a{j}_re"], row[f"a{j}_im"] = complex(aj).real, complex(aj).imag
            rows.append(row)
    return columns, rows, {}


COMMANDS = {
    "brackets": cmd_brackets,
    "classify": cmd_classify,
    "solve": cmd_solve,
    "spectrum": cmd_spectrum,
    "eta-conditions": cmd_eta_conditions,
}


# ---------------------------------------------------------------------------
# rendering

def format_number(x, precision: int = 12) -> str:
    """Fixed significant-digit rendering used by both output formats."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return f"{x:.{precision}g}"


def _json_value(x, precision):
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(format_number(x, precision))
    if isinstance(x, dict):
        return {k: _json_value(v, precision) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v, precision) for v in x]
    if isinstance(x, complex):
        return [_json_value(x.real, precision), _json_value(x.imag, precision)]
    return str(x)


def render_csv(columns, rows, precision: int = 12) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row.get(c, "") if isinstance(row.get(c, ""), str) else format_number(row[c], precision)
                         for c in columns])
    return buf.getvalue()


def render_json(columns, rows, meta, precision: int = 12) -> str:
    doc = {"meta": _json_value(meta, precision),
           "results": [{c: _json_value(row.get(c), precision) for c in columns} for row in rows]}
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def versions() -> dict:
    out = {"diracwindow": __version__, "python": platform.python_version(), "numpy": np.__version__,
           "scipy": scipy.__version__, "sympy": sp.__version__}
    try:
        out["distribution"] = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pass
    return out


def strict_check(cfg: RunConfig) -> dict:
    """Chain-rule against closed-form epsilon coefficients on a fixed grid."""
    ode = epsilon_ode(to_epsilon(cfg.profile()), cfg["quantum"]["l_min"], cfg["quantum"]["energy"], cfg.constants())
    grid = [e for e in STRICT_GRID if _in_domain(ode.profile, e)]
    return chart_discrepancy(ode, grid)


def _in_domain(profile, eps):
    try:
        profile._check_domain(eps)
        return True
    except DiracWindowError:
        return False


def run(command: str, cfg: RunConfig, strict: bool = False) -> tuple[str, int]:
    """Execute ``command``; returns the rendered report and the exit status."""
    columns, rows, extra = COMMANDS[command](cfg)
    discrepancy = strict_check(cfg)
    precision = cfg["output"]["precision"]
    meta = {"command": command, "versions": versions(), "config": cfg.data,
            "profile": cfg.profile().describe(),
            "tolerances": {"solver": cfg["solver"]["tolerance"], "strict": STRICT_TOL,
                           "real_snap": 1e-9, "determinant_residual": 1e-8},
            "chart_discrepancy": discrepancy, **extra}
    if cfg["output"]["format"] == "csv":
        text = render_csv(columns, rows, precision)
    else:
        text = render_json(columns, rows, meta, precision)
    status = EXIT_OK
    if strict and max(discrepancy.values()) > STRICT_TOL:
        status = EXIT_DISCREPANCY
    return text, status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diracwindow", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--strict", action="store_true",
                       help="exit 4 when chain-rule and closed-form coefficients disagree")
        p.add_argument("--l", type=int, help="run a single angular momentum")
        p.add_argument("--order", type=int,
                       help="truncation (spectrum), series degree (solve) or condition order (eta-conditions)")
    return parser


def _apply_overrides(raw: dict, args) -> dict:
    raw = copy.deepcopy(raw)
    if args.format:
        raw.setdefault("output", {})["format"] = args.format
    if args.out:
        raw.setdefault("output", {})["path"] = args.out
    if args.l is not None:
        raw.setdefault("quantum", {}).update(l_min=args.l, l_max=args.l)
    if args.order is not None:
        key = {"spectrum": "truncation", "solve": "series_degree",
               "eta-conditions": "conditions_order"}.get(args.command)
        if key is None:
            raise ConfigError("--order", f"not used by {args.command}")
        raw.setdefault("solver", {})[key] = args.order
    return raw


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = {}
        if args.config:
            raw = RunConfig.load(args.config).data
        cfg = RunConfig.from_dict(_apply_overrides(raw, args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text, status = run(args.command, cfg, args.strict)
    except DiracWindowError as exc:
        print(f"numerical failure in {type(exc).__module__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    path = cfg["output"]["path"]
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_DISCREPANCY:
        print("strict: chain-rule and closed-form epsilon coefficients disagree beyond "
              f"{STRICT_TOL:g}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
