"""Command-line front end.

    carlsim eigen    --chi 1 --delta 0
    carlsim evolve   --chi 1 --delta 0 --tau-max 10 --tau-points 201 -o run.csv
    carlsim sweep    --chi 1 --delta 0 --param alpha --lo 0 --hi 30 --steps 31 --tau 8
    carlsim map      --chi-lo 0 --chi-hi 2 --chi-steps 21 --delta-lo -4 --delta-hi 4 --delta-steps 81
    carlsim validate

Exit codes: 0 success, 1 physics/regime error, 2 usage error, 3 oracle
non-convergence.  ``CARL_THREADS`` caps the number of worker threads.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import CarlError, ConvergenceError, CutoffError, InvalidParameter, RegimeError
from .model import ModelParams, PhysicalParams, derive_model
from .moments import DEFAULT_ATOM_COUNT, record
from .oracle import FockOracleConfig, convergence_ladder
from .output import EVOLVE_COLUMNS, VIOLATION_COLUMNS, record_row, svg_line_plot, write_csv
from .propagator import propagate_asymptotic
from .spectral import Regime, characteristic_roots, classify_regime, eigensystem, gain_rate

log = logging.getLogger("carlsim")

EXIT_OK, EXIT_PHYSICS, EXIT_USAGE, EXIT_ORACLE = 0, 1, 2, 3

DEFAULTS = {
    "alpha_re": 0.0,
    "alpha_im": 0.0,
    "tau_max": 10.0,
    "tau_points": 201,
    "tau": 8.0,
    "steps": 11,
    "chi_lo": 0.0,
    "chi_hi": 2.0,
    "chi_steps": 21,
    "delta_lo": -4.0,
    "delta_hi": 4.0,
    "delta_steps": 41,
    "map_tau": 10.0,
}


class UsageError(Exception):
    pass


def worker_count() -> int | None:
    value = os.environ.get("CARL_THREADS")
    if not value:
        return None
    try:
        n = int(value)
    except ValueError:
        raise UsageError(f"CARL_THREADS must be an integer, got {value!r}") from None
    if n < 1:
        raise UsageError("CARL_THREADS must be >= 1")
    return n


def parallel_map(fn, items):
    """Ordered map over a thread pool; results come back in input order."""
    items = list(items)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(fn, items))


def _add_model_args(p):
    p.add_argument("--config", help="flat JSON file with run settings; flags override it")
    p.add_argument("--chi", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha-re", type=float)
    p.add_argument("--alpha-im", type=float)
    p.add_argument("--atoms", type=float, help="condensate atom number N")


def _add_output_args(p):
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carlsim", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", help="roots, growth rate and regime of the coupling matrix")
    _add_model_args(p)
    _add_output_args(p)

    p = sub.add_parser("evolve", help="observables along a tau grid")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--tau-max", type=float)
    p.add_argument("--tau-points", type=int)
    p.add_argument("--svg", help="optional SVG plot of intensities and g2")
    p.add_argument(
        "--asymptotic",
        action="store_true",
        default=None,
        help="use the exponential-regime propagator (UNSTABLE regime only)",
    )

    p = sub.add_parser("sweep", help="observables at fixed tau over one parameter")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--param", choices=("chi", "delta", "alpha"))
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--tau", type=float)

    p = sub.add_parser("map", help="gain / fluctuation / violation map over (chi, delta)")
    p.add_argument("--config")
    _add_output_args(p)
    for name in ("chi", "delta"):
        p.add_argument(f"--{name}-lo", type=float)
        p.add_argument(f"--{name}-hi", type=float)
        p.add_argument(f"--{name}-steps", type=int)
    p.add_argument("--map-tau", type=float, help="time at which the violation margin is taken")

    p = sub.add_parser("validate", help="Fock-space oracle vs. Wick engine")
    p.add_argument("--config")
    p.add_argument("--chis", type=float, nargs="+")
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--alphas", type=float, nargs="+")
    p.add_argument("--taus", type=float, nargs="+")
    p.add_argument("--moment-tol", type=float)
    p.add_argument("--g2-tol", type=float)
    return parser


def resolve_config(args) -> dict:
    """Merge config file, CLI flags and defaults (flags win)."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        settings.update(loaded)
    for key, value in vars(args).items():
        if value is not None and key != "config":
            settings[key] = value
    return settings


def model_from_settings(settings) -> ModelParams:
    physical = settings.get("physical")
    if physical is not None:
        phys = dict(physical)
        if isinstance(phys.get("pump_rabi_Omega0"), list):
            re, im = phys["pump_rabi_Omega0"]
            phys["pump_rabi_Omega0"] = complex(re, im)
        model, omega_r, g = derive_model(PhysicalParams(**phys))
        log.info("derived chi=%.6g delta=%.6g omega_r=%.6g g=%.6g", model.chi, model.delta, omega_r, g)
        chi = settings.get("chi", model.chi)
        delta = settings.get("delta", model.delta)
        settings.setdefault("atoms", phys["atom_count_N"])
    else:
        if settings.get("chi") is None or settings.get("delta") is None:
            raise UsageError("--chi and --delta are required (or a 'physical' config block)")
        chi, delta = settings["chi"], settings["delta"]
    settings.setdefault("atoms", DEFAULT_ATOM_COUNT)
    alpha = complex(settings["alpha_re"], settings["alpha_im"])
    return ModelParams(chi, delta, alpha)


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_eigen(settings) -> int:
    model = model_from_settings(settings)
    roots = characteristic_roots(model)
    regime = classify_regime(roots)
    rows = []
    if regime is Regime.MARGINAL:
        gamma, omega, f = gain_rate(model), None, None
    else:
        spec = eigensystem(model)
        roots = spec.eigenvalues
        gamma = spec.gain_rate
        unstable = regime is Regime.UNSTABLE
        omega = spec.oscillation if unstable else None
        f = spec.fluctuation_f if unstable else None
    for k, lam in enumerate(roots, start=1):
        rows.append({"index": k, "re": lam.real, "im": lam.imag})
    print(f"chi = {model.chi:.17g}")
    print(f"delta = {model.delta:.17g}")
    for row in rows:
        print(f"lambda_{row['index']} = {row['re']:.17g} {row['im']:+.17g}j")
    print(f"regime = {regime}")
    print(f"Gamma = {gamma:.17g}")
    print(f"Omega = {'' if omega is None else format(omega, '.17g')}")
    print(f"f = {'' if f is None else format(f, '.17g')}")
    if settings.get("output"):
        summary = [dict(r, regime=str(regime), Gamma=gamma, Omega=omega, f=f) for r in rows]
        _emit(write_csv(summary, ["index", "re", "im", "regime", "Gamma", "Omega", "f"]), settings["output"])
    return EXIT_OK


def _spectral_or_none(model):
    roots = characteristic_roots(model)
    if classify_regime(roots) is Regime.MARGINAL:
        return None
    return eigensystem(model)


def cmd_evolve(settings) -> int:
    model = model_from_settings(settings)
    n = int(settings["tau_points"])
    if n < 2:
        raise UsageError("--tau-points must be >= 2")
    taus = np.linspace(0.0, float(settings["tau_max"]), n)
    spectral = _spectral_or_none(model)
    atoms = float(settings["atoms"])
    propagator = None
    if settings.get("asymptotic"):
        if spectral is None or spectral.regime is not Regime.UNSTABLE:
            raise RegimeError("asymptotic propagator needs an UNSTABLE (exponential-growth) regime")
        propagator = propagate_asymptotic

    def one(tau):
        return record(model, spectral, float(tau), atoms, propagator=propagator)

    recs = parallel_map(one, taus)
    rows = [record_row(r) for r in recs]
    _emit(write_csv(rows, EVOLVE_COLUMNS + VIOLATION_COLUMNS), settings.get("output"))
    if settings.get("svg"):
        series = {
            "I_a": [r.intensity_a for r in recs],
            "I_minus": [r.intensity_minus for r in recs],
            "I_plus": [r.intensity_plus for r in recs],
        }
        with open(settings["svg"], "w") as fh:
            fh.write(svg_line_plot(list(taus), series, title="intensities (log10)", logy=True))
    return EXIT_OK


def cmd_sweep(settings) -> int:
    base = model_from_settings(settings)
    param = settings.get("param")
    if param is None or settings.get("lo") is None or settings.get("hi") is None:
        raise UsageError("sweep needs --param, --lo and --hi")
    steps = int(settings["steps"])
    if steps < 1:
        raise UsageError("--steps must be >= 1")
    values = np.linspace(settings["lo"], settings["hi"], steps) if steps > 1 else np.array([settings["lo"]])
    tau = float(settings["tau"])
    atoms = float(settings["atoms"])

    def one(value):
        if param == "chi":
            model = ModelParams(value, base.delta, base.alpha)
        elif param == "delta":
            model = ModelParams(base.chi, value, base.alpha)
        else:
            phase = np.exp(1j * np.angle(base.alpha)) if base.alpha != 0 else 1.0
            model = base.with_alpha(value * phase)
        return record(model, _spectral_or_none(model), tau, atoms)

    recs = parallel_map(one, values)
    rows = []
    for value, rec in zip(values, recs):
        row = record_row(rec)
        row[param] = value
        rows.append(row)
    _emit(write_csv(rows, [param] + EVOLVE_COLUMNS + VIOLATION_COLUMNS), settings.get("output"))
    return EXIT_OK


MAP_COLUMNS = ["chi", "delta", "Gamma", "Omega", "f", "regime", "cs_margin_aminus"]


def map_point(chi, delta, tau):
    """One cell of the (chi, delta) map.

    The violation margin is ``g2_{a-} - sqrt(g2_a g2_-)`` for the spontaneous
    case at ``tau``; positive means the classical inequality is violated.
    """
    model = ModelParams(chi, delta, 0.0)
    roots = characteristic_roots(model)
    regime = classify_regime(roots)
    row = {"chi": chi, "delta": delta, "regime": str(regime)}
    spectral = None
    if regime is Regime.MARGINAL:
        row["Gamma"] = gain_rate(model)
    else:
        spectral = eigensystem(model)
        row["Gamma"] = spectral.gain_rate
        if regime is Regime.UNSTABLE:
            row["Omega"] = spectral.oscillation
            row["f"] = spectral.fluctuation_f
    rec = record(model, spectral, tau, DEFAULT_ATOM_COUNT)
    if rec.g2_aminus is not None:
        row["cs_margin_aminus"] = rec.g2_aminus - rec.cs_aminus
    return row


def cmd_map(settings) -> int:
    for name in ("chi_steps", "delta_steps"):
        if int(settings[name]) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 1")
    chis = np.linspace(settings["chi_lo"], settings["chi_hi"], int(settings["chi_steps"]))
    deltas = np.linspace(settings["delta_lo"], settings["delta_hi"], int(settings["delta_steps"]))
    tau = float(settings["map_tau"])
    cells = [(float(c), float(d)) for c in chis for d in deltas]
    rows = parallel_map(lambda cd: map_point(cd[0], cd[1], tau), cells)
    _emit(write_csv(rows, MAP_COLUMNS), settings.get("output"))
    return EXIT_OK


VALIDATION_FIELDS_MOMENT = (
    "mean_probe",
    "mean_minus",
    "mean_plus",
    "intensity_a",
    "intensity_minus",
    "intensity_plus",
    "bunching_mean",
    "bunching_intensity",
)
VALIDATION_FIELDS_G2 = ("g2_a", "g2_minus", "g2_plus", "g2_aminus", "g2_aplus", "g2_minusplus")


def compare_records(wick, oracle, moment_tol, g2_tol):
    """Worst absolute deviations ``(moments, g2)`` and a pass flag."""
    dm = max(abs(complex(getattr(wick, k)) - complex(getattr(oracle, k))) for k in VALIDATION_FIELDS_MOMENT)
    dg = 0.0
    for k in VALIDATION_FIELDS_G2:
        a, b = getattr(wick, k), getattr(oracle, k)
        if (a is None) != (b is None):
            return dm, float("inf"), False
        if a is not None:
            dg = max(dg, abs(a - b))
    return dm, dg, dm <= moment_tol and dg <= g2_tol


def validation_grid(chis, deltas, alphas, taus):
    return [(c, d, a, t) for c in chis for d in deltas for a in alphas for t in taus]


def validate_point(point, moment_tol=1e-6, g2_tol=1e-4, base_config=None):
    chi, delta, alpha, tau = point
    model = ModelParams(chi, delta, alpha)
    wick = record(model, _spectral_or_none(model), tau)
    oracle_rec, cert = convergence_ladder(model, tau, base_config or FockOracleConfig())
    dm, dg, ok = compare_records(wick, oracle_rec, moment_tol, g2_tol)
    return {
        "chi": chi,
        "delta": delta,
        "alpha": alpha,
        "tau": tau,
        "moment_err": dm,
        "g2_err": dg,
        "cutoffs": "x".join(map(str, cert.cutoffs)),
        "pass": ok,
    }


def cmd_validate(settings) -> int:
    grid = validation_grid(
        settings.get("chis") or [0.1, 0.3, 0.5],
        settings.get("deltas") or [0.0, 1.0],
        settings.get("alphas") or [0.0, 1.0],
        settings.get("taus") or [0.25, 0.5, 1.0],
    )
    moment_tol = float(settings.get("moment_tol") or 1e-6)
    g2_tol = float(settings.get("g2_tol") or 1e-4)
    rows = parallel_map(lambda p: validate_point(p, moment_tol, g2_tol), grid)
    columns = ["chi", "delta", "alpha", "tau", "moment_err", "g2_err", "cutoffs", "pass"]
    _emit(write_csv(rows, columns), settings.get("output"))
    failed = sum(not r["pass"] for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} points PASS", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_PHYSICS


COMMANDS = {
    "eigen": cmd_eigen,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "map": cmd_map,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        settings = resolve_config(args)
        return COMMANDS[args.command](settings)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"carlsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, CutoffError) as exc:
        print(f"carlsim: oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (CarlError, InvalidParameter) as exc:
        print(f"carlsim: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
