"""
Command-line entry point for bautin-lab.

Computes the Bautin index, transcendence index, Bautin determinant and multiplicity
of exactly stored power series, evaluates the zero-count bounds built on them and
checks those bounds against certified zero counts and rational-point scans.

The main workflow of every subcommand:
1. Resolve settings (flags > --config JSON > environment > defaults)
2. Load the series or spec named on the command line
3. Run the mapped module operation
4. Write JSON to stdout or --out, plus a run manifest next to --out
5. Exit 0 on success, 2 on validation errors, 3 on truncation or precision
   shortfalls, 4 on structured non-success outcomes

Version: 1.0.0
Author: Bautin Lab Team
Last Updated: 2026-10-19
"""

import argparse
import json
import logging
import os
import sys
import traceback
from dataclasses import dataclass, field
from fractions import Fraction

from modules.bautin_core import (
    MonomialFamily,
    bautin_determinant,
    bautin_index,
    bautin_multiplicity,
    bautin_multiplicity_auto,
    build_bautin_matrix,
    max_nonzero_minor,
    norm_constant,
    symbolic_bautin_determinant,
    transcendence_index,
    transcendence_sequence,
    witness_polynomial,
)
from modules.bounds import (
    DEFAULT_DPS,
    c_bound,
    composite_T,
    delta_lower_rational,
    lacunary_bounds,
    random_epsilon,
    random_epsilon_asymptotic,
    rational_point_bound,
    resolve_dps,
    small_disc_radius,
    z_bound_general,
    z_bound_log_form,
    z_bound_unit,
    z_bound_via_nu,
    zero_bound_disc,
)
from modules.diophantine import fit_log_power, scan_graph_points
from modules.errors import BautinLabError, ValidationError
from modules.generators import (
    RandomSpec,
    denominator_bound,
    denominator_violations,
    gen_lacunary,
    gen_recurrence,
    lacunary_minor_closed_form,
    lacunary_nu_sandwich,
    lacunary_power_check,
    lacunary_spec_from_json,
    recurrence_growth,
    recurrence_spec_from_json,
    sample_random,
)
from modules.reporting import (
    build_manifest,
    dump_json,
    generate_csv_report,
    write_report,
)
from modules.series_core import (
    fraction_pair,
    height_profile,
    load_series,
    power_table,
    series_to_json,
    tail_bound,
    to_fraction,
)
from modules.sweep import run_sweep
from modules.zero_oracle import CurvePolynomial, count_zeros_disc

logger = logging.getLogger("bautin_lab")

ENVIRONMENT = {
    "threads": "BAUTIN_LAB_THREADS",
    "precision": "BAUTIN_LAB_PRECISION",
}

DEFAULTS = {
    "threads": 1,
    "precision": DEFAULT_DPS,
    "family": "square",
    "mode": "auto",
    "radius": "1/4",
    "seed": 0,
    "count": 1,
}

BOUND_FORMULAS = {
    "zero_bound_disc": zero_bound_disc,
    "small_disc_radius": small_disc_radius,
    "c_bound": c_bound,
    "z_bound_unit": z_bound_unit,
    "z_bound_general": z_bound_general,
    "z_bound_via_nu": z_bound_via_nu,
    "z_bound_log_form": z_bound_log_form,
    "delta_lower_rational": delta_lower_rational,
    "composite_T": composite_T,
    "lacunary_bounds": lacunary_bounds,
    "random_epsilon": random_epsilon,
    "random_epsilon_asymptotic": random_epsilon_asymptotic,
    "rational_point_bound": rational_point_bound,
}
PRECISION_AWARE = {
    "zero_bound_disc",
    "small_disc_radius",
    "c_bound",
    "z_bound_unit",
    "z_bound_general",
    "z_bound_via_nu",
    "z_bound_log_form",
    "lacunary_bounds",
    "random_epsilon",
    "random_epsilon_asymptotic",
    "rational_point_bound",
}

EXIT_OK = 0
EXIT_INCONCLUSIVE = 4


@dataclass
class CommandResult:
    payload: dict
    exit_code: int = EXIT_OK
    outputs: list = field(default_factory=list)
    seeds: list = field(default_factory=list)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings")
    common.add_argument("--threads", type=int, help="worker processes")
    common.add_argument("--precision", type=int, help="mpmath working digits (>= 50)")
    common.add_argument("--out", help="output path (a directory for sweep)")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="bautin-lab",
        description="Exact Bautin-index computations and zero-count bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_text, *flags):
        p = sub.add_parser(name, help=help_text, parents=[common])
        for flag in flags:
            FLAG_BUILDERS[flag](p)
        return p

    command("series", "summarize a stored series", "series", "degree", "trunc")
    command("bautin", "Bautin index of a monomial family", "series", "family", "degree", "trunc")
    nu = command("nu", "transcendence index nu_d", "series", "degree", "trunc")
    nu.add_argument("--sequence", action="store_true", help="also report nu_1..nu_d")
    delta = command(
        "delta", "largest nonzero minor and Bautin determinant", "series", "degree", "mode", "trunc"
    )
    delta.add_argument("--symbolic", action="store_true", help="print Delta_d as a polynomial")
    command("eta", "Bautin multiplicity eta_d", "series", "degree", "trunc")
    bounds = command(
        "bounds", "evaluate one formula or the full chain", "series", "degree", "mode", "trunc"
    )
    bounds.add_argument("--formula", choices=sorted(BOUND_FORMULAS), help="formula name")
    bounds.add_argument("--params", help="JSON object of formula parameters")
    command("lacunary", "lacunary series and its closed forms", "spec", "degree", "trunc")
    command("recur", "recurrence-defined series and denominator growth", "spec", "trunc")
    random_cmd = command("random", "random series from a seed", "seed", "trunc")
    random_cmd.add_argument("--count", type=int, help="number of consecutive seeds")
    zeros = command("zeros", "certified zero count of P(z, f(z))", "series", "trunc")
    zeros.add_argument("--poly", help="curve polynomial JSON file")
    zeros.add_argument("--radius", help="disc radius, e.g. 1/4")
    command(
        "ratpoints", "rational points of bounded height on the graph", "series", "height", "trunc"
    )
    command("sweep", "batch experiments from a config file")
    replay = sub.add_parser("replay", help="re-run a recorded manifest", parents=[common])
    replay.add_argument("--manifest", required=True, help="manifest.json to replay")
    return parser


FLAG_BUILDERS = {
    "series": lambda p: p.add_argument("--series", help="series JSON file"),
    "family": lambda p: p.add_argument("--family", choices=["square", "total"]),
    "degree": lambda p: p.add_argument("--degree", type=int, help="degree d"),
    "trunc": lambda p: p.add_argument("--trunc", type=int, help="truncation order"),
    "height": lambda p: p.add_argument("--height", type=int, nargs="+", help="height cap(s) T"),
    "seed": lambda p: p.add_argument("--seed", type=int, help="random seed"),
    "mode": lambda p: p.add_argument("--mode", choices=["exhaustive", "heuristic", "auto"]),
    "spec": lambda p: p.add_argument("--spec", help="generator spec JSON file"),
}


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read config {path}: {e}")
    if not isinstance(config, dict):
        raise ValidationError("config must be a JSON object")
    return config


def resolve_settings(args, config):
    """
    Merge settings with precedence flag > config file > environment > default.

    Only scalar config entries are settings; nested objects belong to sweep.
    """
    settings = {}
    keys = set(vars(args)) | set(DEFAULTS)
    keys -= {"command", "config", "verbose", "sequence", "symbolic"}
    for key in sorted(keys):
        # argparse leaves unset flags as None, so lower layers only fill gaps
        value = getattr(args, key, None)
        if value is None and key in config and not isinstance(config[key], dict):
            value = config[key]
        if value is None and key in ENVIRONMENT:
            value = os.environ.get(ENVIRONMENT[key])
        if value is None:
            value = DEFAULTS.get(key)
        settings[key] = value
    try:
        settings["threads"] = max(1, int(settings["threads"]))
        settings["precision"] = resolve_dps(int(settings["precision"]))
    except (TypeError, ValueError) as e:
        raise ValidationError(f"threads and precision must be integers: {e}")
    return settings


def _require(settings, key, command):
    if settings.get(key) is None:
        raise ValidationError(f"{command} needs --{key}")
    return settings[key]


def _read_json(path, what):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read {what} {path}: {e}")


# ===== Subcommand handlers =====


def cmd_series(settings, args):
    f = load_series(_require(settings, "series", "series"))
    payload = {
        "status": "ok",
        "order": f.order,
        "radius": fraction_pair(f.radius),
        "bound": fraction_pair(f.bound),
        "origin_value_zero": f.origin_value_zero,
        "cauchy_violations": f.cauchy_violations(),
    }
    if f.order >= 1:
        profile = height_profile(f, f.order)
        payload["height_profile"] = {"h": list(profile.h), "theta": list(profile.theta)}
    N = f.order if settings["trunc"] is None else settings["trunc"]
    if f.radius > Fraction(1, 4):
        tail = tail_bound(f, N, Fraction(1, 4))
        payload["tail_bound_quarter"] = {"N": N, "value": fraction_pair(tail)}
    if settings["degree"] is not None:
        table = power_table(f, settings["degree"], N)
        payload["power_table"] = [[fraction_pair(x) for x in row] for row in table.rows()]
    return CommandResult(payload)


def cmd_bautin(settings, args):
    f = load_series(_require(settings, "series", "bautin"))
    family = MonomialFamily(settings["family"], _require(settings, "degree", "bautin"))
    report = bautin_index(f, family, settings["trunc"])
    payload = report.to_dict()
    if report.stalled:
        return CommandResult(payload, EXIT_INCONCLUSIVE)
    if report.b > 0:
        payload["witness"] = witness_polynomial(f, family, settings["trunc"]).to_dict()
    return CommandResult(payload)


def cmd_nu(settings, args):
    f = load_series(_require(settings, "series", "nu"))
    d = _require(settings, "degree", "nu")
    report = transcendence_index(f, d, settings["trunc"])
    payload = report.to_dict()
    payload["nu"] = "stalled" if report.stalled else report.b
    if args.sequence:
        payload["sequence"] = [
            "stalled" if value is None else value
            for value in transcendence_sequence(f, d, settings["trunc"])
        ]
    return CommandResult(payload, EXIT_INCONCLUSIVE if report.stalled else EXIT_OK)


def _delta_chain(f, d, settings):
    """Bautin index, delta and (when f stores enough) Delta_d for square(d)."""
    family = MonomialFamily("square", d)
    report = bautin_index(f, family, settings["trunc"])
    if report.stalled:
        return report, None, None, None
    matrix = build_bautin_matrix(power_table(f, d, report.b), family, report.b)
    minor = max_nonzero_minor(
        matrix, family.m, mode=settings["mode"], workers=settings["threads"]
    )
    Delta = bautin_determinant(f, d) if f.order >= d * d + 2 * d else None
    return report, matrix, minor, Delta


def cmd_delta(settings, args):
    f = load_series(_require(settings, "series", "delta"))
    d = _require(settings, "degree", "delta")
    report, matrix, minor, Delta = _delta_chain(f, d, settings)
    payload = {"status": "ok", "d": d, "bautin": report.to_dict()}
    if args.symbolic:
        payload["symbolic"] = str(symbolic_bautin_determinant(d).as_expr())
    if report.stalled:
        payload["status"] = "stalled"
        return CommandResult(payload, EXIT_INCONCLUSIVE)
    payload["b"] = report.b
    payload["delta"] = minor.to_dict()
    payload["norm_constant"] = fraction_pair(norm_constant(matrix, minor.rows))
    payload["Delta"] = None if Delta is None else fraction_pair(Delta)
    return CommandResult(payload)


def cmd_eta(settings, args):
    f = load_series(_require(settings, "series", "eta"))
    d = _require(settings, "degree", "eta")
    if settings["trunc"] is None:
        report = bautin_multiplicity_auto(f, d)
    else:
        report = bautin_multiplicity(f, d, settings["trunc"])
    return CommandResult(report.to_dict(), EXIT_INCONCLUSIVE if report.exceeds else EXIT_OK)


def _formula(settings, args):
    name = settings["formula"]
    params = settings["params"]
    if isinstance(params, str):
        try:
            params = json.loads(params)
        except json.JSONDecodeError as e:
            raise ValidationError(f"--params is not valid JSON: {e}")
    params = dict(params or {})
    if name in PRECISION_AWARE:
        params.setdefault("dps", settings["precision"])
    try:
        result = BOUND_FORMULAS[name](**params)
    except TypeError as e:
        raise ValidationError(f"bad parameters for {name}: {e}")
    reports = list(result) if isinstance(result, tuple) else [result]
    return CommandResult(
        {"status": "ok", "bounds": [r.to_dict() for r in reports if r is not None]}
    )


def _bound_chain(settings):
    f = load_series(settings["series"])
    d = settings["degree"] or 1
    dps = settings["precision"]
    report, matrix, minor, Delta = _delta_chain(f, d, settings)
    payload = {"status": "ok", "d": d, "bautin": report.to_dict()}
    if report.stalled:
        payload["status"] = "stalled"
        return CommandResult(payload, EXIT_INCONCLUSIVE)
    b, m = report.b, matrix.family.m
    # z_bound_unit assumes R = B = 1; keep it but say so when the series differs
    notes = [] if f.radius == 1 and f.bound == 1 else ["series metadata differs from R = B = 1"]
    c = norm_constant(matrix, minor.rows)
    bounds = [
        z_bound_unit(b, m, minor.value, dps=dps, notes=notes),
        zero_bound_disc(b, c, f.bound, f.radius, dps=dps),
        small_disc_radius(b, c, f.bound, f.radius, dps=dps),
    ]
    payload.update({"b": b, "delta": minor.to_dict(), "c": fraction_pair(c)})
    # The Delta-based bounds need a nonzero determinant
    if Delta:
        bounds.append(z_bound_general(d, b, abs(Delta), dps=dps))
        # nu_2d feeds both the height floor on |Delta| and the nu form of the bound
        K_nu = settings["trunc"]
        if K_nu is None:
            K_nu = min(4 * MonomialFamily("total", 2 * d).m, f.order)
        nu_report = transcendence_index(f, 2 * d, K_nu)
        if not nu_report.stalled and f.order >= nu_report.b:
            nu = nu_report.b
            h = height_profile(f, nu).h_at(nu)
            lower = delta_lower_rational(d, nu, h)
            payload["nu_2d"] = nu
            payload["Delta_at_least_lower"] = abs(Delta) >= lower.value
            bounds.append(lower)
            bounds.append(z_bound_via_nu(d, nu, abs(Delta), dps=dps))
    payload["Delta"] = None if Delta is None else fraction_pair(Delta)
    payload["bounds"] = [r.to_dict() for r in bounds]
    return CommandResult(payload)


def cmd_bounds(settings, args):
    if settings["formula"]:
        return _formula(settings, args)
    if settings["series"]:
        return _bound_chain(settings)
    raise ValidationError("bounds needs --formula or --series")


def cmd_lacunary(settings, args):
    spec = lacunary_spec_from_json(_read_json(_require(settings, "spec", "lacunary"), "spec"))
    payload = {"status": "ok"}
    if settings["trunc"] is not None:
        payload["series"] = series_to_json(gen_lacunary(spec, settings["trunc"]))
    d = settings["degree"]
    if d is not None:
        sandwich = lacunary_nu_sandwich(spec, d)
        minor = lacunary_minor_closed_form(spec, d)
        payload["sandwich"] = {"l": sandwich.l, "lower": sandwich.lower, "upper": sandwich.upper}
        payload["minor"] = {
            "value": fraction_pair(minor.value),
            "exponent": minor.exponent,
            "rows": list(minor.rows),
            "upper_square": minor.upper_square,
        }
        payload["power_check_violations"] = lacunary_power_check(spec, sandwich.l)
        if spec.q is not None:
            reports = lacunary_bounds(d, spec.q, spec.p, dps=settings["precision"])
            payload["bounds"] = [r.to_dict() for r in reports if r is not None]
    return CommandResult(payload)


def cmd_recur(settings, args):
    spec = recurrence_spec_from_json(_read_json(_require(settings, "spec", "recur"), "spec"))
    K = _require(settings, "trunc", "recur")
    series, trace = gen_recurrence(spec, K)
    violations = denominator_violations(spec, trace, dps=settings["precision"])
    payload = {
        "status": "ok",
        "series": series_to_json(series),
        "denominators": [str(D) for D in trace],
        "violations": violations,
    }
    if K >= spec.k0:
        payload["bound"] = denominator_bound(spec, K, dps=settings["precision"]).to_dict()
    if spec.d1 == 1:
        payload["growth_polynomial"] = [fraction_pair(c) for c in recurrence_growth(spec)]
    return CommandResult(payload)


def cmd_random(settings, args):
    cutoff = _require(settings, "trunc", "random")
    seeds = list(range(int(settings["seed"]), int(settings["seed"]) + int(settings["count"])))
    series = [series_to_json(sample_random(RandomSpec(seed=s, cutoff=cutoff))) for s in seeds]
    payload = {"status": "ok", "seeds": seeds}
    if len(series) == 1:
        payload["series"] = series[0]
    else:
        payload["series_list"] = series
    return CommandResult(payload, seeds=seeds)


def cmd_zeros(settings, args):
    f = load_series(_require(settings, "series", "zeros"))
    doc = _read_json(_require(settings, "poly", "zeros"), "curve polynomial")
    P = CurvePolynomial.from_dict(doc.get("lambdas", doc))
    result = count_zeros_disc(P, f, to_fraction(settings["radius"]), N=settings["trunc"])
    payload = result.to_dict()
    payload["status"] = "ok" if result.certified else "heuristic"
    payload["polynomial"] = P.to_dict()
    return CommandResult(payload, EXIT_OK if result.certified else EXIT_INCONCLUSIVE)


def cmd_ratpoints(settings, args):
    f = load_series(_require(settings, "series", "ratpoints"))
    heights = _require(settings, "height", "ratpoints")
    if isinstance(heights, int):
        heights = [heights]
    keep_rows = settings["out"] is not None and len(heights) == 1
    scans = [
        scan_graph_points(
            f, T, N=settings["trunc"], workers=settings["threads"], keep_rows=keep_rows
        )
        for T in heights
    ]
    unresolved = sum(len(scan.unresolved) for scan in scans)
    payload = {"status": "unresolved" if unresolved else "ok"}
    outputs = []
    if len(scans) == 1:
        payload.update(scans[0].to_dict())
        if keep_rows:
            rows_path = os.path.splitext(settings["out"])[0] + ".csv"
            content = generate_csv_report(
                scans[0].rows, ["x_num", "x_den", "status", "y_if_any", "margin"]
            )
            outputs.append(write_report(rows_path, content))
    else:
        payload["scans"] = [scan.to_dict() for scan in scans]
        counts = [(scan.T, len(scan.certified)) for scan in scans]
        if len({T for T, _ in counts}) >= 3 and all(c >= 1 for _, c in counts):
            fit = fit_log_power(counts)
            payload["fit"] = {
                "alpha": fit.alpha,
                "beta": fit.beta,
                "max_residual": fit.max_residual,
                "degenerate": fit.degenerate,
            }
    return CommandResult(payload, EXIT_INCONCLUSIVE if unresolved else EXIT_OK, outputs)


def cmd_sweep(settings, args):
    config_path = args.config
    if config_path is None:
        raise ValidationError("sweep needs --config")
    out_dir = _require(settings, "out", "sweep")
    config = load_config(config_path)
    summary, outputs, seeds = run_sweep(
        config,
        out_dir,
        workers=settings["threads"],
        dps=settings["precision"],
        base_dir=os.path.dirname(os.path.abspath(config_path)),
    )
    return CommandResult({"status": "ok", "summary": summary}, outputs=outputs, seeds=seeds)


HANDLERS = {
    "series": cmd_series,
    "bautin": cmd_bautin,
    "nu": cmd_nu,
    "delta": cmd_delta,
    "eta": cmd_eta,
    "bounds": cmd_bounds,
    "lacunary": cmd_lacunary,
    "recur": cmd_recur,
    "random": cmd_random,
    "zeros": cmd_zeros,
    "ratpoints": cmd_ratpoints,
    "sweep": cmd_sweep,
}


# ===== Output and manifests =====


def manifest_path(command, out):
    if command == "sweep":
        return os.path.join(out, "manifest.json")
    return os.path.splitext(out)[0] + ".manifest.json"


def emit(command, result, settings, argv):
    """Write the JSON payload (stdout or --out) and, with --out, the run manifest."""
    text = dump_json(result.payload)
    out = settings.get("out")
    if out is None:
        sys.stdout.write(text)
        return
    outputs = list(result.outputs)
    if command != "sweep":
        outputs.insert(0, write_report(out, text))
    else:
        sys.stdout.write(text)
    manifest = build_manifest(command, argv, settings, result.seeds, outputs)
    write_report(manifest_path(command, out), dump_json(manifest))


def replay_manifest(path):
    """Re-run the argv recorded in a manifest; returns the exit code."""
    manifest = _read_json(path, "manifest")
    argv = manifest.get("argv")
    if not isinstance(argv, list) or not argv:
        raise ValidationError(f"manifest {path} records no argv")
    logger.info("Replaying %s from %s", manifest.get("subcommand"), path)
    return run(argv)


def configure_logging(verbose):
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    logging.getLogger().setLevel(level)


def run(argv):
    """
    Run one subcommand.

    Args:
        argv (list): command-line arguments without the program name

    Returns:
        int: exit code (0 ok, 1 unexpected failure, 2 validation, 3 truncation or
        precision, 4 structured non-success)
    """
    argv = list(argv)
    parser = build_parser()
    # argparse exits on bad usage; map that to the validation exit code
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0

    configure_logging(args.verbose)
    try:
        # A replay re-runs the recorded argv and carries its own settings
        if args.command == "replay":
            return replay_manifest(args.manifest)
        config = load_config(args.config)
        settings = resolve_settings(args, config)
        logger.info("Starting bautin-lab %s", args.command)

        # Dispatch, then write the JSON payload, any artifacts and the manifest
        result = HANDLERS[args.command](settings, args)
        emit(args.command, result, settings, argv)
        logger.info("bautin-lab %s finished with exit code %d", args.command, result.exit_code)
        return result.exit_code
    # Expected failures carry their own exit code and structured payload
    except BautinLabError as e:
        logger.error("%s: %s", e.kind, e.message)
        sys.stdout.write(dump_json(e.to_dict()))
        return e.exit_code
    except Exception as e:
        error_msg = str(e)
        logger.error("Error in bautin-lab %s: %s", args.command, error_msg)
        logger.error("Error stack trace: %s", traceback.format_exc())
        sys.stdout.write(
            dump_json(
                {
                    "status": "error",
                    "kind": "internal-error",
                    "message": error_msg,
                    "type": type(e).__name__,
                }
            )
        )
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
