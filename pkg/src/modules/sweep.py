"""
Module for batch experiments over a grid of series and degrees.

Experiments:
1. random_delta: for each degree d and seed, the exact Bautin determinant of a random
   series against the probabilistic threshold eps_d
2. domination: for each series and degree d, the largest certified zero count in
   D_{1/4} against z_bound_unit with the exact Bautin index and delta

Cells are independent. They run in a worker pool when more than one thread is
allowed and serially otherwise; rows are merged in grid order either way, so the
CSV bytes depend only on the config. A failing cell becomes a row whose status
is the error kind.
"""

import logging
import os
import traceback
from multiprocessing import Pool

from mpmath import mp

from modules.bautin_core import (
    MonomialFamily,
    bautin_determinant,
    bautin_index,
    build_bautin_matrix,
    max_nonzero_minor,
    witness_polynomial,
)
from modules.bounds import random_epsilon, resolve_dps, z_bound_unit
from modules.errors import BautinLabError, ValidationError
from modules.generators import (
    RandomSpec,
    gen_lacunary,
    lacunary_spec_from_json,
    sample_random,
)
from modules.reporting import dump_json, generate_csv_report, write_report
from modules.series_core import load_series, power_table, to_fraction
from modules.summary import generate_sweep_summary, render_summary_text
from modules.zero_oracle import empirical_Z

logger = logging.getLogger(__name__)

RANDOM_DELTA_FIELDS = ["d", "seed", "Delta", "eps_d", "passes", "status"]
DOMINATION_FIELDS = [
    "series",
    "d",
    "b",
    "sigma",
    "delta",
    "minor_mode",
    "bound",
    "empirical_Z",
    "certified_counts",
    "attempts",
    "dominated",
    "status",
]


def expand_seeds(value):
    """A list of seeds, or {"start": s, "count": n} for s..s+n-1."""
    if isinstance(value, dict):
        start = int(value.get("start", 0))
        return list(range(start, start + int(value["count"])))
    return [int(seed) for seed in value]


def load_grid_series(entry, base_dir="."):
    """
    One series of the domination grid: {"kind": "file", "path": ...},
    {"kind": "lacunary", "spec": {...}, "order": K} or {"kind": "random", "seed": s, "cutoff": K}.
    """
    kind = entry.get("kind")
    if kind == "file":
        path = entry["path"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return entry.get("name", os.path.basename(path)), load_series(path)
    if kind == "lacunary":
        spec = lacunary_spec_from_json(entry["spec"])
        return entry.get("name", "lacunary"), gen_lacunary(spec, int(entry["order"]))
    if kind == "random":
        seed = int(entry["seed"])
        series = sample_random(RandomSpec(seed=seed, cutoff=int(entry["cutoff"])))
        return entry.get("name", f"random-{seed}"), series
    raise ValidationError(f"unknown grid series kind {kind!r}")


def _random_delta_cell(job):
    d, seed, p_hat, dps = job
    row = {"d": d, "seed": seed, "Delta": "", "eps_d": "", "passes": "", "status": "ok"}
    try:
        # Delta_d only reads a_1..a_{d^2+2d}
        series = sample_random(RandomSpec(seed=seed, cutoff=d * d + 2 * d))
        Delta = bautin_determinant(series, d)
        eps = random_epsilon(d, p_hat, dps=dps)
        # Compare at the precision eps was rounded at
        with mp.workdps(eps.precision_digits):
            passes = mp.mpf(abs(Delta.numerator)) / Delta.denominator >= eps.value
            row["Delta"] = mp.nstr(mp.mpf(Delta.numerator) / Delta.denominator, 12)
        row["eps_d"] = eps.display()
        row["passes"] = "true" if passes else "false"
    except BautinLabError as e:
        row["status"] = e.kind
    except Exception as e:
        logger.error("Error in random_delta cell d=%d, seed=%d: %s", d, seed, e)
        logger.debug("Error stack trace: %s", traceback.format_exc())
        row["status"] = "error"
    return row


def _domination_cell(job):
    name, series, d, trials, radius, budget, seed, dps = job
    row = {field: "" for field in DOMINATION_FIELDS}
    row.update({"series": name, "d": d, "status": "ok"})
    try:
        # ==== Bound side: exact b and delta for square(d) ====
        family = MonomialFamily("square", d)
        report = bautin_index(series, family)
        if report.stalled:
            row["status"] = "stalled"
            return row
        b = report.b
        matrix = build_bautin_matrix(power_table(series, d, b), family, b)
        minor = max_nonzero_minor(matrix, family.m, mode="auto", budget=budget)
        bound = z_bound_unit(b, family.m, minor.value, dps=dps)

        # ==== Count side: random curves plus the witness ====
        # the witness has the largest multiplicity at 0 in the family
        witness = witness_polynomial(series, family)
        estimate = empirical_Z(
            series,
            family.columns,
            trials,
            radius,
            adversarial=[witness.polynomial],
            seed=seed,
        )
        dominated = estimate.value <= bound.value
        row.update(
            {
                "b": b,
                "sigma": family.m,
                "delta": f"{float(minor.value):.6e}",
                "minor_mode": minor.mode,
                "bound": bound.display(),
                "empirical_Z": estimate.value,
                "certified_counts": estimate.certified_counts,
                "attempts": estimate.attempts,
                "dominated": "true" if dominated else "false",
            }
        )
        if not dominated:
            logger.warning("FINDING: %s at d=%d exceeds its zero bound", name, d)
    except BautinLabError as e:
        row["status"] = e.kind
    except Exception as e:
        logger.error("Error in domination cell %s, d=%d: %s", name, d, e)
        logger.debug("Error stack trace: %s", traceback.format_exc())
        row["status"] = "error"
    return row


def _map(function, jobs, workers):
    # pool.map keeps job order
    if workers > 1 and len(jobs) > 1:
        with Pool(processes=workers) as pool:
            return pool.map(function, jobs)
    return [function(job) for job in jobs]


def run_random_delta(section, workers=1, dps=None):
    """Rows (d, seed, Delta, eps_d, passes, status), degrees outer and seeds inner."""
    degrees = [int(d) for d in section.get("degrees", [])]
    seeds = expand_seeds(section.get("seeds", []))
    p_hat = to_fraction(section.get("p_hat", "1/2"))
    jobs = [(d, seed, p_hat, dps) for d in degrees for seed in seeds]
    logger.info("Running random_delta over %d cells...", len(jobs))
    return _map(_random_delta_cell, jobs, workers), p_hat, seeds


def run_domination(section, workers=1, dps=None, base_dir="."):
    degrees = [int(d) for d in section.get("degrees", [])]
    trials = int(section.get("trials", 10))
    radius = to_fraction(section.get("radius", "1/4"))
    budget = int(section.get("budget", 10**6))
    seed = int(section.get("seed", 0))
    grid = [load_grid_series(entry, base_dir) for entry in section.get("series", [])]
    jobs = [
        (name, series, d, trials, radius, budget, seed, dps)
        for name, series in grid
        for d in degrees
    ]
    logger.info("Running domination over %d cells...", len(jobs))
    return _map(_domination_cell, jobs, workers)


def run_sweep(config, out_dir, workers=1, dps=None, base_dir="."):
    """
    Run both experiments and write random_delta.csv, domination.csv and summary.json.

    Returns:
        tuple: (summary dict, list of written paths, seeds used)
    """
    dps = resolve_dps(dps)
    random_rows, p_hat, seeds = run_random_delta(
        config.get("random_delta", {}), workers, dps
    )
    domination_rows = run_domination(config.get("domination", {}), workers, dps, base_dir)

    summary = generate_sweep_summary(random_rows, domination_rows, p_hat)
    logger.info(render_summary_text(summary))

    outputs = [
        write_report(
            os.path.join(out_dir, "random_delta.csv"),
            generate_csv_report(random_rows, RANDOM_DELTA_FIELDS),
        ),
        write_report(
            os.path.join(out_dir, "domination.csv"),
            generate_csv_report(domination_rows, DOMINATION_FIELDS),
        ),
        write_report(os.path.join(out_dir, "summary.json"), dump_json(summary)),
    ]
    return summary, outputs, seeds


