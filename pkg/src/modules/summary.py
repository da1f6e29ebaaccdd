"""
Module for summarizing sweep results.

Builds the machine-readable summary written to summary.json and a plain-text
narrative for the log, counting rows by status the way a review report counts
findings by severity.
"""

import datetime
import logging
from math import sqrt

logger = logging.getLogger(__name__)


def summarize_random_delta(rows, p_hat):
    """
    Per degree: samples, passes, observed fraction, acceptance floor p - 3 sqrt(p(1-p)/n).
    """
    by_degree = {}
    for row in rows:
        entry = by_degree.setdefault(
            int(row["d"]), {"samples": 0, "passes": 0, "errors": 0}
        )
        if row["status"] != "ok":
            entry["errors"] += 1
            continue
        entry["samples"] += 1
        if row["passes"] == "true":
            entry["passes"] += 1
    p = float(p_hat)
    for entry in by_degree.values():
        n = entry["samples"]
        entry["fraction"] = entry["passes"] / n if n else None
        entry["floor"] = p - 3 * sqrt(p * (1 - p) / n) if n else None
        entry["meets_floor"] = bool(n) and entry["fraction"] >= entry["floor"]
    return {str(d): by_degree[d] for d in sorted(by_degree)}


def summarize_domination(rows):
    cells = len(rows)
    statuses = {}
    violations = []
    certified_counts = 0
    for row in rows:
        statuses[row["status"]] = statuses.get(row["status"], 0) + 1
        if row["status"] != "ok":
            continue
        certified_counts += int(row["certified_counts"])
        if row["dominated"] != "true":
            violations.append({"series": row["series"], "d": row["d"]})
    return {
        "cells": cells,
        "statuses": statuses,
        "certified_counts": certified_counts,
        "violations": violations,
    }


def generate_sweep_summary(random_rows, domination_rows, p_hat):
    return {
        "random_delta": summarize_random_delta(random_rows, p_hat),
        "domination": summarize_domination(domination_rows),
    }


def render_summary_text(summary):
    """Plain-text narrative of a sweep summary."""
    timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    text = f"\nBautin Lab Sweep Summary - {timestamp}\n\nRANDOM SERIES DETERMINANTS\n"
    random_delta = summary["random_delta"]
    if not random_delta:
        text += "No random-series cells were run.\n"
    for d, entry in random_delta.items():
        if not entry["samples"]:
            text += f"d={d}: no completed samples ({entry['errors']} errors)\n"
            continue
        verdict = "meets" if entry["meets_floor"] else "misses"
        text += (
            f"d={d}: {entry['passes']}/{entry['samples']} samples with |Delta| >= eps "
            f"(fraction {entry['fraction']:.3f}, {verdict} floor {entry['floor']:.3f})\n"
        )

    domination = summary["domination"]
    text += (
        "\nBOUND DOMINATION\n"
        f"Cells: {domination['cells']}\n"
        f"Certified zero counts: {domination['certified_counts']}\n"
    )
    for status, count in sorted(domination["statuses"].items()):
        text += f"{status}: {count} cells\n"
    if domination["violations"]:
        text += "\nVIOLATIONS REQUIRING ATTENTION\n"
        for violation in domination["violations"][:5]:
            text += f"- {violation['series']} at d={violation['d']}\n"
        if len(domination["violations"]) > 5:
            text += f"...and {len(domination['violations']) - 5} more.\n"
    else:
        text += "No certified count exceeded its bound.\n"
    return text
