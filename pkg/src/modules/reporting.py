"""
Module for writing bautin-lab results as CSV, JSON and run manifests.
"""

import csv
import datetime
import io
import json
import logging
import os
import platform
from fractions import Fraction
from importlib import metadata

logger = logging.getLogger(__name__)

TRACKED_PACKAGES = ("numpy", "mpmath", "sympy")


def generate_csv_report(rows, fieldnames):
    """
    Generate CSV content from a list of row dictionaries.

    Args:
        rows: List of dictionaries keyed by fieldnames
        fieldnames: Column order of the CSV

    Returns:
        The CSV content as a string (header only when rows is empty)
    """
    logger.info("Generating CSV report with %d rows...", len(rows))

    # Write into memory first so callers decide where the content goes
    csv_buffer = io.StringIO()
    csv_writer = csv.DictWriter(csv_buffer, fieldnames=fieldnames, lineterminator="\n")
    csv_writer.writeheader()
    for row in rows:
        csv_writer.writerow(row)
    return csv_buffer.getvalue()


def report_filename(prefix, extension):
    """Timestamped file name such as ratpoints-2026-10-19-12-00-00.csv."""
    timestamp = datetime.datetime.now().strftime("%Y-%m-%d-%H-%M-%S")
    return f"{prefix}-{timestamp}.{extension}"


def to_jsonable(value):
    """Recursively convert Fractions to ["num", "den"] pairs and tuples to lists."""
    if isinstance(value, Fraction):
        return [str(value.numerator), str(value.denominator)]
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return value


def dump_json(value):
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(value), sort_keys=True, indent=2) + "\n"


def write_report(path, content):
    """
    Write report content to a local file, creating parent directories.

    Returns:
        The path written
    """
    logger.info("Writing report to %s", path)
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        logger.info("Successfully wrote %s", path)
        return path
    except Exception as e:
        error_msg = str(e)
        logger.error("Error writing report: %s", error_msg)
        raise


def package_versions():
    versions = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


def build_manifest(subcommand, argv, settings, seeds=(), outputs=()):
    """
    Run manifest: everything needed to replay a run.

    Only the "timestamps" entry differs between a run and its replay.
    """
    return {
        "subcommand": subcommand,
        "argv": list(argv),
        "settings": to_jsonable(settings),
        "seeds": list(seeds),
        "versions": package_versions(),
        "timestamps": {"created": datetime.datetime.now().isoformat(timespec="seconds")},
        "outputs": list(outputs),
    }
