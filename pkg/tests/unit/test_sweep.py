"""Tests for the batch sweep over random determinants and bound domination."""

import csv
import json
import os
from fractions import Fraction

import pytest

from modules.errors import TruncationTooShortError, ValidationError
from modules.sweep import (
    DOMINATION_FIELDS,
    RANDOM_DELTA_FIELDS,
    expand_seeds,
    load_grid_series,
    run_domination,
    run_random_delta,
    run_sweep,
)

SMALL_CONFIG = {
    "random_delta": {"degrees": [1], "seeds": [0, 1, 2], "p_hat": "1/2"},
    "domination": {
        "degrees": [1],
        "trials": 2,
        "series": [{"kind": "file", "name": "e_minus_1", "path": "e_minus_1.json"}],
    },
}


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


class TestGrid:
    def test_expand_seed_range(self):
        assert expand_seeds({"start": 5, "count": 3}) == [5, 6, 7]
        assert expand_seeds(["1", 2]) == [1, 2]

    def test_load_file_series(self, data_dir):
        name, series = load_grid_series({"kind": "file", "path": "algebraic_z.json"}, data_dir)
        assert name == "algebraic_z.json"
        assert series.coeffs[1] == 1

    def test_load_random_series(self):
        name, series = load_grid_series({"kind": "random", "seed": 4, "cutoff": 10})
        assert name == "random-4"
        assert series.order == 10

    def test_load_lacunary_series(self):
        entry = {
            "kind": "lacunary",
            "order": 30,
            "spec": {
                "exponents": {"kind": "explicit", "values": [2, 5, 26]},
                "coefficients": {"kind": "geometric", "ratio": "1/2"},
            },
        }
        _, series = load_grid_series(entry)
        assert series.coeffs[26] == Fraction(1, 8)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            load_grid_series({"kind": "bessel"})


class TestCells:
    def test_random_delta_rows(self):
        rows, p_hat, seeds = run_random_delta({"degrees": [1], "seeds": [0, 1]})
        assert p_hat == Fraction(1, 2)
        assert seeds == [0, 1]
        assert [(row["d"], row["seed"]) for row in rows] == [(1, 0), (1, 1)]
        assert all(row["status"] == "ok" for row in rows)
        assert all(row["passes"] in ("true", "false") for row in rows)

    def test_random_delta_error_kinds(self, mocker):
        mocker.patch(
            "modules.sweep.bautin_determinant",
            side_effect=[TruncationTooShortError("short"), RuntimeError("boom")],
        )
        rows, _, _ = run_random_delta({"degrees": [1], "seeds": [0, 1]})
        assert [row["status"] for row in rows] == ["truncation-too-short", "error"]

    def test_domination_dominated(self, data_dir):
        rows = run_domination(SMALL_CONFIG["domination"], base_dir=data_dir)
        (row,) = rows
        assert row["status"] == "ok"
        assert (row["b"], row["sigma"]) == (3, 4)
        assert row["empirical_Z"] >= 3
        assert row["dominated"] == "true"

    def test_domination_stalled(self, data_dir):
        section = {
            "degrees": [1],
            "trials": 1,
            "series": [{"kind": "file", "path": "algebraic_z.json"}],
        }
        (row,) = run_domination(section, base_dir=data_dir)
        assert row["status"] == "stalled"
        assert row["bound"] == ""


class TestRunSweep:
    def test_outputs(self, tmp_path, data_dir):
        summary, outputs, seeds = run_sweep(SMALL_CONFIG, str(tmp_path), base_dir=data_dir)
        assert sorted(os.path.basename(p) for p in outputs) == [
            "domination.csv",
            "random_delta.csv",
            "summary.json",
        ]
        assert seeds == [0, 1, 2]
        assert len(read_csv(tmp_path / "random_delta.csv")) == 3
        assert list(read_csv(tmp_path / "domination.csv")[0]) == DOMINATION_FIELDS
        with open(tmp_path / "summary.json", encoding="utf-8") as handle:
            assert json.load(handle) == json.loads(json.dumps(summary))
        assert summary["domination"]["violations"] == []

    def test_empty_grid_writes_headers(self, tmp_path):
        summary, _, seeds = run_sweep({}, str(tmp_path))
        assert (tmp_path / "random_delta.csv").read_text() == ",".join(RANDOM_DELTA_FIELDS) + "\n"
        assert (tmp_path / "domination.csv").read_text() == ",".join(DOMINATION_FIELDS) + "\n"
        assert summary["domination"]["cells"] == 0
        assert seeds == []

    def test_csv_bytes_are_reproducible(self, tmp_path, data_dir):
        first, second = tmp_path / "first", tmp_path / "second"
        run_sweep(SMALL_CONFIG, str(first), base_dir=data_dir)
        run_sweep(SMALL_CONFIG, str(second), workers=2, base_dir=data_dir)
        for name in ("random_delta.csv", "domination.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()
