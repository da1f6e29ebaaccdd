"""
Cross-module acceptance checks.

These run the exact engine against its own oracles at desk scale and take longer
than the unit tests; deselect them with -m "not slow".
"""

import json
import os
from fractions import Fraction
from math import factorial, sqrt

import numpy as np
import pytest

from modules.bautin_core import (
    MonomialFamily,
    bautin_determinant,
    transcendence_index,
    witness_polynomial,
)
from modules.bounds import (
    composite_T,
    delta_lower_rational,
    evaluate_polynomial,
    remez_check,
    remez_grid,
    sublevel_mask,
    z_bound_general,
)
from modules.diophantine import scan_graph_points
from modules.series_core import height_profile
from modules.generators import (
    RandomSpec,
    gen_lacunary,
    gen_recurrence,
    lacunary_nu_sandwich,
    sample_random,
)
from modules.summary import summarize_random_delta
from modules.sweep import run_domination, run_random_delta
from modules.zero_oracle import (
    CurvePolynomial,
    count_zeros_disc,
    empirical_Z,
    multiplicity_at_origin,
)

QUARTER = Fraction(1, 4)

pytestmark = [pytest.mark.slow, pytest.mark.timeout(900)]


@pytest.mark.parametrize("d", [2, 3, 4])
def test_lacunary_nu_inside_sandwich(lacunary_spec, d):
    f = gen_lacunary(lacunary_spec, 100)
    sandwich = lacunary_nu_sandwich(lacunary_spec, d)
    report = transcendence_index(f, d)
    assert not report.stalled
    assert sandwich.lower <= report.b <= sandwich.upper


def test_random_determinants_clear_threshold():
    rows, p_hat, _ = run_random_delta(
        {"degrees": [1, 2], "seeds": {"start": 0, "count": 200}, "p_hat": "1/2"}
    )
    summary = summarize_random_delta(rows, p_hat)
    for d in ("1", "2"):
        assert summary[d]["samples"] == 200
        assert summary[d]["meets_floor"]


def test_domination_over_grid(data_dir):
    section = {
        "degrees": [1, 2],
        "trials": 4,
        "series": [
            {"kind": "file", "path": "e_minus_1.json"},
            {"kind": "random", "seed": 1, "cutoff": 80},
            {"kind": "random", "seed": 2, "cutoff": 80},
        ],
    }
    rows = run_domination(section, base_dir=data_dir)
    assert len(rows) == 6
    assert all(row["status"] == "ok" for row in rows)
    assert all(row["dominated"] == "true" for row in rows)


def test_domination_over_shipped_sweep_config(data_dir):
    with open(os.path.join(data_dir, "sweep_acceptance.json"), encoding="utf-8") as handle:
        section = json.load(handle)["domination"]
    rows = run_domination(section, workers=4, base_dir=data_dir)
    # e^z - 1, the lacunary series and five random seeds, d = 1..3
    assert len(rows) == 21
    assert not [row for row in rows if row["status"] == "error"]
    assert not [row for row in rows if row["dominated"] == "false"]
    assert sum(row["certified_counts"] for row in rows if row["status"] == "ok") >= 100


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("source", ["exp", 1, 2])
def test_determinant_clears_height_floor(exp_series, d, source):
    if source == "exp":
        f = exp_series
    else:
        f = sample_random(RandomSpec(seed=source, cutoff=80))
    delta = bautin_determinant(f, d)
    assert delta != 0
    nu = transcendence_index(f, 2 * d).b
    h = height_profile(f, nu).h_at(nu)
    floor = delta_lower_rational(d, nu, h)
    assert floor.rounded == "down"
    assert abs(delta) >= floor.value


def test_remez_holds_on_random_polynomials():
    rng = np.random.default_rng(2026)
    resolution = {1: 200, 2: 40}
    grids = {n: remez_grid(n, resolution[n]) for n in (1, 2)}
    for trial in range(1000):
        n = int(rng.integers(1, 3))
        d = int(rng.integers(1, 4))
        fraction = (0.25, 0.5)[trial % 2]
        if n == 1:
            exponents = [(i,) for i in range(d + 1)]
        else:
            exponents = [(i, j) for i in range(d + 1) for j in range(d + 1) if i + j <= d]
        P = {e: float(c) for e, c in zip(exponents, rng.uniform(-1, 1, len(exponents)))}
        mask = sublevel_mask(evaluate_polynomial(P, grids[n]), fraction)
        result = remez_check(P, mask, n, d, resolution[n])
        assert result.status != "counterexample", (trial, P, fraction)


def test_witness_count_bounded_by_general_bound(exp_series):
    family = MonomialFamily("square", 1)
    witness = witness_polynomial(exp_series, family)
    count = count_zeros_disc(witness.polynomial, exp_series, QUARTER)
    assert count.certified
    bound = z_bound_general(1, 3, Fraction(1, 12))
    assert count.count <= bound.value


def test_composite_bound_dominates_general_bound():
    # nu_d = (d^2 + 3d)/2 and log h_l = log l! <= l^2 for e^z - 1
    chained = composite_T(1, [0, Fraction(3, 2), Fraction(1, 2)], [0, 0, 1])
    assert chained.value == 13550
    assert chained.as_mpf() >= z_bound_general(1, 3, Fraction(1, 12)).as_mpf()


@pytest.mark.parametrize(
    "name, L2, d2",
    [("recurrence_factorial.json", 1, 1), ("recurrence_three_term.json", 6, 1)],
)
def test_linear_recurrence_denominator_envelope(load_recurrence, name, L2, d2):
    spec = load_recurrence(name)
    _, trace = gen_recurrence(spec, 60)
    for k, D in enumerate(trace):
        assert (L2 * spec.L1**k * factorial(k) ** d2) % D == 0


@pytest.mark.parametrize("d", [1, 2])
def test_witness_count_repeats_ten_terms_later(exp_series, d):
    witness = witness_polynomial(exp_series, MonomialFamily("square", d))
    first = count_zeros_disc(witness.polynomial, exp_series, QUARTER)
    assert first.certified
    assert first.N + 10 <= exp_series.order
    second = count_zeros_disc(witness.polynomial, exp_series, QUARTER, N=first.N + 10)
    assert second.certified
    assert second.count == first.count
    assert first.count >= witness.multiplicity


def test_certified_counts_stable_under_longer_truncation(exp_series):
    P = CurvePolynomial({(0, 1): 1, (1, 0): -1, (2, 0): Fraction(-1, 2)})
    first = count_zeros_disc(P, exp_series, QUARTER, N=40)
    second = count_zeros_disc(P, exp_series, QUARTER, N=50)
    assert first.certified and second.certified
    assert first.count == second.count == 3
    assert first.companion_count == first.winding_count
    assert multiplicity_at_origin(P, exp_series, 10) <= first.count


def test_empirical_z_nondecreasing_in_trials(exp_series):
    columns = MonomialFamily("square", 1).columns
    values = [
        empirical_Z(exp_series, columns, trials, QUARTER, seed=3).value for trials in (2, 4, 8)
    ]
    assert values == sorted(values)


def test_exclusions_survive_longer_truncation(exp_series):
    base = scan_graph_points(exp_series, 30)
    longer = scan_graph_points(exp_series, 30, N=base.N + 20)
    assert base.to_dict()["certified_points"] == longer.to_dict()["certified_points"]
    assert base.excluded == longer.excluded


@pytest.mark.parametrize(
    "T, workers",
    [(50, 2), (500, 2), pytest.param(5000, 4, marks=pytest.mark.timeout(3600))],
)
def test_only_origin_on_exponential_graph(exp_series, T, workers):
    report = scan_graph_points(exp_series, T, workers=workers)
    assert [(p.x, p.y) for p in report.certified] == [(0, 0)]
    assert report.unresolved == []


def test_found_points_nondecreasing_in_height(exp_series):
    found = []
    for T in (1, 5, 10, 20, 40):
        report = scan_graph_points(exp_series, T)
        found.append(len(report.certified) + len(report.unresolved))
    assert found == sorted(found)
    assert found[0] == 1


def test_random_coefficients_are_centered():
    samples = [sample_random(RandomSpec(seed=seed, cutoff=3)).coeffs[3] for seed in range(1000)]
    mean = sum(float(a) for a in samples) / len(samples)
    assert abs(mean) <= 4 * (1 / sqrt(3)) / sqrt(len(samples))
