"""Tests for lacunary, recurrence and random series generators."""

import json
import os
from fractions import Fraction
from math import factorial

import pytest
from mpmath import mp

from modules.bautin_core import MonomialFamily, build_bautin_matrix, minor_determinant
from modules.errors import (
    LacunarityViolationError,
    OutOfRangeError,
    ValidationError,
)
from modules.generators import (
    CoefficientRule,
    ExponentRule,
    LacunarySpec,
    RandomSpec,
    RecurrenceSpec,
    denominator_bound,
    denominator_violations,
    gen_lacunary,
    gen_recurrence,
    lacunary_minor_closed_form,
    lacunary_nu_sandwich,
    lacunary_power_check,
    lacunary_spec_from_json,
    recurrence_growth,
    sample_random,
    sample_random_batch,
)
from modules.series_core import power_table


class TestLacunary:
    def test_placement(self, lacunary_spec):
        f = gen_lacunary(lacunary_spec, 26)
        nonzero = [k for k, a in enumerate(f.coeffs) if a != 0]
        assert nonzero == [2, 5, 26]
        assert f.coeffs[5] == Fraction(1, 4)
        assert (f.radius, f.bound) == (1, 1)

    def test_square_plus_rule(self):
        rule = ExponentRule(kind="square_plus", start=2, offset=1)
        assert rule.exponents(700) == [2, 5, 26, 677, 677**2 + 1]
        spec = LacunarySpec(rule, CoefficientRule(kind="geometric"), q=Fraction(3))
        assert gen_lacunary(spec, 700).coeffs[677] == Fraction(1, 16)

    def test_gap_violation(self):
        spec = LacunarySpec(
            ExponentRule(kind="explicit", values=(2, 4, 20)),
            CoefficientRule(kind="geometric"),
        )
        with pytest.raises(LacunarityViolationError) as excinfo:
            gen_lacunary(spec, 20)
        assert excinfo.value.k == 2

    def test_upper_exponent_violation(self):
        spec = LacunarySpec(
            ExponentRule(kind="explicit", values=(2, 9)),
            CoefficientRule(kind="geometric"),
            q=Fraction(3),
        )
        with pytest.raises(LacunarityViolationError):
            gen_lacunary(spec, 10)

    def test_decay_violation(self):
        spec = LacunarySpec(
            ExponentRule(kind="explicit", values=(2, 5, 26)),
            CoefficientRule(kind="explicit", values=(Fraction(1, 2), Fraction(1, 10**6))),
            p=Fraction(1),
        )
        with pytest.raises(LacunarityViolationError) as excinfo:
            gen_lacunary(spec, 10)
        assert excinfo.value.k == 2

    def test_constant_rule_metadata(self):
        spec = LacunarySpec(
            ExponentRule(kind="explicit", values=(2, 5)),
            CoefficientRule(kind="constant", value=3),
        )
        f = gen_lacunary(spec, 5)
        assert (f.radius, f.bound) == (Fraction(1, 2), 3)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_sandwich(self, lacunary_spec, d):
        sandwich = lacunary_nu_sandwich(lacunary_spec, d)
        assert (sandwich.l, sandwich.lower, sandwich.upper) == (1, 5, 24)

    def test_sandwich_out_of_range(self, lacunary_spec):
        with pytest.raises(OutOfRangeError):
            lacunary_nu_sandwich(lacunary_spec, 1)

    def test_closed_form_upper_minor(self, lacunary_spec):
        minor = lacunary_minor_closed_form(lacunary_spec, 4)
        assert minor.value == Fraction(1, 2**100)
        assert minor.exponent == 50
        assert minor.upper_square
        assert minor.rows == tuple(range(25))

    def test_closed_form_exponent(self, lacunary_spec):
        minor = lacunary_minor_closed_form(lacunary_spec, 2)
        assert minor.value == Fraction(1, 4) ** 9
        assert not minor.upper_square

    @pytest.mark.parametrize("d", [2, 3])
    def test_closed_form_matches_exact_minor(self, lacunary_spec, d):
        minor = lacunary_minor_closed_form(lacunary_spec, d)
        family = MonomialFamily("square", d)
        K = max(minor.rows)
        f = gen_lacunary(lacunary_spec, max(K, 26))
        matrix = build_bautin_matrix(power_table(f, d, K), family, K)
        assert minor_determinant(matrix, minor.rows).value == minor.value

    def test_power_structure(self, lacunary_spec):
        assert lacunary_power_check(lacunary_spec, 1) == []

    def test_power_structure_short_rule(self, lacunary_spec):
        with pytest.raises(OutOfRangeError):
            lacunary_power_check(lacunary_spec, 2)

    def test_json_reader(self, data_dir):
        with open(os.path.join(data_dir, "lacunary_example.json"), encoding="utf-8") as handle:
            spec = lacunary_spec_from_json(json.load(handle))
        assert spec.q == 3 and spec.p == 1
        assert spec.exponent_rule.values == (2, 5, 26)

    def test_json_reader_missing_rule(self):
        with pytest.raises(ValidationError):
            lacunary_spec_from_json({"exponents": {"kind": "explicit", "values": [2]}})


class TestRecurrence:
    def test_factorials(self, load_recurrence):
        spec = load_recurrence("recurrence_factorial.json")
        series, trace = gen_recurrence(spec, 6)
        assert series.coeffs == tuple(
            Fraction(1, factorial(k)) if k else 0 for k in range(7)
        )
        assert trace[4] == 24

    def test_exponential_from_one(self):
        spec = RecurrenceSpec(
            r=1, d1=1, d2=1, shift=1, coefficients={((1,), 1): 1}, initial=(1,)
        )
        series, trace = gen_recurrence(spec, 4)
        assert series.coeffs[4] == Fraction(1, 24)
        assert trace[4] == 24

    def test_squaring(self, load_recurrence):
        spec = load_recurrence("recurrence_square.json")
        series, trace = gen_recurrence(spec, 5)
        for k in range(6):
            assert series.coeffs[k] == Fraction(1, 2 ** (2**k))
            assert trace[k] == 2 ** (2**k)

    def test_step_constant_from_initial_terms(self):
        spec = RecurrenceSpec(
            r=3,
            d1=1,
            d2=0,
            coefficients={((1, 0, 0), 0): 1},
            initial=(1, Fraction(1, 2), Fraction(1, 8)),
        )
        report = denominator_bound(spec, 10)
        assert report.inputs["k0"] == 2
        with mp.workdps(30):
            assert abs(mp.mpf(report.inputs["M"]) - mp.mpf(1.5)) < mp.mpf(10) ** -15
        assert not report.notes

    def test_adjusted_base_is_flagged(self, load_recurrence):
        spec = load_recurrence("recurrence_factorial.json")
        assert denominator_bound(spec, 10).notes

    def test_bound_below_base_index(self, load_recurrence):
        spec = load_recurrence("recurrence_factorial.json")
        with pytest.raises(ValidationError):
            denominator_bound(spec, 1)

    @pytest.mark.parametrize(
        "name",
        [
            "recurrence_factorial.json",
            "recurrence_half_factorial.json",
            "recurrence_three_term.json",
        ],
    )
    def test_linear_growth_holds(self, load_recurrence, name):
        spec = load_recurrence(name)
        _, trace = gen_recurrence(spec, 120)
        assert denominator_violations(spec, trace) == []

    def test_quadratic_growth_holds(self, load_recurrence):
        spec = load_recurrence("recurrence_square.json")
        _, trace = gen_recurrence(spec, 14)
        assert denominator_violations(spec, trace) == []

    def test_growth_polynomial(self, load_recurrence):
        spec = load_recurrence("recurrence_three_term.json")
        S = recurrence_growth(spec)
        assert S[:2] == [0, 0]
        with mp.workdps(30):
            M = mp.log(6) / (2 * mp.log(2))
            value = mp.mpf(S[2].numerator) / S[2].denominator
            assert M <= value <= M + mp.mpf(1) / 1000

    def test_growth_needs_linear(self, load_recurrence):
        with pytest.raises(ValidationError):
            recurrence_growth(load_recurrence("recurrence_square.json"))

    def test_bad_multi_index(self):
        with pytest.raises(ValidationError):
            RecurrenceSpec(r=1, d1=1, d2=0, coefficients={((2,), 0): 1}, initial=(1,))

    def test_division_by_zero_index_rejected(self):
        with pytest.raises(ValidationError):
            RecurrenceSpec(r=1, d1=1, d2=1, coefficients={((1,), 1): 1}, initial=(1,))


class TestRandom:
    def test_deterministic(self):
        first = sample_random(RandomSpec(seed=5, cutoff=12))
        second = sample_random(RandomSpec(seed=5, cutoff=12))
        assert first == second

    def test_seeds_differ(self):
        assert sample_random(RandomSpec(seed=1, cutoff=6)) != sample_random(
            RandomSpec(seed=2, cutoff=6)
        )

    def test_coefficients_are_dyadic_in_unit_interval(self):
        f = sample_random(RandomSpec(seed=3, cutoff=30))
        assert len(f.coeffs) == 31
        for a in f.coeffs:
            assert -1 < a < 1
            assert a.denominator <= 2**64
            assert a.denominator & (a.denominator - 1) == 0
        assert (f.radius, f.bound) == (Fraction(1, 2), 2)
        assert f.cauchy_violations() == []

    def test_batch(self):
        batch = sample_random_batch([4, 5], 8)
        assert batch[1] == sample_random(RandomSpec(seed=5, cutoff=8))

    def test_negative_cutoff(self):
        with pytest.raises(ValidationError):
            RandomSpec(seed=0, cutoff=-1)
