"""Tests for Bautin matrices, indices, determinants and multiplicities."""

from fractions import Fraction

import pytest
import sympy

from modules.bautin_core import (
    MonomialFamily,
    bautin_determinant,
    bautin_index,
    bautin_multiplicity,
    bautin_multiplicity_auto,
    build_bautin_matrix,
    max_nonzero_minor,
    minor_determinant,
    norm_constant,
    symbolic_bautin_determinant,
    tilde_matrix,
    transcendence_index,
    transcendence_sequence,
    witness_polynomial,
)
from modules.errors import (
    RankDeficientError,
    TableTooSmallError,
    TruncationTooShortError,
    ValidationError,
)
from modules.exact_linalg import bareiss_det
from modules.series_core import ExactSeries, power_table
from modules.zero_oracle import substitute

SQUARE_1 = MonomialFamily("square", 1)


class TestMonomialFamily:
    def test_square_columns(self):
        assert SQUARE_1.columns == [(0, 0), (1, 0), (0, 1), (1, 1)]
        assert SQUARE_1.m == 4

    def test_total_columns(self):
        family = MonomialFamily("total", 2)
        assert family.columns == [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)]
        assert family.m == 6

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            MonomialFamily("diagonal", 1)


class TestBautinMatrix:
    def test_exp_rows(self, exp_series):
        matrix = build_bautin_matrix(power_table(exp_series, 1, 3), SQUARE_1, 3)
        assert [list(r) for r in matrix.rows] == [
            [1, 0, 0, 0],
            [0, 1, 1, 0],
            [0, 0, Fraction(1, 2), 1],
            [0, 0, Fraction(1, 6), Fraction(1, 2)],
        ]

    def test_identity_rows(self, identity_series):
        matrix = build_bautin_matrix(power_table(identity_series, 1, 2), SQUARE_1, 2)
        assert [list(r) for r in matrix.rows] == [
            [1, 0, 0, 0],
            [0, 1, 1, 0],
            [0, 0, 0, 1],
        ]

    def test_pure_z_columns_are_unit(self, exp_series):
        family = MonomialFamily("square", 2)
        matrix = build_bautin_matrix(power_table(exp_series, 2, 8), family, 8)
        for i in range(3):
            column = [row[i] for row in matrix.rows]
            assert column == [1 if k == i else 0 for k in range(9)]

    def test_table_too_small(self, exp_series):
        with pytest.raises(TableTooSmallError):
            build_bautin_matrix(power_table(exp_series, 1, 3), SQUARE_1, 5)


class TestBautinIndex:
    def test_exp_square_one(self, exp_series):
        report = bautin_index(exp_series, SQUARE_1, 10)
        assert report.b == 3
        assert report.sigma == 4
        assert report.rank_trace[:4] == ((0, 1), (1, 2), (2, 3), (3, 4))
        assert not report.stalled

    def test_identity_stalls(self, identity_series):
        report = bautin_index(identity_series, SQUARE_1, 10)
        assert report.stalled
        assert report.sigma == 3
        assert [list(v) for v in report.kernel] == [[0, -1, 1, 0]]
        assert report.to_dict()["b"] == "stalled"

    def test_default_cap_needs_coefficients(self, short_exp_series):
        with pytest.raises(TruncationTooShortError):
            bautin_index(short_exp_series, SQUARE_1)

    def test_transcendence_index(self, exp_series):
        assert transcendence_index(exp_series, 1).b == 2

    def test_transcendence_lower_bound(self, exp_series):
        for d, nu in enumerate(transcendence_sequence(exp_series, 3), start=1):
            assert nu >= (d * d + 3 * d) / 2

    def test_transcendence_sequence_nondecreasing(self, exp_series):
        values = transcendence_sequence(exp_series, 3)
        assert values == sorted(values)


class TestBautinDeterminant:
    def test_tilde_matrix(self, exp_series):
        table = power_table(exp_series, 1, 3)
        assert tilde_matrix(table, 1, 3) == [[Fraction(1, 2), 1], [Fraction(1, 6), Fraction(1, 2)]]

    def test_exp_value(self, exp_series):
        assert bautin_determinant(exp_series, 1) == Fraction(1, 12)

    def test_identity_vanishes(self, identity_series):
        assert bautin_determinant(identity_series, 1) == 0

    def test_symbolic_degree_one(self):
        a1, a2, a3 = sympy.symbols("a1:4")
        poly = symbolic_bautin_determinant(1)
        assert sympy.expand(poly.as_expr() - (a2**2 - a1 * a3)) == 0

    def test_symbolic_matches_exact(self, exp_series):
        poly = symbolic_bautin_determinant(2)
        assert poly.is_homogeneous
        assert poly.total_degree() == 2 * 9 // 2
        values = [sympy.Rational(c.numerator, c.denominator) for c in exp_series.coeffs[1:9]]
        exact = bautin_determinant(exp_series, 2)
        value = poly.as_expr().subs(dict(zip(poly.gens, values)))
        assert value == sympy.Rational(exact.numerator, exact.denominator)


class TestMinors:
    def test_exp_delta(self, exp_series):
        matrix = build_bautin_matrix(power_table(exp_series, 1, 3), SQUARE_1, 3)
        result = max_nonzero_minor(matrix, 4, mode="exhaustive")
        assert result.value == Fraction(1, 12)
        assert result.rows == (0, 1, 2, 3)
        assert result.mode == "exhaustive-max"

    def test_identity_rank_three_block(self, identity_series):
        matrix = build_bautin_matrix(power_table(identity_series, 1, 2), SQUARE_1, 2)
        result = minor_determinant(matrix, (0, 1, 2), (0, 1, 3))
        assert result.value == 1

    def test_rank_deficient(self, identity_series):
        matrix = build_bautin_matrix(power_table(identity_series, 1, 6), SQUARE_1, 6)
        with pytest.raises(RankDeficientError):
            max_nonzero_minor(matrix, 4)

    def test_exhaustive_dominates_heuristic(self, exp_series):
        family = MonomialFamily("total", 1)
        matrix = build_bautin_matrix(power_table(exp_series, 1, 6), family, 6)
        best = max_nonzero_minor(matrix, 2, mode="exhaustive")
        greedy = max_nonzero_minor(matrix, 2, mode="heuristic")
        assert greedy.value != 0
        assert best.value >= greedy.value

    def test_exhaustive_is_deterministic_across_workers(self, exp_series):
        family = MonomialFamily("total", 1)
        matrix = build_bautin_matrix(power_table(exp_series, 1, 8), family, 8)
        serial = max_nonzero_minor(matrix, 3, mode="exhaustive", workers=1)
        pooled = max_nonzero_minor(matrix, 3, mode="exhaustive", workers=2)
        assert serial == pooled

    def test_norm_constant(self, exp_series):
        matrix = build_bautin_matrix(power_table(exp_series, 1, 3), SQUARE_1, 3)
        # inverse of the 4x4 block has absolute column sums 1, 1, 14, 30
        assert norm_constant(matrix, (0, 1, 2, 3)) == 30


class TestMultiplicity:
    def test_exp_eta(self, exp_series):
        report = bautin_multiplicity(exp_series, 1, 4)
        assert report.eta == 0
        assert report.alpha == Fraction(1, 12)

    def test_exp_expansion_is_exp_2u(self, exp_series):
        report = bautin_multiplicity(exp_series, 1, 3)
        assert report.expansion == (
            Fraction(1, 12),
            Fraction(2, 12),
            Fraction(2, 12),
            Fraction(4, 36),
        )

    def test_auto_reports_cap(self, exp_series):
        report = bautin_multiplicity_auto(exp_series, 1)
        assert report.eta == 0
        assert report.attempts == [3]

    def test_identity_exceeds(self, identity_series):
        report = bautin_multiplicity_auto(identity_series, 1, cap=8)
        assert report.exceeds
        assert report.to_dict()["eta"] == ">8"


class TestWitness:
    def test_exp_witness(self, exp_series):
        witness = witness_polynomial(exp_series, SQUARE_1)
        assert witness.vector == (0, -1, 1, Fraction(-1, 2))
        assert witness.multiplicity == 3
        assert witness.leading == Fraction(-1, 12)
        coeffs = substitute(witness.polynomial, exp_series, 4)
        assert coeffs[3:] == (Fraction(-1, 12), Fraction(-1, 24))

    def test_identity_witness(self, identity_series):
        witness = witness_polynomial(identity_series, SQUARE_1, 10)
        assert witness.vector == (0, -1, 1, 0)
        assert witness.multiplicity is None

    def test_index_zero_gives_constant_curve(self):
        f = ExactSeries(coeffs=(1,) + (0,) * 20)
        witness = witness_polynomial(f, MonomialFamily("square", 0))
        assert witness.vector == (1,)
        assert witness.polynomial.lambdas == {(0, 0): 1}
        assert witness.multiplicity == 0
        assert witness.leading == 1


class TestInvariants:
    @pytest.mark.parametrize("d", [1, 2])
    def test_square_index_between_transcendence_indices(self, exp_series, d):
        square = bautin_index(exp_series, MonomialFamily("square", d)).b
        assert transcendence_index(exp_series, d).b <= square
        assert square <= transcendence_index(exp_series, 2 * d).b

    @pytest.mark.parametrize("d", [1, 2])
    def test_determinant_matches_full_square_block(self, exp_series, d):
        family = MonomialFamily("square", d)
        b = family.m - 1
        matrix = build_bautin_matrix(power_table(exp_series, d, b), family, b)
        # the unit pure-z columns strip rows 0..d, leaving the tilde block
        full = bareiss_det([list(row) for row in matrix.rows])
        assert abs(full) == abs(bautin_determinant(exp_series, d))

    @pytest.mark.parametrize("d", [1, 2])
    def test_eta_stable_when_truncation_grows(self, exp_series, d):
        K_u = d * d + 2 * d
        short = bautin_multiplicity(exp_series, d, K_u)
        longer = bautin_multiplicity(exp_series, d, K_u + 5)
        assert short.eta is not None
        assert (short.eta, short.alpha) == (longer.eta, longer.alpha)
        assert longer.expansion[: K_u + 1] == short.expansion
