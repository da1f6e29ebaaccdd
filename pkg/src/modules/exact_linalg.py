"""
Module for exact linear algebra over the rationals and over Q[u].

Matrices are lists of rows of Fractions (or, for the Q[u] routines, rows of
coefficient tuples lowest degree first). Nothing is ever rounded.

Key operations:
1. RankTracker: incremental rank of a growing row set (fraction-free integer rows)
2. bareiss_det(): determinant by fraction-free elimination with largest-pivot choice
3. bareiss_det_poly(): the same over Q[u], for determinants with polynomial entries
4. nullspace() / inverse(): reduced row echelon form over Fractions
"""

import logging
from fractions import Fraction
from math import gcd, lcm

from modules.series_core import ZERO, ONE, poly_exact_div, poly_mul, poly_sub, poly_trim

logger = logging.getLogger(__name__)


def integer_row(row):
    """
    Scale a rational row to a primitive integer row.

    Returns:
        tuple: (integer list, scale) with integer list = scale * row and scale > 0
    """
    denominators = 1
    for value in row:
        denominators = lcm(denominators, Fraction(value).denominator)
    ints = [int(Fraction(value) * denominators) for value in row]
    content = 0
    for value in ints:
        content = gcd(content, value)
    if content > 1:
        ints = [value // content for value in ints]
        return ints, Fraction(denominators, content)
    return ints, Fraction(denominators)


def _primitive(ints):
    content = 0
    for value in ints:
        content = gcd(content, value)
    if content > 1:
        return [value // content for value in ints]
    return ints


class RankTracker:
    """
    Echelon basis of the rows seen so far, kept as primitive integer vectors.

    Each basis row has its leading nonzero entry at a distinct pivot column and zeros
    before it, so a new row is reduced by walking the pivots in ascending order.
    """

    def __init__(self, ncols):
        self.ncols = ncols
        self.basis = {}  # pivot column -> primitive integer row

    @property
    def rank(self):
        return len(self.basis)

    @property
    def pivot_columns(self):
        return sorted(self.basis)

    def reduce(self, row):
        current, _ = integer_row(row)
        for pivot in sorted(self.basis):
            value = current[pivot]
            if value == 0:
                continue
            base = self.basis[pivot]
            head = base[pivot]
            # Cross-multiply instead of dividing, then strip the common content
            current = _primitive(
                [head * x - value * y for x, y in zip(current, base)]
            )
        return current

    def add_row(self, row):
        """Insert a row; return True if the rank grew."""
        if len(row) != self.ncols:
            raise ValueError(f"row has {len(row)} entries, expected {self.ncols}")
        reduced = self.reduce(row)
        for column, value in enumerate(reduced):
            if value != 0:
                if value < 0:
                    reduced = [-x for x in reduced]
                self.basis[column] = reduced
                return True
        return False


def rank(matrix):
    if not matrix:
        return 0
    tracker = RankTracker(len(matrix[0]))
    for row in matrix:
        tracker.add_row(row)
    return tracker.rank


def bareiss_det(matrix):
    """
    Exact determinant of a square rational matrix.

    Rows are first scaled to integers; Bareiss elimination then runs on integers,
    choosing at each step the candidate pivot of largest absolute value.
    """
    n = len(matrix)
    if n == 0:
        return ONE
    if any(len(row) != n for row in matrix):
        raise ValueError("determinant needs a square matrix")
    scale = ONE
    work = []
    for row in matrix:
        ints, factor = integer_row(row)
        scale *= factor
        work.append(ints)
    sign = 1
    previous = 1
    for k in range(n - 1):
        best = max(range(k, n), key=lambda i: abs(work[i][k]))
        if work[best][k] == 0:
            return ZERO
        if best != k:
            work[k], work[best] = work[best], work[k]
            sign = -sign
        pivot = work[k][k]
        for i in range(k + 1, n):
            factor = work[i][k]
            row_i = work[i]
            row_k = work[k]
            for j in range(k + 1, n):
                # Sylvester's identity: the division by the previous pivot is exact
                row_i[j] = (pivot * row_i[j] - factor * row_k[j]) // previous
            row_i[k] = 0
        previous = pivot
    return Fraction(sign * work[n - 1][n - 1]) / scale


def _poly_order(p):
    for index, coef in enumerate(p):
        if coef != 0:
            return index
    return None


def bareiss_det_poly(matrix, K_u):
    """
    Determinant of a square matrix over Q[u], truncated at u^K_u.

    Entries are coefficient tuples. Elimination runs on the full polynomials (Q[u]
    is an integral domain, so every Bareiss division is exact) and only the result
    is truncated, which makes it correct modulo u^(K_u+1) for truncated inputs.
    Pivots are chosen with the lowest u-order among nonzero candidates.
    """
    n = len(matrix)
    if n == 0:
        return (ONE,) + (ZERO,) * K_u
    work = [[poly_trim(entry) for entry in row] for row in matrix]
    sign = 1
    previous = (ONE,)
    for k in range(n - 1):
        candidates = [
            (_poly_order(work[i][k]), i) for i in range(k, n) if work[i][k]
        ]
        if not candidates:
            return (ZERO,) * (K_u + 1)
        # Lowest u-order first, ties to the lowest row index
        _, best = min(candidates)
        if best != k:
            work[k], work[best] = work[best], work[k]
            sign = -sign
        pivot = work[k][k]
        for i in range(k + 1, n):
            factor = work[i][k]
            for j in range(k + 1, n):
                numerator = poly_sub(
                    poly_mul(pivot, work[i][j]), poly_mul(factor, work[k][j])
                )
                work[i][j] = poly_exact_div(numerator, previous)
            work[i][k] = ()
        previous = pivot
    result = work[n - 1][n - 1]
    if sign < 0:
        result = tuple(-c for c in result)
    result = tuple(result[: K_u + 1])
    return result + (ZERO,) * (K_u + 1 - len(result))


def rref(matrix):
    """
    Reduced row echelon form over Fractions.

    Returns:
        tuple: (reduced rows, list of pivot columns)
    """
    rows = [[Fraction(x) for x in row] for row in matrix]
    if not rows:
        return rows, []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        if r == len(rows):
            break
        found = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if found is None:
            continue
        rows[r], rows[found] = rows[found], rows[r]
        head = rows[r][c]
        rows[r] = [x / head for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                factor = rows[i][c]
                rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return rows, pivots


def nullspace(matrix, ncols=None):
    """Basis of {x : M x = 0}, one vector per free column, free entry set to 1."""
    if ncols is None:
        ncols = len(matrix[0]) if matrix else 0
    if not matrix:
        return [
            [ONE if i == c else ZERO for i in range(ncols)] for c in range(ncols)
        ]
    reduced, pivots = rref(matrix)
    # Each free column gives one basis vector; pivot entries come from the RREF
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for c in free:
        vector = [ZERO] * ncols
        vector[c] = ONE
        for row_index, p in enumerate(pivots):
            vector[p] = -reduced[row_index][c]
        basis.append(vector)
    return basis


def inverse(matrix):
    """Exact inverse by Gauss-Jordan on [M | I]."""
    n = len(matrix)
    augmented = [
        list(row) + [ONE if i == j else ZERO for j in range(n)]
        for i, row in enumerate(matrix)
    ]
    reduced, pivots = rref(augmented)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in reduced]


def submatrix(matrix, rows, columns):
    return [[matrix[i][j] for j in columns] for i in rows]
