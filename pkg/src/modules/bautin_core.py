"""
Module for Bautin matrices and the transcendence invariants built on them.

For a monomial family {z^i y^j} and a series f, row k of the Bautin matrix holds the
coefficients of the linear form v_k(lambda) = k-th Taylor coefficient of
sum lambda_{j,i} z^i f(z)^j. Everything below is read off that matrix:

1. bautin_index(): first k with rank(M_k) = m, or a stalled report with the kernel
2. transcendence_index(): the same for the total-degree family
3. bautin_determinant(): determinant of the reduced square block (the tilde matrix)
4. max_nonzero_minor(): delta, exhaustively or by greedy pivoting
5. bautin_multiplicity(): vanishing order in u of the recentered determinant
6. witness_polynomial(): a curve of maximal multiplicity at the origin

Author: Bautin Lab Team
Last Updated: 2026-10-19
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, islice
from math import comb
from multiprocessing import Pool

import sympy

from modules.errors import (
    RankDeficientError,
    TableTooSmallError,
    TruncationTooShortError,
    ValidationError,
)
from modules.exact_linalg import (
    RankTracker,
    bareiss_det,
    bareiss_det_poly,
    inverse,
    nullspace,
    rank,
    submatrix,
)
from modules.series_core import ONE, ZERO, fraction_pair, power_table, recenter
from modules.zero_oracle import CurvePolynomial, multiplicity_at_origin, substitute

logger = logging.getLogger(__name__)

DEFAULT_MINOR_BUDGET = 10**6
CHUNK_SIZE = 2000


@dataclass(frozen=True)
class MonomialFamily:
    """square(d): 0 <= i, j <= d; total(d): i + j <= d. Columns run j-major, i ascending."""

    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in ("square", "total"):
            raise ValidationError(f"unknown monomial family {self.kind!r}")
        if self.d < 0:
            raise ValidationError(f"family degree must be nonnegative, got {self.d}")

    @property
    def columns(self):
        if self.kind == "square":
            return [(i, j) for j in range(self.d + 1) for i in range(self.d + 1)]
        return [(i, j) for j in range(self.d + 1) for i in range(self.d - j + 1)]

    @property
    def m(self):
        if self.kind == "square":
            return (self.d + 1) ** 2
        return (self.d + 1) * (self.d + 2) // 2

    def label(self):
        return f"{self.kind}({self.d})"


@dataclass(frozen=True)
class BautinMatrix:
    family: MonomialFamily
    K: int
    rows: tuple

    def head(self, k):
        """Rows 0..k, i.e. the matrix M_k."""
        return [list(row) for row in self.rows[: k + 1]]

    def to_dict(self):
        return {
            "family": self.family.label(),
            "columns": [list(c) for c in self.family.columns],
            "rows": [[fraction_pair(x) for x in row] for row in self.rows],
        }


@dataclass(frozen=True)
class BautinReport:
    family: MonomialFamily
    b: int  # None when stalled
    rank_trace: tuple
    sigma: int
    K_max: int
    kernel: tuple = ()

    @property
    def stalled(self):
        return self.b is None

    def to_dict(self):
        return {
            "status": "stalled" if self.stalled else "ok",
            "family": self.family.label(),
            "m": self.family.m,
            "b": "stalled" if self.stalled else self.b,
            "sigma": self.sigma,
            "K_max": self.K_max,
            "rank_trace": [list(pair) for pair in self.rank_trace],
            "kernel": [[fraction_pair(x) for x in vector] for vector in self.kernel],
        }


@dataclass(frozen=True)
class MinorResult:
    value: Fraction
    rows: tuple
    columns: tuple
    mode: str  # "exhaustive-max", "heuristic-nonzero" or "selected"
    candidates: int = 0

    def to_dict(self):
        return {
            "value": fraction_pair(self.value),
            "rows": list(self.rows),
            "columns": list(self.columns),
            "mode": self.mode,
            "candidates": self.candidates,
        }


@dataclass(frozen=True)
class MultiplicityReport:
    d: int
    K_u: int
    eta: int  # None when every computed u-coefficient vanishes
    alpha: Fraction
    expansion: tuple
    cap: int = None
    attempts: list = field(default_factory=list)

    @property
    def exceeds(self):
        return self.eta is None

    def to_dict(self):
        return {
            "status": "exceeds-K_u" if self.exceeds else "ok",
            "d": self.d,
            "K_u": self.K_u,
            "eta": f">{self.K_u}" if self.exceeds else self.eta,
            "alpha": None if self.alpha is None else fraction_pair(self.alpha),
            "cap": self.cap,
            "attempts": list(self.attempts),
        }


@dataclass(frozen=True)
class Witness:
    family: MonomialFamily
    vector: tuple
    polynomial: CurvePolynomial
    multiplicity: int  # None if P(z, f) vanishes to the stored order
    leading: Fraction

    def to_dict(self):
        return {
            "family": self.family.label(),
            "lambda": [fraction_pair(x) for x in self.vector],
            "multiplicity": self.multiplicity,
            "leading": None if self.leading is None else fraction_pair(self.leading),
        }


def build_bautin_matrix(table, family, K):
    """
    Bautin matrix with rows 0..K and entry (k, (i, j)) = a^j_{k-i}.

    Args:
        table (PowerTable): powers of f up to at least family.d, orders up to K
        family (MonomialFamily): column layout
        K (int): last row

    Returns:
        BautinMatrix
    """
    if table.d < family.d or table.K < K:
        raise TableTooSmallError(
            f"power table (d={table.d}, K={table.K}) cannot fill "
            f"{family.label()} rows up to {K}",
            table_d=table.d,
            table_K=table.K,
            needed_K=K,
        )
    columns = family.columns
    # z^i f^j contributes a^j_{k-i} to z^k; the table returns 0 for k < i
    rows = tuple(
        tuple(table.entry(k - i, j) for i, j in columns) for k in range(K + 1)
    )
    return BautinMatrix(family=family, K=K, rows=rows)


def bautin_index(f, family, K_max=None):
    """
    Bautin index of f for a monomial family.

    Rows are fed one at a time into an exact rank tracker; the first k where the
    rank reaches m is b. If the rank never gets there by K_max (default 4m), the
    report is stalled and carries a kernel basis of M_{K_max}.
    """
    m = family.m
    if K_max is None:
        K_max = 4 * m
    logger.info("Computing Bautin index for %s (K_max=%d)...", family.label(), K_max)
    f.require_order(K_max, "Bautin index")
    table = power_table(f, family.d, K_max)
    matrix = build_bautin_matrix(table, family, K_max)

    # ==== Grow M_k one row at a time ====
    # The rank is nondecreasing in k and capped at m, so the first k where it
    # hits m is the index.
    tracker = RankTracker(m)
    trace = []
    for k, row in enumerate(matrix.rows):
        tracker.add_row(row)
        trace.append((k, tracker.rank))
        if tracker.rank == m:
            logger.info("  rank reached %d at k=%d", m, k)
            return BautinReport(
                family=family, b=k, rank_trace=tuple(trace), sigma=m, K_max=K_max
            )

    # ==== Stalled: no full rank by K_max ====
    # Keep the kernel so callers can see which curves still vanish to order K_max
    kernel = nullspace(matrix.head(K_max), m)
    logger.info(
        "FINDING: rank stalled at %d < %d after %d rows (%d kernel vectors)",
        tracker.rank,
        m,
        K_max + 1,
        len(kernel),
    )
    return BautinReport(
        family=family,
        b=None,
        rank_trace=tuple(trace),
        sigma=tracker.rank,
        K_max=K_max,
        kernel=tuple(tuple(v) for v in kernel),
    )


def transcendence_index(f, d, K_max=None):
    """nu_d(f): the Bautin index of the total-degree family."""
    return bautin_index(f, MonomialFamily("total", d), K_max)


def transcendence_sequence(f, d_max, K_max=None):
    """nu_1, ..., nu_{d_max}; None marks a stalled degree."""
    values = []
    for d in range(1, d_max + 1):
        report = transcendence_index(f, d, K_max)
        values.append(report.b)
    return values


def tilde_matrix(table, d, b):
    """Rows k = d+1..b, columns (j, i) with j = 1..d and i = 0..d; entry a^j_{k-i}."""
    if b < d + 1:
        raise ValidationError(f"tilde matrix needs b >= d+1, got b={b}, d={d}")
    if table.d < d or table.K < b:
        raise TableTooSmallError(
            f"power table (d={table.d}, K={table.K}) too small for d={d}, b={b}"
        )
    return [
        [table.entry(k - i, j) for j in range(1, d + 1) for i in range(d + 1)]
        for k in range(d + 1, b + 1)
    ]


def bautin_determinant(f, d):
    """Delta_d = det of the square tilde matrix at b = d^2 + 2d (may be 0)."""
    b = d * d + 2 * d
    f.require_order(b, "Bautin determinant")
    table = power_table(f, d, b)
    value = bareiss_det(tilde_matrix(table, d, b))
    logger.info("  Delta_%d = %s", d, value)
    return value


def minor_determinant(matrix, rows, columns=None, mode="selected"):
    """Exact |det| of the minor on the given rows and columns of a Bautin matrix."""
    if columns is None:
        columns = tuple(range(matrix.family.m))
    if len(rows) != len(columns):
        raise ValidationError(
            f"minor needs as many rows as columns ({len(rows)} vs {len(columns)})"
        )
    value = abs(bareiss_det(submatrix(matrix.rows, rows, columns)))
    return MinorResult(
        value=value, rows=tuple(rows), columns=tuple(columns), mode=mode, candidates=1
    )


def _best_in_chunk(job):
    """First maximal |det| over a chunk of (rows, columns) candidates."""
    rows_data, candidates = job
    best = (ZERO, None, None)
    for row_set, column_set in candidates:
        value = abs(bareiss_det(submatrix(rows_data, row_set, column_set)))
        if value > best[0]:
            best = (value, row_set, column_set)
    return best


def _candidates(nrows, ncols, sigma):
    column_sets = list(combinations(range(ncols), sigma))
    for row_set in combinations(range(nrows), sigma):
        for column_set in column_sets:
            yield row_set, column_set


def _exhaustive_minor(rows_data, sigma, workers):
    ncols = len(rows_data[0])
    total = comb(len(rows_data), sigma) * comb(ncols, sigma)
    stream = _candidates(len(rows_data), ncols, sigma)

    def jobs():
        while True:
            chunk = list(islice(stream, CHUNK_SIZE))
            if not chunk:
                return
            yield rows_data, chunk

    best = (ZERO, None, None)
    if workers > 1 and total > CHUNK_SIZE:
        with Pool(processes=workers) as pool:
            results = list(pool.imap(_best_in_chunk, jobs()))
    else:
        results = map(_best_in_chunk, jobs())
    # chunks come back in lexicographic order; the strict comparison keeps the first maximum
    for result in results:
        if result[0] > best[0]:
            best = result
    return best, total


def _greedy_minor(rows_data, sigma):
    """Complete pivoting on the exact residual: each step takes the largest remaining entry."""
    residual = [list(row) for row in rows_data]
    chosen_rows, chosen_columns = [], []
    for _ in range(sigma):
        best_value, best_at = ZERO, None
        for i, row in enumerate(residual):
            if i in chosen_rows:
                continue
            for j, value in enumerate(row):
                if j not in chosen_columns and abs(value) > best_value:
                    best_value, best_at = abs(value), (i, j)
        if best_at is None:
            raise RankDeficientError("greedy pivoting ran out of nonzero entries")
        p, q = best_at
        pivot_row = residual[p]
        head = pivot_row[q]
        for i, row in enumerate(residual):
            if i != p and row[q] != 0:
                factor = row[q] / head
                residual[i] = [x - factor * y for x, y in zip(row, pivot_row)]
        chosen_rows.append(p)
        chosen_columns.append(q)
    return tuple(sorted(chosen_rows)), tuple(sorted(chosen_columns))


def max_nonzero_minor(
    matrix, sigma, mode="auto", budget=DEFAULT_MINOR_BUDGET, row_limit=None, workers=1
):
    """
    Largest (or some nonzero) sigma x sigma minor of a Bautin matrix.

    Args:
        matrix (BautinMatrix): rows 0..K
        sigma (int): minor size; the column set is all columns when sigma = m
        mode (str): "exhaustive", "heuristic" or "auto" (exhaustive within budget)
        budget (int): largest candidate count searched exhaustively in auto mode
        row_limit (int): use only rows 0..row_limit (default all rows)
        workers (int): processes for the exhaustive search

    Returns:
        MinorResult: exhaustive results are the true delta with the
        lexicographically first maximizing row set
    """
    rows_data = matrix.head(matrix.K if row_limit is None else row_limit)
    m = matrix.family.m
    if sigma < 1 or sigma > m:
        raise ValidationError(f"minor size must lie in 1..{m}, got {sigma}")
    found_rank = rank(rows_data)
    if found_rank < sigma:
        raise RankDeficientError(
            f"matrix rank {found_rank} is below the minor size {sigma}",
            rank=found_rank,
            sigma=sigma,
        )
    total = comb(len(rows_data), sigma) * comb(m, sigma)
    # Auto mode: exhaustive while the candidate count fits the budget
    if mode == "auto":
        mode = "exhaustive" if total <= budget else "heuristic"
        logger.info("  %d candidate minors, using %s search", total, mode)
    if mode == "exhaustive":
        (value, row_set, column_set), total = _exhaustive_minor(
            rows_data, sigma, workers
        )
        return MinorResult(
            value=value,
            rows=row_set,
            columns=column_set,
            mode="exhaustive-max",
            candidates=total,
        )
    if mode == "heuristic":
        row_set, column_set = _greedy_minor(rows_data, sigma)
        value = abs(bareiss_det(submatrix(rows_data, row_set, column_set)))
        logger.info(
            "FINDING: delta taken from a heuristic nonzero minor (value %s); "
            "bounds stay valid",
            value,
        )
        return MinorResult(
            value=value,
            rows=row_set,
            columns=column_set,
            mode="heuristic-nonzero",
            candidates=total,
        )
    raise ValidationError(f"unknown minor mode {mode!r}")


def _recentered_tilde(f, d, K_u):
    b = d * d + 2 * d
    table = recenter(f, d, b, K_u)
    return [
        [table.entry(k - i, j) for j in range(1, d + 1) for i in range(d + 1)]
        for k in range(d + 1, b + 1)
    ]


def bautin_multiplicity(f, d, K_u):
    """
    eta_d: order at u = 0 of the Bautin determinant of f recentered at u.

    The determinant is computed over Q[u] and truncated at u^K_u. When every
    computed coefficient vanishes the report has eta = None ("exceeds K_u"); a
    truncation cannot tell that apart from an identically zero determinant.
    """
    if d < 1:
        raise ValidationError(f"Bautin multiplicity needs d >= 1, got {d}")
    f.require_order(d * d + 2 * d + K_u, "Bautin multiplicity")
    expansion = bareiss_det_poly(_recentered_tilde(f, d, K_u), K_u)
    for order, coef in enumerate(expansion):
        if coef != 0:
            return MultiplicityReport(
                d=d, K_u=K_u, eta=order, alpha=coef, expansion=expansion
            )
    return MultiplicityReport(d=d, K_u=K_u, eta=None, alpha=None, expansion=expansion)


def bautin_multiplicity_auto(f, d, cap=None):
    """
    eta_d with the doubling policy: K_u starts at d^2 + 2d and doubles on "exceeds".

    cap defaults to the largest K_u the stored coefficients support.
    """
    b = d * d + 2 * d
    available = f.order - b
    if cap is None:
        cap = available
    cap = min(cap, available)
    if cap < 0:
        raise TruncationTooShortError(
            f"Bautin multiplicity at d={d} needs order {b}, series stores {f.order}",
            needed=b,
            stored=f.order,
        )
    K_u = min(b, cap)
    attempts = []
    # Double K_u until a nonzero u-coefficient shows up or the cap is hit
    while True:
        report = bautin_multiplicity(f, d, K_u)
        attempts.append(K_u)
        if not report.exceeds or K_u >= cap:
            break
        K_u = min(2 * K_u if K_u else 1, cap)
    if report.exceeds:
        logger.info("FINDING: eta_%d exceeds the cap K_u=%d", d, cap)
    return MultiplicityReport(
        d=d,
        K_u=report.K_u,
        eta=report.eta,
        alpha=report.alpha,
        expansion=report.expansion,
        cap=cap,
        attempts=attempts,
    )


def _normalize(vector, columns):
    """Scale so the lowest monomial involving y (or else the first nonzero entry) is 1."""
    involving_y = [v for v, (_, j) in zip(vector, columns) if j >= 1 and v != 0]
    head = involving_y[0] if involving_y else next(v for v in vector if v != 0)
    return tuple(v / head for v in vector)


def witness_polynomial(f, family, K_max=None):
    """
    A curve P in the family with P(z, f(z)) of maximal multiplicity at 0.

    For finite b this is a kernel vector of M_{b-1}; its multiplicity is verified
    by substituting f back into P. Stalled families return a kernel vector of
    M_{K_max}, whose substitution vanishes to the stored order.
    """
    report = bautin_index(f, family, K_max)
    columns = family.columns

    # ==== Pick the kernel vector ====
    if report.stalled:
        vector = report.kernel[0]
        check_order = report.K_max
    else:
        b = report.b
        if b == 0:
            # b = 0 happens only for m = 1, where the single column is the constant 1
            vector = tuple(ONE if column == (0, 0) else ZERO for column in columns)
        else:
            # rank(M_{b-1}) = m - 1, so its kernel is one-dimensional
            matrix = build_bautin_matrix(power_table(f, family.d, b), family, b)
            vector = tuple(nullspace(matrix.head(b - 1), family.m)[0])
        check_order = b
    vector = _normalize(vector, columns)
    polynomial = CurvePolynomial.from_vector(columns, vector)

    # ==== Verify by substitution ====
    # P(z, f(z)) must vanish exactly to order b; anything else is an arithmetic bug
    multiplicity = multiplicity_at_origin(polynomial, f, check_order)
    leading = None
    if multiplicity is not None:
        leading = substitute(polynomial, f, multiplicity)[multiplicity]
    if not report.stalled and multiplicity != report.b:
        raise ArithmeticError(
            f"witness multiplicity {multiplicity} differs from b={report.b}"
        )
    logger.info("  witness multiplicity %s for %s", multiplicity, family.label())
    return Witness(
        family=family,
        vector=tuple(vector),
        polynomial=polynomial,
        multiplicity=multiplicity,
        leading=leading,
    )


def norm_constant(matrix, rows):
    """
    Exact norm constant for a square row basis of a full-rank Bautin matrix.

    With S the chosen m x m block, a form l = mu^T S has |mu_j| <= c ||l||_max where
    c is the largest absolute column sum of S^{-1}.
    """
    m = matrix.family.m
    if len(rows) != m:
        raise ValidationError(f"norm constant needs {m} rows, got {len(rows)}")
    block = submatrix(matrix.rows, rows, range(m))
    try:
        inv = inverse(block)
    except ZeroDivisionError:
        raise RankDeficientError(f"rows {list(rows)} do not form a basis")
    return max(sum(abs(inv[i][j]) for i in range(m)) for j in range(m))


def symbolic_bautin_determinant(d):
    """
    Delta_d as an integer polynomial in a_1, ..., a_{d^2+2d} (with a_0 = 0).

    It is homogeneous of degree d(d+1)^2/2; for d = 1 it is a_2^2 - a_1 a_3.
    """
    b = d * d + 2 * d
    # a1..ab as sympy symbols; a_0 = 0 so f^j starts at z^j
    a = sympy.symbols(f"a1:{b + 1}")
    z = sympy.Symbol("z")
    series = sympy.Poly(sum(a[k - 1] * z**k for k in range(1, b + 1)), z)
    powers = [None]
    for j in range(1, d + 1):
        powers.append(series**j)

    def entry(n, j):
        if n < 0:
            return sympy.Integer(0)
        return powers[j].coeff_monomial(z**n)

    matrix = sympy.Matrix(
        [
            [entry(k - i, j) for j in range(1, d + 1) for i in range(d + 1)]
            for k in range(d + 1, b + 1)
        ]
    )
    determinant = sympy.expand(matrix.det(method="berkowitz"))
    return sympy.Poly(determinant, *a, domain="ZZ")
