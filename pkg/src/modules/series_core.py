"""
Module for exact truncated power-series arithmetic.

A series is stored as its first K+1 Taylor coefficients (exact rationals) together
with analyticity metadata: the radius R of the disc it converges on and a bound B
for |f| on that disc. Everything here is exact; floating point never enters.

Operations:
1. power_table(): coefficients a_i^j of the powers f^j, by repeated Cauchy products
2. recenter(): the same table for f(u + w), with every entry a truncated polynomial in u
3. tail_bound(): certified bound for the neglected tail on a smaller disc
4. height_profile(): running maximal denominators h_l and nonzero counts theta_l

Operations declare the truncation order they need and raise
TruncationTooShortError instead of padding with zeros.
"""

import json
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from math import comb

from modules.errors import (
    RadiusOutOfRangeError,
    TruncationTooShortError,
    ValidationError,
)

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


def to_fraction(value):
    """
    Convert a JSON-ish value into an exact rational.

    Accepts Fraction, int, decimal or "p/q" strings and ["num", "den"] pairs.
    Floats are rejected: they would smuggle rounding error into exact data.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"boolean is not a rational: {value!r}")
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValidationError(f"rational pair must have two entries: {value!r}")
        denominator = int(value[1])
        if denominator == 0:
            raise ValidationError(f"zero denominator in {value!r}")
        return Fraction(int(value[0]), denominator)
    if isinstance(value, float):
        raise ValidationError(
            f"floating-point value {value!r} rejected; pass a string or a pair"
        )
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ValidationError(f"cannot read {value!r} as a rational: {e}")


def fraction_pair(value):
    """Serialize a rational as ["num", "den"] decimal strings."""
    value = to_fraction(value)
    return [str(value.numerator), str(value.denominator)]


# ---------------------------------------------------------------------------
# Coefficient-sequence arithmetic (lowest degree first)
# ---------------------------------------------------------------------------


def poly_trim(a):
    """Drop trailing zero coefficients."""
    end = len(a)
    while end > 0 and a[end - 1] == 0:
        end -= 1
    return tuple(a[:end])


def poly_add(a, b):
    size = max(len(a), len(b))
    return tuple(
        (a[i] if i < len(a) else ZERO) + (b[i] if i < len(b) else ZERO)
        for i in range(size)
    )


def poly_sub(a, b):
    size = max(len(a), len(b))
    return tuple(
        (a[i] if i < len(a) else ZERO) - (b[i] if i < len(b) else ZERO)
        for i in range(size)
    )


def poly_mul(a, b, K=None):
    """Cauchy product of two coefficient sequences, truncated at degree K if given."""
    if not a or not b:
        return ()
    top = len(a) + len(b) - 2
    if K is not None:
        top = min(top, K)
    out = [ZERO] * (top + 1)
    for i, ai in enumerate(a):
        if i > top:
            break
        if ai == 0:
            continue
        for j in range(min(len(b) - 1, top - i) + 1):
            bj = b[j]
            if bj:
                out[i + j] += ai * bj
    return tuple(out)


def poly_exact_div(a, b):
    """
    Exact quotient a / b of polynomials.

    Raises ArithmeticError if b does not divide a; fraction-free elimination
    only ever performs exact divisions, so a remainder means a logic error.
    """
    b = poly_trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    rest = list(poly_trim(a))
    if not rest:
        return ()
    degree_b = len(b) - 1
    if len(rest) - 1 < degree_b:
        raise ArithmeticError("inexact polynomial division")
    lead = b[-1]
    quotient = [ZERO] * (len(rest) - degree_b)
    for shift in range(len(rest) - 1 - degree_b, -1, -1):
        coef = rest[shift + degree_b] / lead
        quotient[shift] = coef
        if coef:
            for t, bt in enumerate(b):
                rest[shift + t] -= coef * bt
    if any(rest):
        raise ArithmeticError("inexact polynomial division")
    return tuple(quotient)


def poly_eval(a, x):
    """Horner evaluation of a coefficient sequence at x."""
    acc = ZERO
    for coef in reversed(a):
        acc = acc * x + coef
    return acc


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactSeries:
    """Truncated power series a_0 + a_1 z + ... + a_K z^K with (R, B) metadata."""

    coeffs: tuple
    radius: Fraction = ONE
    bound: Fraction = ONE
    origin_value_zero: bool = False

    def __post_init__(self):
        coeffs = tuple(to_fraction(c) for c in self.coeffs)
        radius = to_fraction(self.radius)
        bound = to_fraction(self.bound)
        if not coeffs:
            raise ValidationError("a series needs at least one coefficient")
        if radius <= 0:
            raise ValidationError(f"radius must be positive, got {radius}")
        if bound <= 0:
            raise ValidationError(f"bound must be positive, got {bound}")
        if self.origin_value_zero and coeffs[0] != 0:
            raise ValidationError(
                f"origin_value_zero is set but a_0 = {coeffs[0]}", a0=coeffs[0]
            )
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "radius", radius)
        object.__setattr__(self, "bound", bound)

    @property
    def order(self):
        """Truncation order K (index of the last stored coefficient)."""
        return len(self.coeffs) - 1

    def require_order(self, K, purpose="this operation"):
        if K > self.order:
            raise TruncationTooShortError(
                f"{purpose} needs coefficients up to order {K}, "
                f"but the series stores only up to order {self.order}",
                needed=K,
                stored=self.order,
            )

    def truncate(self, K):
        self.require_order(K, "truncation")
        return replace(self, coeffs=self.coeffs[: K + 1])

    def cauchy_violations(self):
        """Orders k where |a_k| > B / R^k, i.e. where the declared (R, B) is false."""
        return [
            k
            for k, a in enumerate(self.coeffs)
            if abs(a) > self.bound / self.radius**k
        ]


@dataclass(frozen=True)
class PowerTable:
    """a_i^j = coefficient of z^i in f(z)^j for 0 <= i <= K, 0 <= j <= d."""

    d: int
    K: int
    columns: tuple  # columns[j][i] = a_i^j

    def entry(self, i, j):
        if i < 0:
            return ZERO
        return self.columns[j][i]

    def rows(self):
        """The table as a[i][j] (row = order i, column = power j)."""
        return [
            [self.columns[j][i] for j in range(self.d + 1)] for i in range(self.K + 1)
        ]


@dataclass(frozen=True)
class RecenteredTable:
    """Power table of f(u + w) in w; each entry is a polynomial in u truncated at K_u."""

    d: int
    K: int
    K_u: int
    columns: tuple  # columns[j][i] = (c_0, ..., c_{K_u}) coefficients in u

    def entry(self, i, j):
        if i < 0:
            return (ZERO,) * (self.K_u + 1)
        return self.columns[j][i]

    def at_origin(self):
        """Set u = 0: keep only the constant term of every entry."""
        return PowerTable(
            d=self.d,
            K=self.K,
            columns=tuple(
                tuple(entry[0] for entry in column) for column in self.columns
            ),
        )


@dataclass(frozen=True)
class HeightProfile:
    """h[l-1] = max reduced denominator of a_1..a_l; theta[l-1] = #nonzero a_0..a_l."""

    h: tuple
    theta: tuple

    @property
    def L(self):
        return len(self.h)

    def h_at(self, l):
        if not 1 <= l <= self.L:
            raise TruncationTooShortError(
                f"height profile covers l = 1..{self.L}, asked for {l}"
            )
        return self.h[l - 1]

    def theta_at(self, l):
        if not 1 <= l <= self.L:
            raise TruncationTooShortError(
                f"height profile covers l = 1..{self.L}, asked for {l}"
            )
        return self.theta[l - 1]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def power_table(f, d, K):
    """
    Exact table of Taylor coefficients of f^0, ..., f^d up to order K.

    Args:
        f (ExactSeries): source series, must store at least K+1 coefficients
        d (int): highest power
        K (int): truncation order

    Returns:
        PowerTable: column j+1 is the K-truncated Cauchy product of column j with f
    """
    if d < 0 or K < 0:
        raise ValidationError(f"power table needs d >= 0 and K >= 0, got d={d}, K={K}")
    f.require_order(K, "power table")
    base = f.coeffs[: K + 1]
    columns = [tuple(ONE if i == 0 else ZERO for i in range(K + 1))]
    for _ in range(d):
        columns.append(poly_mul(columns[-1], base, K))
    logger.debug("  power table built for d=%d, K=%d", d, K)
    return PowerTable(d=d, K=K, columns=tuple(columns))


def recenter(f, d, K, K_u):
    """
    Power table of f at a moving base point u, exact in u up to degree K_u.

    The Taylor coefficients at u are a_k(u) = sum_{n>=k} C(n, k) a_n u^(n-k); only
    the terms up to u^K_u are kept, so f must store K + K_u + 1 coefficients.
    """
    if d < 0 or K < 0 or K_u < 0:
        raise ValidationError(
            f"recentering needs nonnegative d, K, K_u; got {d}, {K}, {K_u}"
        )
    f.require_order(K + K_u, "recentering")
    shifted = [
        tuple(comb(k + t, k) * f.coeffs[k + t] for t in range(K_u + 1))
        for k in range(K + 1)
    ]
    zero = (ZERO,) * (K_u + 1)
    one = (ONE,) + (ZERO,) * K_u
    columns = [tuple(one if i == 0 else zero for i in range(K + 1))]
    for _ in range(d):
        previous = columns[-1]
        current = []
        for i in range(K + 1):
            acc = zero
            for k in range(i + 1):
                left, right = previous[i - k], shifted[k]
                if any(left) and any(right):
                    acc = poly_add(acc, poly_mul(left, right, K_u))
            current.append(acc)
        columns.append(tuple(current))
    logger.debug("  recentered table built for d=%d, K=%d, K_u=%d", d, K, K_u)
    return RecenteredTable(d=d, K=K, K_u=K_u, columns=tuple(columns))


def tail_bound(f, N, r):
    """
    Certified bound on |sum_{k>N} a_k z^k| for |z| <= r, from the Cauchy estimates.

    Returns B (r/R)^(N+1) / (1 - r/R) as an exact rational.
    """
    r = to_fraction(r)
    if N < 0:
        raise ValidationError(f"tail order must be nonnegative, got {N}")
    if r < 0 or r >= f.radius:
        raise RadiusOutOfRangeError(
            f"evaluation radius {r} must satisfy 0 <= r < R = {f.radius}",
            r=r,
            R=f.radius,
        )
    if r == 0:
        return ZERO
    q = r / f.radius
    return f.bound * q ** (N + 1) / (1 - q)


def height_profile(f, L):
    """Running maximal denominators h_1..h_L and nonzero counts theta_1..theta_L."""
    if L < 1:
        raise ValidationError(f"height profile needs L >= 1, got {L}")
    f.require_order(L, "height profile")
    h, theta = [], []
    running_h = 1
    running_theta = 1 if f.coeffs[0] != 0 else 0
    for l in range(1, L + 1):
        a = f.coeffs[l]
        running_h = max(running_h, a.denominator)
        if a != 0:
            running_theta += 1
        h.append(running_h)
        theta.append(running_theta)
    return HeightProfile(h=tuple(h), theta=tuple(theta))


def evaluate(f, x, N=None):
    """Exact value at rational x of the truncation of f at order N (default: all)."""
    x = to_fraction(x)
    if N is None:
        N = f.order
    f.require_order(N, "evaluation")
    return poly_eval(f.coeffs[: N + 1], x)


# ---------------------------------------------------------------------------
# JSON codec
# ---------------------------------------------------------------------------


def series_from_json(doc):
    """
    Read a series from {"coeffs": [["num","den"],...], "radius": [...], "bound": [...]}.

    "radius" and "bound" default to 1; "origin_value_zero" defaults to false.
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if "coeffs" not in doc:
        raise ValidationError("series document has no 'coeffs' field")
    return ExactSeries(
        coeffs=tuple(to_fraction(c) for c in doc["coeffs"]),
        radius=to_fraction(doc.get("radius", ["1", "1"])),
        bound=to_fraction(doc.get("bound", ["1", "1"])),
        origin_value_zero=bool(doc.get("origin_value_zero", False)),
    )


def series_to_json(f):
    return {
        "coeffs": [fraction_pair(c) for c in f.coeffs],
        "radius": fraction_pair(f.radius),
        "bound": fraction_pair(f.bound),
        "origin_value_zero": f.origin_value_zero,
    }


def load_series(path):
    logger.info("Loading series from %s", path)
    with open(path, "r", encoding="utf-8") as handle:
        series = series_from_json(json.load(handle))
    logger.info("  Loaded series of order %d", series.order)
    return series
