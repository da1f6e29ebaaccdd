"""
Module for constructing concrete series families.

Families:
1. Lacunary series sum a_k z^(n_k) with n_(k+1) > n_k^2 (optionally n_(k+1) <= n_k^q)
2. Series defined by a rational recurrence a_(k+1) = Q(k, a_k, ..., a_(k-r+1))
3. Random series with independent coefficients uniform on [-1, 1]

Each generator returns an ExactSeries; the lacunary and recurrence helpers also
expose the closed forms the families are known for (transcendence-index sandwich,
explicit nonzero minor, denominator growth bound).
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from multiprocessing import Pool

import numpy as np
from mpmath import mp

from modules.bounds import BoundReport, DEFAULT_DPS, resolve_dps
from modules.errors import (
    LacunarityViolationError,
    OutOfRangeError,
    ValidationError,
)
from modules.series_core import ONE, ZERO, ExactSeries, power_table, to_fraction

logger = logging.getLogger(__name__)

RANDOM_BITS = 64


# ---------------------------------------------------------------------------
# Lacunary series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentRule:
    """
    n_1 < n_2 < ...: "explicit" (values), "square_plus" (n_(k+1) = n_k^2 + offset)
    or "power" (n_(k+1) = n_k^power).
    """

    kind: str
    start: int = 2
    offset: int = 1
    power: int = 3
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("explicit", "square_plus", "power"):
            raise ValidationError(f"unknown exponent rule {self.kind!r}")
        if self.kind == "explicit" and not self.values:
            raise ValidationError("explicit exponent rule needs values")
        if self.kind != "explicit" and self.start < 1:
            raise ValidationError(f"first exponent must be positive, got {self.start}")

    def exponents(self, limit):
        """All n_k <= limit, followed by the first n_k > limit when one exists."""
        if self.kind == "explicit":
            out = []
            for n in self.values:
                out.append(int(n))
                if n > limit:
                    break
            return out
        out = [self.start]
        while out[-1] <= limit:
            n = out[-1]
            out.append(n * n + self.offset if self.kind == "square_plus" else n**self.power)
        return out


@dataclass(frozen=True)
class CoefficientRule:
    """a_k for k >= 1: "geometric" (ratio^k), "explicit" (values) or "constant"."""

    kind: str
    ratio: Fraction = Fraction(1, 2)
    value: Fraction = ONE
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("geometric", "explicit", "constant"):
            raise ValidationError(f"unknown coefficient rule {self.kind!r}")
        object.__setattr__(self, "ratio", to_fraction(self.ratio))
        object.__setattr__(self, "value", to_fraction(self.value))
        object.__setattr__(self, "values", tuple(to_fraction(v) for v in self.values))
        if self.kind == "geometric" and not 0 < abs(self.ratio) < 1:
            raise ValidationError(f"geometric ratio must satisfy 0 < |r| < 1, got {self.ratio}")

    def coefficient(self, k):
        if self.kind == "geometric":
            return self.ratio**k
        if self.kind == "constant":
            return self.value
        if k > len(self.values):
            raise OutOfRangeError(f"explicit coefficient list has no entry {k}", k=k)
        return self.values[k - 1]

    def abs_sum_bound(self, count):
        """Upper bound on sum_{k>=1} |a_k| (over the first `count` terms for finite data)."""
        if self.kind == "geometric":
            r = abs(self.ratio)
            return r / (1 - r)
        if self.kind == "constant":
            return None
        return sum(abs(v) for v in self.values[:count])


@dataclass(frozen=True)
class LacunarySpec:
    exponent_rule: ExponentRule
    coefficient_rule: CoefficientRule
    q: Fraction = None
    p: Fraction = None

    def __post_init__(self):
        if self.q is not None:
            object.__setattr__(self, "q", to_fraction(self.q))
            if self.q <= 2:
                raise ValidationError(f"lacunarity exponent q must exceed 2, got {self.q}")
        if self.p is not None:
            object.__setattr__(self, "p", to_fraction(self.p))
            if self.p <= 0:
                raise ValidationError(f"decay exponent p must be positive, got {self.p}")


def validate_lacunary(spec, exponents):
    """Check the gap conditions and nonzero coefficients for the given n_1, n_2, ..."""
    for k in range(1, len(exponents)):
        previous, current = exponents[k - 1], exponents[k]
        if current <= previous * previous:
            raise LacunarityViolationError(
                f"n_{k + 1} = {current} does not exceed n_{k}^2 = {previous * previous}",
                k=k + 1,
            )
        if spec.q is not None:
            # n_(k+1) <= n_k^q  <=>  n_(k+1)^den <= n_k^num
            if current**spec.q.denominator > previous**spec.q.numerator:
                raise LacunarityViolationError(
                    f"n_{k + 1} = {current} exceeds n_{k}^q with q = {spec.q}",
                    k=k + 1,
                )
    for k in range(1, len(exponents) + 1):
        try:
            a = spec.coefficient_rule.coefficient(k)
        except OutOfRangeError:
            break
        if a == 0:
            raise LacunarityViolationError(f"coefficient a_{k} is zero", k=k)
        if spec.p is not None:
            with mp.workdps(DEFAULT_DPS):
                log_a = mp.log(abs(mp.mpf(a.numerator) / a.denominator))
                p = mp.mpf(spec.p.numerator) / spec.p.denominator
                if log_a < -mp.mpf(exponents[k - 1]) ** p:
                    raise LacunarityViolationError(
                        f"|a_{k}| = {abs(a)} is below e^(-n_k^p)", k=k
                    )


def gen_lacunary(spec, K):
    """
    Lacunary series truncated at order K.

    Metadata is (R, B) = (1, 1) when sum |a_k| <= 1, (1, sum |a_k|) when that sum is
    finite, and (1/2, max(1, |c|)) for a constant coefficient rule.
    """
    exponents = spec.exponent_rule.exponents(K)
    validate_lacunary(spec, exponents)
    placed = [n for n in exponents if n <= K]
    coeffs = [ZERO] * (K + 1)
    for k, n in enumerate(placed, start=1):
        coeffs[n] = spec.coefficient_rule.coefficient(k)

    radius, bound = ONE, ONE
    total = spec.coefficient_rule.abs_sum_bound(len(placed))
    if total is None:
        radius, bound = Fraction(1, 2), max(ONE, abs(spec.coefficient_rule.value))
    elif total > 1:
        bound = total
        logger.info("  coefficient sum %s exceeds 1, bound B adjusted", total)
    logger.info("  lacunary series with exponents %s up to order %d", placed, K)
    return ExactSeries(
        coeffs=tuple(coeffs),
        radius=radius,
        bound=bound,
        origin_value_zero=coeffs[0] == 0,
    )


def _locate(spec, d):
    """Index l >= 1 with n_l <= d < n_(l+1), plus the exponent list."""
    exponents = spec.exponent_rule.exponents(d)
    validate_lacunary(spec, exponents)
    if d < exponents[0]:
        raise OutOfRangeError(f"degree {d} lies below n_1 = {exponents[0]}", d=d)
    if exponents[-1] <= d:
        raise OutOfRangeError(f"no exponent above degree {d} is known", d=d)
    l = max(k for k, n in enumerate(exponents, start=1) if n <= d)
    return l, exponents


@dataclass(frozen=True)
class Sandwich:
    l: int
    lower: int
    upper: int


def lacunary_nu_sandwich(spec, d):
    """n_(l+1) <= nu_d <= n_(l+1)^2 - 1 for n_l <= d < n_(l+1)."""
    l, exponents = _locate(spec, d)
    following = exponents[l]
    return Sandwich(l=l, lower=following, upper=following * following - 1)


@dataclass(frozen=True)
class LacunaryMinor:
    value: Fraction
    l: int
    exponent: int
    rows: tuple
    upper_square: bool


def lacunary_minor_closed_form(spec, d):
    """
    a_(l+1)^(d(d+1)^2/2), the determinant of the square Bautin matrix minor on rows
    j n_(l+1) + m (j, m = 0..d) and all columns.

    When d = n_(l+1) - 1 these rows are 0..(d+1)^2 - 1, the upper square minor.
    """
    l, exponents = _locate(spec, d)
    following = exponents[l]
    exponent = d * (d + 1) ** 2 // 2
    value = spec.coefficient_rule.coefficient(l + 1) ** exponent
    rows = tuple(sorted(j * following + m for j in range(d + 1) for m in range(d + 1)))
    return LacunaryMinor(
        value=value,
        l=l,
        exponent=exponent,
        rows=rows,
        upper_square=d == following - 1,
    )


def lacunary_power_check(spec, l, K=None):
    """
    Structure of the powers f^j below n_(l+2).

    For m, j in 0..n_(l+1)-1 the series z^m f^j must have coefficient a_(l+1)^j at
    order j n_(l+1) + m and no nonzero coefficient at orders strictly between that
    and n_(l+2). Returns the violations found (empty when the structure holds).
    """
    if l < 1:
        raise OutOfRangeError(f"power check needs l >= 1, got {l}")
    exponents = spec.exponent_rule.exponents(1)
    while len(exponents) < l + 2:
        longer = spec.exponent_rule.exponents(exponents[-1])
        if len(longer) == len(exponents):
            raise OutOfRangeError(f"exponent rule stops before n_{l + 2}", l=l)
        exponents = longer
    n_next, n_after = exponents[l], exponents[l + 1]
    limit = n_after - 1 if K is None else min(K, n_after - 1)
    f = gen_lacunary(spec, limit)
    a_next = spec.coefficient_rule.coefficient(l + 1)
    table = power_table(f, n_next - 1, limit)
    violations = []
    for j in range(n_next):
        for m in range(n_next):
            start = j * n_next + m
            if start > limit:
                continue
            if table.entry(start - m, j) != a_next**j:
                violations.append({"j": j, "m": m, "order": start, "kind": "leading"})
            for order in range(start + 1, limit + 1):
                if table.entry(order - m, j) != 0:
                    violations.append({"j": j, "m": m, "order": order, "kind": "extra"})
                    break
    return violations


# ---------------------------------------------------------------------------
# Recurrence-defined series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecurrenceSpec:
    """
    a_(k+1) = sum over (beta, i) of c[(beta, i)] (k + shift)^(-i) prod_t a_(k-t)^beta_t.

    beta has length r with |beta| <= d1, 0 <= i <= d2.
    """

    r: int
    d1: int
    d2: int
    coefficients: dict
    initial: tuple
    shift: int = 0
    radius: Fraction = ONE
    bound: Fraction = ONE
    L1: int = field(init=False)
    L2: int = field(init=False)

    def __post_init__(self):
        if self.r < 1:
            raise ValidationError(f"recurrence length must be at least 1, got {self.r}")
        if self.d1 < 1:
            raise ValidationError(f"degree d1 must be at least 1, got {self.d1}")
        if self.d2 < 0 or self.shift < 0:
            raise ValidationError("d2 and shift must be nonnegative")
        cleaned = {}
        for key, value in dict(self.coefficients).items():
            beta, i = tuple(int(x) for x in key[0]), int(key[1])
            if len(beta) != self.r or any(x < 0 for x in beta):
                raise ValidationError(f"multi-index {beta} must have {self.r} nonnegative entries")
            if sum(beta) > self.d1 or not 0 <= i <= self.d2:
                raise ValidationError(
                    f"term {(beta, i)} exceeds degrees d1={self.d1}, d2={self.d2}"
                )
            cleaned[(beta, i)] = to_fraction(value)
        initial = tuple(to_fraction(a) for a in self.initial)
        if len(initial) < self.r:
            raise ValidationError(f"need at least {self.r} initial terms, got {len(initial)}")
        if self.shift == 0 and self.d2 > 0 and len(initial) < 2:
            raise ValidationError(
                "terms in 1/k are undefined at k = 0; supply a_1 or use a positive shift"
            )
        object.__setattr__(self, "coefficients", cleaned)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "radius", to_fraction(self.radius))
        object.__setattr__(self, "bound", to_fraction(self.bound))
        object.__setattr__(self, "L1", lcm(1, *(c.denominator for c in cleaned.values())))
        object.__setattr__(self, "L2", lcm(1, *(a.denominator for a in initial)))

    @property
    def k0(self):
        """Base index of the denominator induction."""
        return max(len(self.initial) - 1, 2)


def gen_recurrence(spec, K):
    """
    Iterate the recurrence exactly up to a_K.

    Returns:
        tuple: (ExactSeries, denominators D_0..D_K with D_k = lcm of denominators of a_0..a_k)
    """
    terms = list(spec.initial[: K + 1])
    for k in range(len(spec.initial) - 1, K):
        weight = Fraction(1, k + spec.shift) if (k + spec.shift) else None
        total = ZERO
        for (beta, i), c in spec.coefficients.items():
            term = c
            if i:
                term *= weight**i
            for t, power in enumerate(beta):
                if power:
                    term *= terms[k - t] ** power
            total += term
        terms.append(total)
    trace = []
    running = 1
    for a in terms:
        running = lcm(running, a.denominator)
        trace.append(running)
    series = ExactSeries(coeffs=tuple(terms), radius=spec.radius, bound=spec.bound)
    return series, tuple(trace)


def _step_constant(spec):
    return spec.d2 + (mp.log(spec.L1) + spec.d2 * mp.log(max(spec.shift, 1))) / mp.log(2)


def _base_constant(spec):
    """Returns (base, k0, adjusted)."""
    r = spec.r
    if r >= 3 and len(spec.initial) == r:
        return mp.log(spec.L2) / ((r - 1) * mp.log(r - 1)), r - 1, False
    k0 = spec.k0
    _, trace = gen_recurrence(spec, k0)
    return mp.log(trace[k0]) / (k0 * mp.log(k0)), k0, True


def denominator_bound(spec, k, dps=None):
    """
    D_k <= e^(M d1^(k-k0) k log k) with M = max(base, d2 + (log L1 + d2 log s)/log 2).

    base is log L2 / ((r-1) log(r-1)) for r >= 3 with exactly r initial terms;
    otherwise it is log D_k0 / (k0 log k0) from the exact trace, flagged "adjusted".
    """
    dps = resolve_dps(dps)
    with mp.workdps(dps):
        base, k0, adjusted = _base_constant(spec)
        if k < k0:
            raise ValidationError(f"denominator bound holds from k = {k0}, got k = {k}")
        M = max(base, _step_constant(spec))
        log_bound = M * mp.mpf(spec.d1) ** (k - k0) * k * mp.log(k)
        padded_log = log_bound * (1 + mp.mpf(10) ** (-(dps - 10)))
        value = mp.e**padded_log
    notes = ["adjusted base case from the exact D_k0"] if adjusted else []
    return BoundReport(
        formula="denominator_bound",
        anchor="denominator growth of a recurrence-defined series",
        inputs={
            "k": k,
            "k0": k0,
            "r": spec.r,
            "d1": spec.d1,
            "d2": spec.d2,
            "L1": spec.L1,
            "L2": spec.L2,
            "shift": spec.shift,
            "M": mp.nstr(M, 20),
            "log_bound": mp.nstr(padded_log, 30),
        },
        value=value,
        exact=False,
        precision_digits=dps,
        notes=tuple(notes),
    )


def denominator_violations(spec, trace, dps=None):
    """Indices k >= k0 where log D_k exceeds the logarithm of the bound."""
    dps = resolve_dps(dps)
    violations = []
    with mp.workdps(dps):
        base, k0, _ = _base_constant(spec)
        M = max(base, _step_constant(spec))
        for k in range(k0, len(trace)):
            limit = M * mp.mpf(spec.d1) ** (k - k0) * k * mp.log(k)
            limit *= 1 + mp.mpf(10) ** (-(dps - 10))
            if mp.log(trace[k]) > limit:
                violations.append(k)
    if violations:
        logger.warning("FINDING: denominator bound violated at k = %s", violations)
    return violations


def recurrence_growth(spec, resolution=1000):
    """
    Polynomial S(l) = M l^2 bounding log h_l for a linear recurrence (ascending coefficients).

    M is rounded up to a multiple of 1/resolution.
    """
    if spec.d1 != 1:
        raise ValidationError("growth polynomial needs a linear recurrence (d1 = 1)")
    with mp.workdps(DEFAULT_DPS):
        base, _, _ = _base_constant(spec)
        M = max(base, _step_constant(spec))
        numerator = int(mp.ceil(M * resolution))
    return [ZERO, ZERO, Fraction(numerator, resolution)]


# ---------------------------------------------------------------------------
# Random series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomSpec:
    seed: int
    cutoff: int

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValidationError(f"cutoff must be nonnegative, got {self.cutoff}")


def sample_random(spec):
    """
    Random series a_0..a_cutoff with dyadic coefficients uniform on [-1, 1].

    Each coefficient is the midpoint (2m + 1 - 2^64) / 2^64 of one of 2^64 equal cells,
    m drawn from numpy's default generator seeded with spec.seed. Metadata is
    (R, B) = (1/2, 2), since sum |a_k| 2^-k <= 2.
    """
    rng = np.random.default_rng(spec.seed)
    draws = rng.integers(0, 2**RANDOM_BITS, size=spec.cutoff + 1, dtype=np.uint64)
    scale = 2**RANDOM_BITS
    coeffs = tuple(Fraction(2 * int(m) + 1 - scale, scale) for m in draws)
    return ExactSeries(coeffs=coeffs, radius=Fraction(1, 2), bound=Fraction(2))


def sample_random_batch(seeds, cutoff, workers=1):
    specs = [RandomSpec(seed=int(seed), cutoff=cutoff) for seed in seeds]
    if workers > 1 and len(specs) > 1:
        with Pool(processes=workers) as pool:
            return pool.map(sample_random, specs)
    return [sample_random(spec) for spec in specs]


# ---------------------------------------------------------------------------
# JSON specs
# ---------------------------------------------------------------------------


def lacunary_spec_from_json(doc):
    """
    Read {"exponents": {...}, "coefficients": {...}, "q": ..., "p": ...}.

    Exponent rules: {"kind": "explicit", "values": [2, 5, 26]},
    {"kind": "square_plus", "start": 2, "offset": 1} or {"kind": "power", "start": 2, "power": 3}.
    Coefficient rules: {"kind": "geometric", "ratio": "1/2"}, {"kind": "constant", "value": "1"}
    or {"kind": "explicit", "values": ["1/2", "1/4"]}.
    """
    try:
        exponents = dict(doc["exponents"])
        coefficients = dict(doc["coefficients"])
    except (KeyError, TypeError) as e:
        raise ValidationError(f"lacunary spec is missing a rule: {e}")
    exponent_rule = ExponentRule(
        kind=exponents.get("kind", "explicit"),
        start=int(exponents.get("start", 2)),
        offset=int(exponents.get("offset", 1)),
        power=int(exponents.get("power", 3)),
        values=tuple(int(v) for v in exponents.get("values", ())),
    )
    coefficient_rule = CoefficientRule(
        kind=coefficients.get("kind", "geometric"),
        ratio=to_fraction(coefficients.get("ratio", "1/2")),
        value=to_fraction(coefficients.get("value", "1")),
        values=tuple(coefficients.get("values", ())),
    )
    q = doc.get("q")
    p = doc.get("p")
    return LacunarySpec(
        exponent_rule=exponent_rule,
        coefficient_rule=coefficient_rule,
        q=None if q is None else to_fraction(q),
        p=None if p is None else to_fraction(p),
    )


def recurrence_spec_from_json(doc):
    """
    Read {"r", "d1", "d2", "shift", "initial": [...], "terms": [...]}.

    Each term reads {"beta": [...], "i": 0, "c": "1"}.
    """
    try:
        terms = {
            (tuple(term["beta"]), int(term.get("i", 0))): to_fraction(term["c"])
            for term in doc["terms"]
        }
        return RecurrenceSpec(
            r=int(doc["r"]),
            d1=int(doc["d1"]),
            d2=int(doc.get("d2", 0)),
            coefficients=terms,
            initial=tuple(doc["initial"]),
            shift=int(doc.get("shift", 0)),
            radius=to_fraction(doc.get("radius", "1")),
            bound=to_fraction(doc.get("bound", "1")),
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"recurrence spec is incomplete: {e}")
