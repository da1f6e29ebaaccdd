"""
Module for rational points of bounded height on the graph of a series.

The scanner walks every x in [-1/4, 1/4] with height at most T (Farey order T),
evaluates the truncated series exactly and uses the Cauchy tail bound to decide,
for each x, whether some y of height at most T can equal f(x):

- "excluded": the certified interval around f(x) holds no admissible y
- "certified": membership is exact (x = 0, where f(0) = a_0)
- "unresolved": the single admissible candidate sits inside the interval

Distinct rationals with denominators at most T are at least 1/T^2 apart, so once the
interval radius is below 1/(2T^2) there is at most one candidate, and it is the best
rational approximation of the computed value with denominator at most T.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from multiprocessing import Pool

import numpy as np

from modules.errors import PrecisionInsufficientError, ValidationError
from modules.series_core import tail_bound, to_fraction

logger = logging.getLogger(__name__)

QUARTER = Fraction(1, 4)


def height(value):
    """max(|numerator|, denominator), taken over every coordinate of a tuple."""
    if isinstance(value, (tuple, list)):
        if not value:
            raise ValidationError("height of an empty tuple is undefined")
        return max(height(v) for v in value)
    value = to_fraction(value)
    return max(abs(value.numerator), value.denominator)


@dataclass(frozen=True)
class RationalPoint:
    x: Fraction
    y: Fraction

    @property
    def height(self):
        return height((self.x, self.y))


@dataclass
class ScanReport:
    T: int
    N: int
    enumerated: int = 0
    certified: list = field(default_factory=list)
    excluded: int = 0
    unresolved: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def merge(self, other):
        self.enumerated += other.enumerated
        self.certified.extend(other.certified)
        self.excluded += other.excluded
        self.unresolved.extend(other.unresolved)
        self.rows.extend(other.rows)
        return self

    def to_dict(self):
        return {
            "T": self.T,
            "N": self.N,
            "enumerated": self.enumerated,
            "certified": len(self.certified),
            "certified_points": [
                {"x": str(p.x), "y": str(p.y), "height": p.height} for p in self.certified
            ],
            "excluded": self.excluded,
            "unresolved": len(self.unresolved),
            "unresolved_candidates": self.unresolved,
        }


def _first_at_least(lo, T):
    """Smallest fraction >= lo with denominator <= T (Stern-Brocot descent)."""
    if lo.denominator <= T:
        return lo
    # a/b < lo < c/d are neighbours; the mediant splits them until its denominator overflows
    a, b = lo.numerator // lo.denominator, 1
    c, d = a + 1, 1
    while True:
        num, den = a + c, b + d
        if den > T:
            return Fraction(c, d)
        if Fraction(num, den) < lo:
            a, b = num, den
        else:
            c, d = num, den


def _successor(x, T):
    """Next fraction after x in the Farey sequence of order T."""
    a, b = x.numerator, x.denominator
    # the successor c/d satisfies b*c - a*d = 1, so d = -a^-1 mod b lifted to the
    # largest such value <= T
    d = (-pow(a, -1, b)) % b if b > 1 else 0
    d += ((T - d) // b) * b
    return Fraction((a * d + 1) // b, d)


def farey_range(lo, hi, T, include_hi=True):
    """Reduced fractions x with lo <= x <= hi (or < hi) and denominator <= T, ascending."""
    lo, hi = to_fraction(lo), to_fraction(hi)
    if T < 1:
        raise ValidationError(f"height cap must be at least 1, got {T}")
    x = _first_at_least(lo, T)
    while x < hi or (include_hi and x == hi):
        yield x
        x = _successor(x, T)


class _Evaluator:
    """Integer Horner evaluation of the truncation f_N at rational points."""

    def __init__(self, f, N):
        self.N = N
        # Clear denominators once so the inner loop only multiplies integers
        self.denominator = lcm(1, *(a.denominator for a in f.coeffs[: N + 1]))
        self.scaled = [int(a * self.denominator) for a in f.coeffs[: N + 1]]

    def __call__(self, x):
        p, q = x.numerator, x.denominator
        acc = self.scaled[self.N]
        q_power = 1
        for k in range(self.N - 1, -1, -1):
            q_power *= q
            acc = acc * p + self.scaled[k] * q_power
        return Fraction(acc, self.denominator * q_power)


def required_order(f, T, r=QUARTER):
    """Smallest N <= f.order with tail_bound(f, N, r) < 1/(2T^2)."""
    target = Fraction(1, 2 * T * T)
    for N in range(f.order + 1):
        if tail_bound(f, N, r) < target:
            return N
    raise PrecisionInsufficientError(
        f"order {f.order} cannot separate heights up to T={T} on |x| <= {r}",
        T=T,
        stored=f.order,
    )


def _classify(f, x, T, N, evaluate, tau):
    """Status row for one abscissa."""
    # ==== x = 0: f(0) = a_0 is known exactly ====
    if x == 0:
        a0 = f.coeffs[0]
        if height(a0) <= T:
            return {"status": "certified", "y": a0, "margin": None}
        return {"status": "excluded", "y": None, "margin": None}

    # ==== x != 0: compare the only admissible y with the certified interval ====
    # f(x) lies in [value - tau, value + tau]. The interval is narrower than the
    # spacing of heights <= T, so the best approximation with denominator <= T is
    # the only y that could still equal f(x).
    order = N
    while True:
        value = evaluate(x) if order == N else _Evaluator(f, order)(x)
        candidate = value.limit_denominator(T)
        gap = abs(candidate - value)
        # limit_denominator caps the denominator only; the numerator is checked here
        if gap > tau or abs(candidate.numerator) > T:
            margin = gap - tau if gap > tau else None
            return {"status": "excluded", "y": None, "margin": margin}
        if order >= f.order:
            return {"status": "unresolved", "y": candidate, "margin": gap - tau, "width": 2 * tau}
        # Candidate survived: shrink the interval with more terms and look again
        order = min(2 * order, f.order)
        tau = tail_bound(f, order, abs(x))


def _scan_subrange(job):
    f, T, N, lo, hi, include_hi, keep_rows = job
    report = ScanReport(T=T, N=N)
    evaluate = _Evaluator(f, N)
    # One tail bound serves the whole subrange: it grows with |x|
    tau = tail_bound(f, N, max(abs(lo), abs(hi)))
    for x in farey_range(lo, hi, T, include_hi=include_hi):
        report.enumerated += 1
        outcome = _classify(f, x, T, N, evaluate, tau)
        status = outcome["status"]
        if status == "certified":
            report.certified.append(RationalPoint(x=x, y=outcome["y"]))
        elif status == "excluded":
            report.excluded += 1
        else:
            report.unresolved.append(
                {
                    "x": str(x),
                    "y": str(outcome["y"]),
                    "width": float(outcome["width"]),
                }
            )
        if keep_rows:
            margin = outcome["margin"]
            report.rows.append(
                {
                    "x_num": x.numerator,
                    "x_den": x.denominator,
                    "status": status,
                    "y_if_any": "" if outcome["y"] is None else str(outcome["y"]),
                    "margin": "" if margin is None else f"{float(margin):.6e}",
                }
            )
    return report


def scan_graph_points(f, T, N=None, workers=1, keep_rows=False, lo=-QUARTER, hi=QUARTER):
    """
    Rational points of height <= T on the graph of f over [lo, hi] (default [-1/4, 1/4]).

    Args:
        f (ExactSeries): series with valid (R, B) metadata, R > max(|lo|, |hi|)
        T (int): height cap
        N (int): truncation order; default the smallest order separating heights <= T
        workers (int): processes; the interval is cut into Farey subranges
        keep_rows (bool): keep one row per abscissa for CSV output

    Returns:
        ScanReport
    """
    lo, hi = to_fraction(lo), to_fraction(hi)
    r = max(abs(lo), abs(hi))
    logger.info("Scanning rational points of height <= %d on [%s, %s]...", T, lo, hi)
    if N is None:
        N = required_order(f, T, r)
    else:
        f.require_order(N, "rational point scan")
        if tail_bound(f, N, r) >= Fraction(1, 2 * T * T):
            raise PrecisionInsufficientError(
                f"tail bound at order {N} does not separate heights up to T={T}; raise N",
                N=N,
                T=T,
            )
    # Split [lo, hi] into half-open pieces; only the last one keeps its right end
    # 4 pieces per worker; Farey points are not spread evenly
    pieces = max(1, 4 * workers) if workers > 1 else 1
    cuts = [lo + (hi - lo) * Fraction(i, pieces) for i in range(pieces + 1)]
    jobs = [
        (f, T, N, cuts[i], cuts[i + 1], i == pieces - 1, keep_rows) for i in range(pieces)
    ]
    if workers > 1:
        with Pool(processes=workers) as pool:
            partials = pool.map(_scan_subrange, jobs)
    else:
        partials = [_scan_subrange(job) for job in jobs]
    report = ScanReport(T=T, N=N)
    for partial in partials:
        report.merge(partial)
    logger.info(
        "  Found %d certified, %d excluded, %d unresolved among %d abscissae",
        len(report.certified),
        report.excluded,
        len(report.unresolved),
        report.enumerated,
    )
    for candidate in report.unresolved:
        logger.info("FINDING: unresolved candidate %s", candidate)
    return report


def scan_rows(f, T, N=None, workers=1):
    """Per-abscissa rows (x_num, x_den, status, y_if_any, margin) in ascending x."""
    return scan_graph_points(f, T, N=N, workers=workers, keep_rows=True).rows


@dataclass(frozen=True)
class LogPowerFit:
    alpha: float
    beta: float
    max_residual: float
    degenerate: bool


def fit_log_power(counts):
    """
    Least-squares fit of log(count) = alpha log(log T) + log(beta).

    Constant counts give the degenerate fit alpha = 0, beta = count.
    """
    points = sorted((int(T), int(c)) for T, c in counts)
    if len({T for T, _ in points}) < 3:
        raise ValidationError("fit needs at least three distinct heights")
    if any(c < 1 for _, c in points) or any(T < 3 for T, _ in points):
        raise ValidationError("fit needs counts >= 1 and heights >= 3")
    values = {c for _, c in points}
    # Flat counts
    if len(values) == 1:
        return LogPowerFit(alpha=0.0, beta=float(values.pop()), max_residual=0.0, degenerate=True)
    X = np.log(np.log(np.array([T for T, _ in points], dtype=float)))
    Y = np.log(np.array([c for _, c in points], dtype=float))
    design = np.column_stack([X, np.ones_like(X)])
    (alpha, log_beta), *_ = np.linalg.lstsq(design, Y, rcond=None)
    residuals = Y - (alpha * X + log_beta)
    return LogPowerFit(
        alpha=float(alpha),
        beta=float(np.exp(log_beta)),
        max_residual=float(np.abs(residuals).max()),
        degenerate=False,
    )
