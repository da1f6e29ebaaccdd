"""
Module for counting zeros of P(z, f(z)) in closed discs.

This is the ground truth side of every bound: a zero count is produced by two
independent floating-point methods (companion-matrix roots and a winding number on
the circle |z| = r) and promoted to "rouche-certified" only when exact rational data
proves that the truncated polynomial and the true analytic function have the same
number of zeros inside the circle.

Key operations:
1. substitute(): exact Taylor coefficients of P(z, f(z))
2. multiplicity_at_origin(): exact vanishing order at 0
3. count_zeros_disc(): certified or heuristic zero count in |z| < r
4. empirical_Z(): running maximum of certified counts over sampled polynomials

Author: Bautin Lab Team
Last Updated: 2026-10-19
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import pi

import numpy as np

from modules.errors import (
    InconclusiveError,
    RadiusOutOfRangeError,
    RootOnContourError,
    ValidationError,
)
from modules.series_core import (
    ONE,
    ZERO,
    poly_add,
    poly_mul,
    power_table,
    tail_bound,
    to_fraction,
)

logger = logging.getLogger(__name__)

DEFAULT_PANELS = 256
MAX_PANELS = 1 << 16
NUDGE = Fraction(63, 64)
MAX_NUDGES = 8
ROOT_CONTOUR_TOL = 1e-9
TRIM_TOL = 2.0**-80


@dataclass(frozen=True)
class CurvePolynomial:
    """P(z, y) = sum of lambdas[(i, j)] * z^i * y^j, with exact rational coefficients."""

    lambdas: dict

    def __post_init__(self):
        cleaned = {}
        for key, value in dict(self.lambdas).items():
            i, j = int(key[0]), int(key[1])
            if i < 0 or j < 0:
                raise ValidationError(f"negative exponent in monomial {key}")
            value = to_fraction(value)
            if value != 0:
                cleaned[(i, j)] = value
        if not cleaned:
            raise ValidationError("curve polynomial has no nonzero coefficient")
        object.__setattr__(self, "lambdas", cleaned)

    @classmethod
    def from_vector(cls, columns, vector):
        """Build from a coefficient vector laid out along family columns (i, j)."""
        return cls(dict(zip(columns, vector)))

    @classmethod
    def from_dict(cls, doc):
        """Inverse of to_dict: {"i,j": coefficient}."""
        try:
            lambdas = {
                tuple(int(part) for part in key.split(",")): value
                for key, value in doc.items()
            }
        except (AttributeError, ValueError) as e:
            raise ValidationError(f"curve polynomial keys must read 'i,j': {e}")
        if any(len(key) != 2 for key in lambdas):
            raise ValidationError("curve polynomial keys must read 'i,j'")
        return cls(lambdas)

    @property
    def degree_z(self):
        return max(i for i, _ in self.lambdas)

    @property
    def degree_y(self):
        return max(j for _, j in self.lambdas)

    @property
    def degree(self):
        return max(i + j for i, j in self.lambdas)

    def to_dict(self):
        return {
            f"{i},{j}": [str(v.numerator), str(v.denominator)]
            for (i, j), v in sorted(self.lambdas.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        }


@dataclass(frozen=True)
class ZeroCount:
    radius: Fraction
    count: int
    certification: str  # "rouche-certified" or "heuristic"
    N: int
    margin: float
    contour_panels: int
    companion_count: int
    winding_count: int

    @property
    def certified(self):
        return self.certification == "rouche-certified"

    def to_dict(self):
        return {
            "radius": [str(self.radius.numerator), str(self.radius.denominator)],
            "count": self.count,
            "certified": self.certified,
            "certification": self.certification,
            "N": self.N,
            "margin": self.margin,
            "contour_panels": self.contour_panels,
            "companion_count": self.companion_count,
            "winding_count": self.winding_count,
        }


@dataclass(frozen=True)
class EmpiricalZ:
    value: int
    certified_counts: int
    attempts: int
    best: CurvePolynomial = None


def substitute(P, f, K):
    """Exact Taylor coefficients c_0..c_K of P(z, f(z))."""
    table = power_table(f, P.degree_y, K)
    coeffs = [ZERO] * (K + 1)
    for (i, j), lam in P.lambdas.items():
        for k in range(i, K + 1):
            coeffs[k] += lam * table.entry(k - i, j)
    return tuple(coeffs)


def multiplicity_at_origin(P, f, K):
    """
    Order of the first nonzero Taylor coefficient of P(z, f(z)).

    Returns None when c_0..c_K all vanish, meaning the multiplicity is at least K+1.
    """
    for k, coef in enumerate(substitute(P, f, K)):
        if coef != 0:
            return k
    return None


def _composite_polynomial(P, base):
    """Exact (untruncated) polynomial P(z, g(z)) for a polynomial g."""
    powers = [(ONE,)]
    for _ in range(P.degree_y):
        powers.append(poly_mul(powers[-1], base))
    result = ()
    for (i, j), lam in P.lambdas.items():
        term = (ZERO,) * i + tuple(lam * c for c in powers[j])
        result = poly_add(result, term)
    return result


def _truncation_error(P, f, N, r):
    """
    Bound on |P(z, f(z)) - P(z, f_N(z))| for |z| <= r.

    With F = sum_{k<=N} |a_k| r^k and tau the Cauchy tail, |f_N| <= F and
    |f - f_N| <= tau, so |f^j - f_N^j| <= (F + tau)^j - F^j.
    """
    tau = tail_bound(f, N, r)
    F = sum(abs(a) * r**k for k, a in enumerate(f.coeffs[: N + 1]))
    return sum(
        abs(lam) * r**i * ((F + tau) ** j - F**j) for (i, j), lam in P.lambdas.items()
    )


def _contour_values(w_coeffs, panels):
    """Values of sum w_k z^k at the panels-th roots of unity, counterclockwise from 1."""
    folded = np.zeros(panels, dtype=complex)
    np.add.at(folded, np.arange(len(w_coeffs)) % panels, w_coeffs)
    return np.fft.ifft(folded) * panels


def _winding_of_path(values):
    """Winding number about 0 of the closed polygon through values, by ray crossings."""
    x = np.append(values.real, values.real[0])
    y = np.append(values.imag, values.imag[0])
    above = y >= 0
    flips = np.nonzero(above[1:] != above[:-1])[0]
    winding = 0
    # Count signed crossings of the positive real axis
    for i in flips:
        direction = 1 if above[i + 1] else -1
        x0, y0, x1, y1 = x[i], y[i], x[i + 1], y[i + 1]
        if x0 > 0 and x1 > 0:
            winding += direction
        elif not (x0 <= 0 and x1 <= 0):
            crossing = (x0 * y1 - x1 * y0) / (y1 - y0)
            if crossing > 0:
                winding += direction
    return winding


def _count_once(P, f, r, N, panels):
    base = f.coeffs[: N + 1]
    exact = _composite_polynomial(P, base)
    if not any(exact):
        raise InconclusiveError(
            "P(z, f_N(z)) vanishes identically; the zero count is infinite",
            N=N,
        )
    # Rescale z -> r z so the contour is the unit circle
    scaled = [c * r**k for k, c in enumerate(exact)]
    magnitudes = np.array([abs(float(c)) for c in scaled])
    total = magnitudes.sum()

    # drop high-degree terms whose mass on the contour is negligible; the exact
    # dropped mass joins the Rouché error
    keep = len(scaled)
    running = 0.0
    while keep > 1 and running + magnitudes[keep - 1] <= TRIM_TOL * total:
        running += magnitudes[keep - 1]
        keep -= 1
    while keep > 1 and scaled[keep - 1] == 0:
        keep -= 1
    dropped = sum(abs(c) for c in scaled[keep:])
    w_coeffs = np.array([float(c) for c in scaled[:keep]])

    error = _truncation_error(P, f, N, r) + dropped

    # ==== Count 1: companion-matrix roots inside the unit disc ====
    if keep > 1:
        roots = np.roots(w_coeffs[::-1])
        moduli = np.abs(roots)
        if np.any(np.abs(moduli - 1.0) < ROOT_CONTOUR_TOL):
            raise RootOnContourError(f"a root lies on |z| = {r}", r=r)
        companion = int(np.sum(moduli < 1.0))
    else:
        companion = 0

    # ==== Count 2: winding number of the sampled contour image ====
    lipschitz = float(sum(k * abs(c) for k, c in enumerate(scaled[:keep])))
    abs_sum = float(np.abs(w_coeffs).sum())
    float_slack = 4.0 * keep * np.finfo(float).eps * abs_sum

    # Double the panels until two successive windings agree
    previous = None
    while True:
        values = _contour_values(w_coeffs, panels)
        winding = _winding_of_path(values)
        if previous is not None and winding == previous:
            break
        if panels >= MAX_PANELS:
            break
        previous = winding
        panels *= 2
    # ==== Rouché margin ====
    # |w| between samples is at least the sampled minimum minus Lipschitz drift over
    # half a panel; a positive margin means the truncation cannot change the count
    minimum = float(np.abs(values).min())
    step = 2.0 * pi / panels
    margin = minimum - lipschitz * step / 2.0 - float_slack - float(error)
    return companion, winding, margin, panels


def count_zeros_disc(P, f, r, N=None, panels=DEFAULT_PANELS):
    """
    Count zeros (with multiplicity) of P(z, f(z)) in |z| < r.

    Args:
        P (CurvePolynomial): the curve
        f (ExactSeries): analytic function with (R, B) metadata
        r: disc radius, 0 < r < R
        N (int): truncation order; default max(4d^2, 64) capped by the stored order,
            doubled until the Rouché margin is positive
        panels (int): initial contour samples, doubled until the winding number settles

    Returns:
        ZeroCount: "rouche-certified" when the margin is positive and both counts
        agree, "heuristic" otherwise
    """
    r = to_fraction(r)
    if r <= 0 or r >= f.radius:
        raise RadiusOutOfRangeError(
            f"disc radius {r} must satisfy 0 < r < R = {f.radius}", r=r, R=f.radius
        )
    explicit_N = N is not None
    if N is None:
        N = min(max(4 * P.degree**2, 64), f.order)
    f.require_order(N, "zero counting")

    for attempt in range(MAX_NUDGES + 1):
        try:
            while True:
                companion, winding, margin, used = _count_once(P, f, r, N, panels)
                certified = margin > 0 and companion == winding
                if certified or explicit_N or N >= f.order:
                    break
                N = min(2 * N, f.order)
                logger.debug("  margin %.3e not positive, raising N to %d", margin, N)
            break
        except RootOnContourError:
            if attempt == MAX_NUDGES:
                raise
            r = r * NUDGE
            logger.info("  root on contour, nudging radius to %s", r)

    certification = "rouche-certified" if certified else "heuristic"
    if not certified:
        logger.info(
            "FINDING: zero count %d left heuristic (margin %.3e, companion %d, winding %d)",
            winding,
            margin,
            companion,
            winding,
        )
    return ZeroCount(
        radius=r,
        count=winding,
        certification=certification,
        N=N,
        margin=float(margin),
        contour_panels=used,
        companion_count=companion,
        winding_count=winding,
    )


def _perturbations(P, scale):
    """The polynomial itself plus one coefficient nudge per monomial."""
    yield P
    for key in sorted(P.lambdas):
        nudged = dict(P.lambdas)
        nudged[key] = nudged[key] + scale
        if any(v != 0 for v in nudged.values()):
            yield CurvePolynomial(nudged)


def empirical_Z(f, columns, trials, r, adversarial=(), seed=0, N=None):
    """
    Lower estimate of Z_d(f): the largest certified zero count over sampled curves.

    Samples are `trials` random polynomials on the given monomial columns with
    coefficients in {-8/8, ..., 8/8}, followed by each adversarial polynomial and its
    single-coefficient perturbations by 2^-10.
    """
    if trials < 1:
        raise ValidationError(f"empirical_Z needs trials >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    candidates = []
    for _ in range(trials):
        draws = rng.integers(-8, 9, size=len(columns))
        # the zero polynomial has no finite count
        if not draws.any():
            draws[0] = 1
        candidates.append(
            CurvePolynomial.from_vector(columns, [Fraction(int(v), 8) for v in draws])
        )
    for P in adversarial:
        candidates.extend(_perturbations(P, Fraction(1, 1024)))

    best_value, best_poly, certified_counts = 0, None, 0
    for P in candidates:
        try:
            result = count_zeros_disc(P, f, r, N=N)
        except (InconclusiveError, RootOnContourError) as e:
            logger.debug("  skipped a sample: %s", e)
            continue
        # Heuristic counts never enter the estimate
        if not result.certified:
            continue
        certified_counts += 1
        if best_poly is None or result.count > best_value:
            best_value, best_poly = result.count, P
    logger.info(
        "  empirical Z = %d over %d certified counts (%d attempts)",
        best_value,
        certified_counts,
        len(candidates),
    )
    return EmpiricalZ(
        value=best_value,
        certified_counts=certified_counts,
        attempts=len(candidates),
        best=best_poly,
    )
