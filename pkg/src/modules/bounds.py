"""
Module for evaluating the closed-form zero-count bounds.

Every function returns a BoundReport holding the formula id, a short description of
what the bound controls, the echoed inputs and the value. Formulas that stay
rational are returned exactly; everything involving log, exp or pi is evaluated
with mpmath at DEFAULT_DPS digits, padded in the safe direction and reported to
REPORT_DIGITS significant digits rounded the same way. Count bounds are rounded
up; radii and probability thresholds are rounded down.

Author: Bautin Lab Team
Last Updated: 2026-10-19
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np
from mpmath import mp

from modules.errors import PrecisionInsufficientError, ValidationError
from modules.series_core import fraction_pair, poly_eval, poly_mul, to_fraction

logger = logging.getLogger(__name__)

DEFAULT_DPS = 60
MIN_DPS = 50
REPORT_DIGITS = 12
FLOOR_LOG_ATTEMPTS = 8


@dataclass(frozen=True)
class BoundReport:
    formula: str
    anchor: str
    inputs: dict
    value: object  # Fraction when exact, mpf otherwise (already padded)
    exact: bool
    precision_digits: int
    rounded: str = "up"
    notes: tuple = ()

    def display(self, digits=REPORT_DIGITS):
        """The value as a decimal string, rounded in the report's direction."""
        return round_directed(self.value, digits, self.rounded, self.precision_digits)

    def as_mpf(self, dps=None):
        """
        The value as an mpf, so exact and transcendental reports compare directly.

        Exact values are converted at dps digits and padded in the report's rounding
        direction; mpf values are returned as stored.
        """
        if not self.exact:
            return self.value
        dps = resolve_dps(dps)
        exact = to_fraction(self.value)
        with mp.workdps(dps):
            value = _mpq(exact)
            if exact.denominator == 1 and value == exact.numerator:
                return +value
            return _pad(value, self.rounded, dps)

    def to_dict(self):
        out = {
            "formula": self.formula,
            "anchor": self.anchor,
            "inputs": {key: _jsonable(value) for key, value in self.inputs.items()},
            "value": self.display(),
            "rounded": self.rounded,
            "precision_digits": self.precision_digits,
            "notes": list(self.notes),
        }
        if self.exact:
            out["exact"] = fraction_pair(self.value)
        return out


def _jsonable(value):
    if isinstance(value, Fraction):
        return fraction_pair(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (int, str, bool)) or value is None:
        return value
    return str(value)


def resolve_dps(dps):
    if dps is None:
        return DEFAULT_DPS
    if dps < MIN_DPS:
        raise ValidationError(f"working precision must be at least {MIN_DPS} digits")
    return int(dps)


def _pad(value, direction, dps):
    """Push an mpf result by a relative 10^-(dps-10) in the safe direction."""
    slack = abs(value) * mp.mpf(10) ** (-(dps - 10))
    return value + slack if direction == "up" else value - slack


def round_directed(value, digits, direction, dps=DEFAULT_DPS):
    """Decimal string of value with `digits` significant digits, rounded up or down."""
    if isinstance(value, Fraction) and value.denominator == 1:
        if len(str(abs(value.numerator))) <= digits:
            return str(value.numerator)
    with mp.workdps(max(dps, MIN_DPS)):
        if isinstance(value, Fraction):
            x = mp.mpf(value.numerator) / value.denominator
        else:
            x = mp.mpf(value)
        if x == 0:
            return "0"
        exponent = int(mp.floor(mp.log10(abs(x)))) - digits + 1
        scaled = x / mp.mpf(10) ** exponent
        integral = mp.ceil(scaled) if direction == "up" else mp.floor(scaled)
        result = integral * mp.mpf(10) ** exponent
        return mp.nstr(result, digits + 1, strip_zeros=True)


def _positive(name, value):
    value = to_fraction(value)
    if value <= 0:
        raise ValidationError(f"{name} must be positive, got {value}")
    return value


def _report(formula, anchor, inputs, fn, dps, direction="up", notes=()):
    dps = resolve_dps(dps)
    with mp.workdps(dps):
        value = _pad(fn(), direction, dps)
    logger.debug("  %s = %s", formula, mp.nstr(value, 15))
    return BoundReport(
        formula=formula,
        anchor=anchor,
        inputs=inputs,
        value=value,
        exact=False,
        precision_digits=dps,
        rounded=direction,
        notes=tuple(notes),
    )


def _exact(formula, anchor, inputs, value, notes=(), direction="up"):
    return BoundReport(
        formula=formula,
        anchor=anchor,
        inputs=inputs,
        value=value,
        exact=True,
        precision_digits=0,
        rounded=direction,
        notes=tuple(notes),
    )


def _mpq(value):
    return mp.mpf(value.numerator) / value.denominator


# ---------------------------------------------------------------------------
# Bounds from the Bautin index
# ---------------------------------------------------------------------------


def zero_bound_disc(b, c, B, R, dps=None):
    """Zeros of any family member in D_{R/4}: 5b log(4 + 2c(b+1)B / min(R,1)^b)."""
    c, B, R = _positive("c", c), _positive("B", B), _positive("R", R)
    if b < 1:
        raise ValidationError(f"Bautin index must be at least 1, got {b}")

    def value():
        scale = _mpq(R) ** b if R <= 1 else mp.mpf(1)
        return 5 * b * mp.log(4 + 2 * _mpq(c) * (b + 1) * _mpq(B) / scale)

    return _report(
        "zero_bound_disc",
        "zero count in D_{R/4} from Bautin index and norm constant",
        {"b": b, "c": c, "B": B, "R": R},
        value,
        dps,
    )


def small_disc_radius(b, c, B, R, dps=None):
    """Radius rho with at most b zeros in D_rho: R / (e^{10b+2} max(2, c(b+1)B max(1/R,1)^b))."""
    c, B, R = _positive("c", c), _positive("B", B), _positive("R", R)

    def value():
        growth = max(1 / _mpq(R), mp.mpf(1)) ** b
        scale = max(mp.mpf(2), _mpq(c) * (b + 1) * _mpq(B) * growth)
        return _mpq(R) / (mp.e ** (10 * b + 2) * scale)

    return _report(
        "small_disc_radius",
        "disc radius holding at most b zeros",
        {"b": b, "c": c, "B": B, "R": R},
        value,
        dps,
        direction="down",
    )


def c_bound(sigma, B, R, b, delta, dps=None):
    """
    Estimate of the norm constant: sigma (B sqrt(sigma))^(sigma-1) / (delta R^(beta(sigma-1))).

    beta = b when R <= 1 and sigma/2 when R >= 1. The result is exact whenever sigma
    is a perfect square.
    """
    B, R, delta = _positive("B", B), _positive("R", R), _positive("delta", delta)
    inputs = {"sigma": sigma, "B": B, "R": R, "b": b, "delta": delta}
    anchor = "norm constant estimate from the largest nonzero minor"
    exponent = b * (sigma - 1) if R <= 1 else sigma * (sigma - 1) // 2
    root = isqrt(sigma)
    if root * root == sigma:
        value = sigma * (B * root) ** (sigma - 1) / (delta * R**exponent)
        return _exact("c_bound", anchor, inputs, value)

    def value():
        return (
            sigma
            * (_mpq(B) * mp.sqrt(sigma)) ** (sigma - 1)
            / (_mpq(delta) * _mpq(R) ** exponent)
        )

    return _report("c_bound", anchor, inputs, value, dps)


def z_bound_unit(b, sigma, delta, dps=None, notes=()):
    """Bound for R = B = 1: 5b log(4 + 2(b+1) sigma^sigma / delta)."""
    delta = _positive("delta", delta)

    def value():
        return 5 * b * mp.log(4 + 2 * (b + 1) * mp.mpf(sigma**sigma) / _mpq(delta))

    return _report(
        "z_bound_unit",
        "zero count in D_{1/4} for R = B = 1",
        {"b": b, "sigma": sigma, "delta": delta},
        value,
        dps,
        notes=notes,
    )


def z_bound_general(d, b, Delta, dps=None, notes=()):
    """Bezout bound on D_{1/4}: 5b log(4 + 2(b+1)(d+1)^(2(d+1)^2) / Delta)."""
    Delta = _positive("Delta", Delta)

    def value():
        growth = mp.mpf((d + 1) ** (2 * (d + 1) ** 2))
        return 5 * b * mp.log(4 + 2 * (b + 1) * growth / _mpq(Delta))

    return _report(
        "z_bound_general",
        "Bezout bound on D_{1/4} from any nonzero reduced minor",
        {"d": d, "b": b, "Delta": Delta},
        value,
        dps,
        notes=notes,
    )


def z_bound_via_nu(d, nu, Delta, dps=None):
    """The Bezout bound with the Bautin index replaced by nu_{2d} >= b."""
    report = z_bound_general(d, nu, Delta, dps)
    return BoundReport(
        formula="z_bound_via_nu",
        anchor="Bezout bound with the transcendence index nu_{2d}",
        inputs={"d": d, "nu_2d": nu, "Delta": report.inputs["Delta"]},
        value=report.value,
        exact=False,
        precision_digits=report.precision_digits,
    )


def z_bound_log_form(d, nu, U, dps=None):
    """Bezout bound when Delta >= e^-U: 5 nu (log 5 + log(nu+1) + 2(d+1)^3 + U)."""
    U = to_fraction(U)
    if U < 0:
        raise ValidationError(f"U must be nonnegative, got {U}")

    def value():
        return 5 * nu * (mp.log(5) + mp.log(nu + 1) + 2 * (d + 1) ** 3 + _mpq(U))

    return _report(
        "z_bound_log_form",
        "Bezout bound from a logarithmic lower bound on Delta",
        {"d": d, "nu_2d": nu, "U": U},
        value,
        dps,
    )


# ---------------------------------------------------------------------------
# Bounds from heights and growth conditions
# ---------------------------------------------------------------------------


def delta_lower_rational(d, nu, h, theta=None):
    """
    Lower bound for a nonzero Bautin determinant with rational coefficients.

    Returns h^(-d^2 (d+1) nu), or h^(-d^2 (d+1) theta) when the count theta of nonzero
    coefficients is supplied. Exact.
    """
    if h < 1:
        raise ValidationError(f"height must be at least 1, got {h}")
    exponent_base = theta if theta is not None else nu
    if exponent_base is None or exponent_base < 1:
        raise ValidationError("delta_lower_rational needs nu (or theta) >= 1")
    value = Fraction(1, int(h) ** (d * d * (d + 1) * exponent_base))
    notes = ("density form",) if theta is not None else ()
    return _exact(
        "delta_lower_rational",
        "height lower bound for a nonzero Bautin determinant",
        {"d": d, "nu": nu, "h": h, "theta": theta},
        value,
        notes=notes,
        direction="down",
    )


def _nonnegative_poly(name, coeffs):
    coeffs = tuple(to_fraction(c) for c in coeffs)
    if any(c < 0 for c in coeffs):
        raise ValidationError(f"{name} must have nonnegative coefficients")
    return coeffs


def composite_T(d, R_poly, S_poly):
    """
    T(d) = 10 R(2d)^2 + 10 R(2d) (2(d+1)^3 + U(d)), U(d) = S(R(2d)) d^2 (d+1) R(2d).

    R_poly bounds nu_d and S_poly bounds log h_l; both are ascending coefficient lists.
    """
    R_poly = _nonnegative_poly("R_poly", R_poly)
    S_poly = _nonnegative_poly("S_poly", S_poly)
    R2 = poly_eval(R_poly, Fraction(2 * d))
    U = poly_eval(S_poly, R2) * d * d * (d + 1) * R2
    T = 10 * R2 * R2 + 10 * R2 * (2 * (d + 1) ** 3 + U)
    return _exact(
        "composite_T",
        "zero bound under polynomial growth of nu_d and log h_l",
        {"d": d, "R_poly": list(R_poly), "S_poly": list(S_poly), "R_2d": R2, "U": U},
        T,
    )


def lacunary_bounds(d, q, p=None, dps=None):
    """
    (nu bound d^(q^2), zero bound 10 (2d)^(q^2) (1 + q d^2 + 5 d^(pq+3))).

    The nu bound only needs q; without p the zero bound is None.
    """
    q = to_fraction(q)
    if q <= 2:
        raise ValidationError(f"lacunarity exponent q must exceed 2, got {q}")
    if d < 1:
        raise ValidationError(f"degree must be at least 1, got {d}")
    if p is not None:
        p = _positive("p", p)
    inputs = {"d": d, "q": q, "p": p}
    nu_anchor = "transcendence index of a lacunary series"
    z_anchor = "zero count of a lacunary series"
    q2 = q * q
    if q2.denominator == 1:
        nu_report = _exact("lacunary_nu_bound", nu_anchor, inputs, Fraction(d) ** int(q2))
    else:
        nu_report = _report(
            "lacunary_nu_bound", nu_anchor, inputs, lambda: mp.mpf(d) ** _mpq(q2), dps
        )
    if p is None:
        return nu_report, None
    pq = p * q
    if q2.denominator == 1 and pq.denominator == 1:
        inner = 1 + q * d * d + 5 * Fraction(d) ** (int(pq) + 3)
        z_value = 10 * Fraction(2 * d) ** int(q2) * inner
        return nu_report, _exact("lacunary_z_bound", z_anchor, inputs, z_value)
    z_report = _report(
        "lacunary_z_bound",
        z_anchor,
        inputs,
        lambda: 10
        * mp.mpf(2 * d) ** _mpq(q2)
        * (1 + _mpq(q) * d * d + 5 * mp.mpf(d) ** (_mpq(pq) + 3)),
        dps,
    )
    return nu_report, z_report


# ---------------------------------------------------------------------------
# Random series
# ---------------------------------------------------------------------------


def delta_arity_degree(d):
    """Number of variables and degree of Delta_d as a polynomial in the coefficients."""
    return d * d + d, d * (d + 1) ** 2 // 2


def random_epsilon(d, p_hat, m_d=None, q_d=None, dps=None):
    """
    eps_d = (3(1 - p) / (2 pi^2 d^2 m_d))^q_d.

    With probability at least p a random series has |Q_d(f)| >= eps_d for a test
    polynomial Q_d of arity m_d and degree q_d; the defaults are those of Delta_d.
    """
    p_hat = to_fraction(p_hat)
    if not 0 < p_hat < 1:
        raise ValidationError(f"probability must lie in (0, 1), got {p_hat}")
    default_m, default_q = delta_arity_degree(d)
    m_d = default_m if m_d is None else m_d
    q_d = default_q if q_d is None else q_d

    def value():
        return (3 * (1 - _mpq(p_hat)) / (2 * mp.pi**2 * d * d * m_d)) ** q_d

    return _report(
        "random_epsilon",
        "probabilistic lower bound for a polynomial in random coefficients",
        {"d": d, "p": p_hat, "m_d": m_d, "q_d": q_d},
        value,
        dps,
        direction="down",
    )


def random_epsilon_asymptotic(d, p_hat, kappa1, kappa2, dps=None):
    """e^(-(gamma + kappa2) d^(kappa1+1)) with gamma = 2 + log(2 pi^2 / (3(1 - p)))."""
    p_hat = to_fraction(p_hat)
    if not 0 < p_hat < 1:
        raise ValidationError(f"probability must lie in (0, 1), got {p_hat}")

    def value():
        gamma = 2 + mp.log(2 * mp.pi**2 / (3 * (1 - _mpq(p_hat))))
        power = mp.mpf(d) ** (_mpq(to_fraction(kappa1)) + 1)
        return mp.e ** (-(gamma + _mpq(to_fraction(kappa2))) * power)

    return _report(
        "random_epsilon_asymptotic",
        "asymptotic form of the random-series threshold",
        {"d": d, "p": p_hat, "kappa1": kappa1, "kappa2": kappa2},
        value,
        dps,
        direction="down",
    )


# ---------------------------------------------------------------------------
# Remez inequality harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RemezResult:
    status: str  # "holds", "counterexample" or "inconclusive"
    sup_cube: float
    sup_set: float
    factor: float
    measure: float
    resolution: int

    @property
    def holds(self):
        return self.status == "holds"


def remez_grid(n, resolution):
    """Cell centres of a uniform grid on [-1, 1]^n, shape (resolution^n, n)."""
    axis = -1 + (2 * np.arange(resolution) + 1) / resolution
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def evaluate_polynomial(P, points):
    """P maps exponent tuples to coefficients; points has shape (k, n)."""
    values = np.zeros(len(points))
    for exponents, coef in P.items():
        values += float(coef) * np.prod(points ** np.array(exponents), axis=1)
    return values


def sublevel_mask(values, fraction):
    """Cells where |P| is at most its `fraction` quantile over the grid."""
    if not 0 < fraction <= 1:
        raise ValidationError(f"sublevel fraction must lie in (0, 1], got {fraction}")
    magnitudes = np.abs(values)
    threshold = np.quantile(magnitudes, fraction, method="higher")
    return magnitudes <= threshold


def remez_check(P, mask, n, d, resolution):
    """
    Grid falsification test of sup_I |P| < (4n/lambda)^d sup_Z |P| on I = [-1, 1]^n.

    Z is the union of grid cells selected by mask (a boolean array over
    remez_grid(n, resolution) or a callable on the cell centres), so lambda is exactly
    the selected fraction. Cell-centre maxima are widened by the Lipschitz slack
    (h/2) sum |c_a| |a| to bracket the true suprema.
    """
    points = remez_grid(n, resolution)
    if callable(mask):
        mask = np.asarray(mask(points), dtype=bool)
    if not mask.any():
        raise ValidationError("the set Z selects no grid cell")
    values = np.abs(evaluate_polynomial(P, points))
    measure = float(mask.mean())
    factor = (4.0 * n / measure) ** d
    slack = (1.0 / resolution) * sum(
        abs(float(c)) * sum(exponents) for exponents, c in P.items()
    )
    sup_cube = float(values.max())
    sup_set = float(values[mask].max())
    if sup_cube + slack < factor * sup_set:
        status = "holds"
    elif sup_cube > factor * (sup_set + slack):
        status = "counterexample"
        logger.warning("FINDING: Remez inequality fails on the grid (%s)", P)
    else:
        status = "inconclusive"
    return RemezResult(
        status=status,
        sup_cube=sup_cube,
        sup_set=sup_set,
        factor=factor,
        measure=measure,
        resolution=resolution,
    )


# ---------------------------------------------------------------------------
# Rational points
# ---------------------------------------------------------------------------


def floor_log(T, dps=None):
    """
    floor(log T) for rational T >= 1.

    log T is enclosed with a slack well above the evaluation error; the working
    precision doubles until the enclosure lies between two consecutive integers.
    """
    T = to_fraction(T)
    if T < 1:
        raise ValidationError(f"floor_log needs T >= 1, got {T}")
    if T == 1:
        return 0
    dps = resolve_dps(dps)
    for _ in range(FLOOR_LOG_ATTEMPTS):
        with mp.workdps(dps):
            x = mp.log(_mpq(T))
            slack = (abs(x) + 1) * mp.mpf(10) ** (-(dps - 10))
            low, high = mp.floor(x - slack), mp.floor(x + slack)
        if low == high:
            return int(low)
        logger.debug("  log T within %s of an integer at %d digits, retrying", slack, dps)
        dps *= 2
    raise PrecisionInsufficientError(
        f"cannot separate log T from an integer at {dps // 2} digits", T=T
    )


def rational_point_bound(Z_poly, K, Q_poly, T=None, log_T=None, margin=0, dps=None):
    """
    Z(L) K Q(L) with L = floor(log T), and the implied envelope beta log^alpha T.

    Z_poly and Q_poly are ascending coefficient lists; alpha = deg(Z Q) + margin and
    beta = K times the absolute coefficient sum of Z Q. Give T or log T directly.
    """
    K = _positive("K", K)
    dps = resolve_dps(dps)
    if log_T is None:
        if T is None:
            raise ValidationError("rational_point_bound needs T or log_T")
        T = to_fraction(T)
        if T < 3:
            raise ValidationError(f"height cap T must be at least 3, got {T}")
        L = floor_log(T, dps)
    else:
        log_exact = to_fraction(log_T)
        with mp.workdps(dps):
            if _mpq(log_exact) < mp.log(3):
                raise ValidationError("height cap T must be at least 3")
        L = log_exact.numerator // log_exact.denominator
    Z_poly = tuple(to_fraction(c) for c in Z_poly)
    Q_poly = tuple(to_fraction(c) for c in Q_poly)
    value = poly_eval(Z_poly, Fraction(L)) * K * poly_eval(Q_poly, Fraction(L))
    product = poly_mul(Z_poly, Q_poly)
    while len(product) > 1 and product[-1] == 0:
        product = product[:-1]
    alpha = len(product) - 1 + margin
    beta = K * sum(abs(c) for c in product)
    return _exact(
        "rational_point_bound",
        "rational points of height at most T on the graph",
        {
            "T": T,
            "log_T": log_T,
            "L": L,
            "Z_poly": list(Z_poly),
            "K": K,
            "Q_poly": list(Q_poly),
            "alpha": alpha,
            "beta": beta,
        },
        value,
    )
