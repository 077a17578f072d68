"""Special functions behind the t and F tail probabilities."""

import math

from .exceptions import ConvergenceError, SpecialFunctionDomainError

# Lanczos approximation, g = 7, nine coefficients.
_LANCZOS_G = 7.0
_LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_CF_TOLERANCE = 1e-15
_CF_MAX_ITERATIONS = 10000
_TINY = 1e-300


def log_gamma(x: float) -> float:
    """Natural logarithm of the gamma function for x > 0.

    Raises:
        SpecialFunctionDomainError: If ``x`` is not a positive finite number.
    """
    if not (math.isfinite(x) and x > 0):
        raise SpecialFunctionDomainError(f"log_gamma needs x > 0, got {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    x -= 1.0
    series = _LANCZOS_COEFFICIENTS[0]
    for i, coefficient in enumerate(_LANCZOS_COEFFICIENTS[1:], start=1):
        series += coefficient / (x + i)
    t = x + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (x + 0.5) * math.log(t) - t + math.log(series)


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation.
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOLERANCE:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Args:
        a: First shape parameter, > 0.
        b: Second shape parameter, > 0.
        x: Upper integration limit in [0, 1].

    Returns:
        I_x(a, b) in [0, 1].

    Raises:
        SpecialFunctionDomainError: On parameters outside the domain.
        ConvergenceError: If the continued fraction does not converge.
    """
    if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
        raise SpecialFunctionDomainError(f"incomplete beta needs a, b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise SpecialFunctionDomainError(f"incomplete beta needs x in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (log_gamma(a + b) - log_gamma(a) - log_gamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        value = front * _beta_continued_fraction(a, b, x) / a
    else:
        value = 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b
    return min(1.0, max(0.0, value))


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) for T ~ t(df)."""
    if not df > 0:
        raise SpecialFunctionDomainError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def f_survival(f: float, d1: float, d2: float) -> float:
    """Upper tail probability P(F >= f) for F ~ F(d1, d2)."""
    if not (d1 > 0 and d2 > 0):
        raise SpecialFunctionDomainError(f"F degrees of freedom must be positive, got {d1}, {d2}")
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
