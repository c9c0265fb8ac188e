"""Special functions used by the analytic BER engine.

Everything here works on Python floats. The Monte Carlo side uses the
vectorized scipy equivalents, which keeps the two routes independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import ConvergenceError

_SQRT_PI = math.sqrt(math.pi)
_EULER_GAMMA = 0.57721566490153286061
_TINY = 1e-300


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for ascending series."""

    rel_tol: float = 1e-10
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_CONTROL = SeriesControl()


def _erf_series(x: float) -> float:
    # Maclaurin series; used only for |x| < 2 where cancellation is mild.
    x2 = x * x
    term = x
    total = x
    n = 0
    while True:
        n += 1
        term *= -x2 / n
        contrib = term / (2 * n + 1)
        total += contrib
        if abs(contrib) <= 1e-17 * abs(total):
            break
    return 2.0 / _SQRT_PI * total


def _erfc_cf(x: float) -> float:
    # Lentz evaluation of erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...)))).
    f = x
    c = x
    d = 0.0
    k = 1
    while k < 2000:
        a = 0.5 * k
        d = x + a * d
        d = _TINY if d == 0.0 else d
        c = x + a / c
        c = _TINY if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
        k += 1
    return math.exp(-x * x) / (_SQRT_PI * f)


def erfc(x: float) -> float:
    """Complementary error function.

    Uses the Maclaurin series of erf for |x| < 2 and a continued fraction
    beyond. Underflows cleanly to 0.0 for large positive x.
    """
    x = float(x)
    if math.isnan(x):
        return math.nan
    if x < 0.0:
        return 2.0 - erfc(-x)
    if x < 2.0:
        return 1.0 - _erf_series(x)
    if x > 27.3:
        return 0.0
    return _erfc_cf(x)


def lgamma(x: float) -> float:
    return math.lgamma(x)


def gamma_ratio(a: float, b: float) -> float:
    """Gamma(a) / Gamma(b) for positive a, b without overflow."""
    return math.exp(math.lgamma(a) - math.lgamma(b))


def _lower_gamma_series(a: float, x: float) -> float:
    # gamma(a, x) = x^a e^-x sum x^n / (a (a+1) ... (a+n)), a > 0
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    else:
        raise ConvergenceError(f"lower incomplete gamma series failed at a={a}, x={x}")
    return total * math.exp(-x + a * math.log(x))


def _upper_gamma_cf(a: float, x: float) -> float:
    # Modified Lentz on the Legendre continued fraction, good for x > a + 1.
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = _TINY if abs(d) < _TINY else d
        c = b + an / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise ConvergenceError(f"upper incomplete gamma continued fraction failed at a={a}, x={x}")
    return math.exp(-x + a * math.log(x)) * h


def _exp1(x: float) -> float:
    """Exponential integral E1(x) = Gamma(0, x) for x > 0."""
    if x <= 1.0:
        total = 0.0
        term = 1.0
        for k in range(1, 200):
            term *= -x / k
            contrib = term / k
            total += contrib
            if abs(contrib) < 1e-17:
                break
        return -_EULER_GAMMA - math.log(x) - total
    return _upper_gamma_cf(0.0, x)


def _upper_gamma_positive(a: float, x: float) -> float:
    if x == 0.0:
        return math.gamma(a)
    if x < a + 1.0:
        return math.gamma(a) - _lower_gamma_series(a, x)
    return _upper_gamma_cf(a, x)


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Upper incomplete gamma function Gamma(a, x) = int_x^inf t^(a-1) e^-t dt.

    Negative ``a`` is reached by the downward recurrence
    ``Gamma(a, x) = (Gamma(a+1, x) - x^a e^-x) / a`` from a seed with
    ``a + k > 0`` (or from E1 when ``a`` is a non-positive integer).

    Raises:
        ValueError: if ``x < 0``, or ``x == 0`` with ``a <= 0``.
    """
    a = float(a)
    x = float(x)
    if x < 0.0 or (x == 0.0 and a <= 0.0):
        raise ValueError(f"upper_incomplete_gamma needs x > 0 for a <= 0 (a={a}, x={x})")
    if a > 0.0:
        return _upper_gamma_positive(a, x)
    if x >= 1.0:
        # the continued fraction is valid for any a and avoids recurrence cancellation
        return _upper_gamma_cf(a, x)

    steps = int(math.floor(-a)) + 1
    seed_a = a + steps
    if seed_a == 1.0 and a == math.floor(a):
        # non-positive integer a: start from Gamma(0, x) = E1(x)
        value = _exp1(x)
        seed_a = 0.0
        steps -= 1
    else:
        value = _upper_gamma_positive(seed_a, x)
    log_x = math.log(x)
    cur = seed_a
    for _ in range(steps):
        cur -= 1.0
        value = (value - math.exp(cur * log_x - x)) / cur
    return value


def hyp1f1(a: float, b: float, x: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Confluent hypergeometric function 1F1(a; b; x) by its ascending series.

    A non-positive integer ``a`` gives a polynomial of degree ``-a``; the sum
    then stops after exactly ``1 - a`` terms. Summation is Kahan-compensated.
    """
    if b <= 0 and b == math.floor(b):
        raise ValueError(f"1F1 undefined for non-positive integer b={b}")
    poly_degree = int(-a) if a <= 0 and a == math.floor(a) else None

    total = 1.0
    comp = 0.0
    term = 1.0
    for n in range(ctrl.max_terms):
        if poly_degree is not None and n >= poly_degree:
            return total
        if n == ctrl.max_terms - 1:
            break
        term *= (a + n) / (b + n) * x / (n + 1)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if poly_degree is None and abs(term) <= ctrl.rel_tol * abs(total) and n > abs(x):
            return total
    raise ConvergenceError(
        f"1F1({a}; {b}; {x}) did not converge within {ctrl.max_terms} terms"
    )


def hyp1f1_terms(a: float) -> int | None:
    """Number of non-zero terms of 1F1(a; b; x), or None when the series is infinite."""
    if a <= 0 and a == math.floor(a):
        return int(-a) + 1
    return None


def g_m_kernel(s: float, m: float, c: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Kernel of the averaging identity for g(t) = erfc(sqrt(c t)) / 2 under Nakagami-m fading.

    Returns ``-(sqrt(c)/pi) * Gamma(m+1/2)/Gamma(m) * exp(-c s)/sqrt(s) * 1F1(1-m; 3/2; c s)``.
    """
    if s <= 0:
        raise ValueError(f"g_m_kernel requires s > 0, got {s}")
    prefactor = math.sqrt(c) / math.pi * gamma_ratio(m + 0.5, m)
    return -prefactor * math.exp(-c * s) / math.sqrt(s) * hyp1f1(1.0 - m, 1.5, c * s, ctrl)
