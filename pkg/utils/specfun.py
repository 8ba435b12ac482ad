"""
Special-function kernel for the closed-form outage expressions.

Thin wrappers over scipy.special with domain checks. Every function returns a
finite float or raises; nothing overflows to infinity silently.
"""
import math

import mpmath
from scipy import special

from app.config import BESSEL_MAX_ORDER
from models.types import SpecialValue


def _check_int(name: str, n) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"{name} must be an integer, got {n!r}")
    return int(n)


def gamma_int(n: int) -> float:
    """Gamma(n) = (n-1)! for positive integer n."""
    n = _check_int("n", n)
    if n <= 0:
        raise ValueError(f"gamma_int requires n >= 1, got {n}")
    try:
        return float(math.factorial(n - 1))
    except OverflowError:
        raise OverflowError(f"Gamma({n}) exceeds double precision") from None


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Unregularized upper incomplete gamma Gamma(a, x)."""
    if a <= 0:
        raise ValueError(f"upper_incomplete_gamma requires a > 0, got {a}")
    if x < 0:
        raise ValueError(f"upper_incomplete_gamma requires x >= 0, got {x}")
    full = special.gamma(a)
    if not math.isfinite(full):
        raise OverflowError(f"Gamma({a}) exceeds double precision")
    if x == 0:
        return float(full)
    return float(full * special.gammaincc(a, x))


def lower_incomplete_gamma(a: float, x: float) -> float:
    """Unregularized lower incomplete gamma, computed without the Gamma(a) - Gamma(a, x) cancellation."""
    if a <= 0:
        raise ValueError(f"lower_incomplete_gamma requires a > 0, got {a}")
    if x < 0:
        raise ValueError(f"lower_incomplete_gamma requires x >= 0, got {x}")
    full = special.gamma(a)
    if not math.isfinite(full):
        raise OverflowError(f"Gamma({a}) exceeds double precision")
    return float(full * special.gammainc(a, x))


def regularized_lower_gamma_int(a: int, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a) for integer a."""
    a = _check_int("a", a)
    if a <= 0:
        raise ValueError(f"regularized_lower_gamma_int requires a >= 1, got {a}")
    if x < 0:
        raise ValueError(f"regularized_lower_gamma_int requires x >= 0, got {x}")
    return float(special.gammainc(a, x))


def digamma_int(n: int) -> float:
    n = _check_int("n", n)
    if n <= 0:
        raise ValueError(f"digamma_int requires n >= 1, got {n}")
    return float(special.digamma(n))


def _check_bessel(order: int, x: float) -> int:
    order = abs(_check_int("order", order))
    if x <= 0:
        raise ValueError(f"Bessel K requires x > 0, got {x}")
    if order > BESSEL_MAX_ORDER:
        raise ValueError(f"Bessel order {order} exceeds BESSEL_MAX_ORDER={BESSEL_MAX_ORDER}")
    return order


def bessel_k_int(order: int, x: float) -> float:
    """K_n(x) for integer n; K_{-n} = K_n."""
    order = _check_bessel(order, x)
    value = float(special.kv(order, x))
    if not math.isfinite(value):
        raise OverflowError(f"K_{order}({x}) exceeds double precision; use log_bessel_k_int")
    return value


def log_bessel_k_int(order: int, x: float) -> float:
    """ln K_n(x), finite wherever K_n(x) itself overflows or underflows."""
    order = _check_bessel(order, x)
    scaled = float(special.kve(order, x))
    if math.isfinite(scaled) and scaled > 0:
        return math.log(scaled) - x
    if order == 0:
        # kve(0, x) is finite for every x > 0
        raise OverflowError(f"log K_0({x}) is not representable")
    # small-argument leading term 0.5*Gamma(n)*(x/2)**-n
    return math.lgamma(order) - math.log(2.0) - order * math.log(x / 2.0)


def gen_exp_integral(order: int, x: float) -> float:
    """Generalized exponential integral E_n(x) for any integer n.

    For n = -m <= 0 this is Gamma(m+1, x) / x**(m+1), summed as a finite series.
    """
    order = _check_int("order", order)
    if x <= 0:
        raise ValueError(f"gen_exp_integral requires x > 0, got {x}")
    if order >= 1:
        value = float(special.expn(order, x))
    else:
        m = -order
        # m! e^{-x} sum_{q<=m} x^{q-m-1} / q!
        terms = []
        coeff = 1.0  # m!/q! built downward from q = m
        for q in range(m, -1, -1):
            terms.append(coeff * x ** (q - m - 1))
            coeff *= q
        value = math.exp(-x) * math.fsum(terms)
    if not math.isfinite(value):
        raise OverflowError(f"E_{order}({x}) exceeds double precision")
    return value


_REFERENCE_DPS = 40


def with_error_bound(name: str, *args) -> SpecialValue:
    """Evaluate a kernel function and bound its error against a 40-digit mpmath value."""
    kernels = {
        "gamma_int": gamma_int,
        "upper_incomplete_gamma": upper_incomplete_gamma,
        "digamma_int": digamma_int,
        "bessel_k_int": bessel_k_int,
        "gen_exp_integral": gen_exp_integral,
    }
    if name not in kernels:
        raise ValueError(f"unknown special function '{name}'")
    value = kernels[name](*args)
    with mpmath.workdps(_REFERENCE_DPS):
        if name == "gamma_int":
            ref = mpmath.gamma(args[0])
        elif name == "upper_incomplete_gamma":
            ref = mpmath.gammainc(mpmath.mpf(args[0]), mpmath.mpf(args[1]))
        elif name == "digamma_int":
            ref = mpmath.digamma(args[0])
        elif name == "bessel_k_int":
            ref = mpmath.besselk(abs(int(args[0])), mpmath.mpf(args[1]))
        else:
            ref = mpmath.expint(int(args[0]), mpmath.mpf(args[1]))
        diff = abs(mpmath.mpf(value) - ref)
    bound = float(diff) + 2.0 * math.ulp(abs(value))
    return SpecialValue(value=value, error_bound=bound)
