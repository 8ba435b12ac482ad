"""
Arithmetic backends for the closed-form outage sums.

The sums are evaluated once in double precision; when the result is far below
the magnitude of its terms they are re-evaluated with an mpmath context.
"""
import logging
import math
from typing import Iterable

from mpmath.ctx_mp import MPContext
from scipy import special

from app.config import PRECISION_GUARD, PRECISION_MAX_DPS
from observability.metrics import record_escalation
from utils import specfun

logger = logging.getLogger(__name__)

FLOAT_EPS = 2.220446049250313e-16


class FloatBackend:
    name = "float"
    dps = None
    eps = FLOAT_EPS

    def num(self, x):
        return float(x)

    def exp(self, x):
        return math.exp(x)

    def log(self, x):
        return math.log(x)

    def sqrt(self, x):
        return math.sqrt(x)

    def fabs(self, x):
        return abs(x)

    def fsum(self, values: Iterable):
        return math.fsum(values)

    def factorial(self, n: int):
        return specfun.gamma_int(n + 1)

    def log_besselk(self, order: int, x):
        return specfun.log_bessel_k_int(order, x)

    def expint(self, order: int, x):
        return specfun.gen_exp_integral(order, x)

    def lower_gamma(self, a: int, x):
        return specfun.lower_incomplete_gamma(a, x)

    def regularized_lower_gamma(self, a: int, x):
        return float(special.gammainc(a, x))

    def to_float(self, x) -> float:
        return float(x)


class MpBackend:
    """mpmath backend with a private context, so callers never touch the global mp.dps."""
    name = "mpmath"

    def __init__(self, dps: int):
        if dps < 15:
            raise ValueError(f"dps must be >= 15, got {dps}")
        self.ctx = MPContext()
        self.ctx.dps = int(dps)
        self.dps = int(dps)
        self.eps = float(self.ctx.eps)

    def num(self, x):
        return self.ctx.mpf(x)

    def exp(self, x):
        return self.ctx.exp(x)

    def log(self, x):
        return self.ctx.log(x)

    def sqrt(self, x):
        return self.ctx.sqrt(x)

    def fabs(self, x):
        return self.ctx.fabs(x)

    def fsum(self, values: Iterable):
        return self.ctx.fsum(values)

    def factorial(self, n: int):
        return self.ctx.mpf(math.factorial(n))

    def log_besselk(self, order: int, x):
        return self.ctx.log(self.ctx.besselk(abs(order), x))

    def expint(self, order: int, x):
        return self.ctx.expint(order, x)

    def lower_gamma(self, a: int, x):
        return self.ctx.gammainc(a, 0, x)

    def regularized_lower_gamma(self, a: int, x):
        return self.ctx.gammainc(a, 0, x, regularized=True)

    def to_float(self, x) -> float:
        return float(x)


FLOAT = FloatBackend()


def needs_escalation(result: float, magnitude: float, eps: float = FLOAT_EPS) -> bool:
    """True when the rounding bound eps*magnitude is not small against |result|."""
    if magnitude == 0.0:
        return False
    return eps * magnitude > PRECISION_GUARD * abs(result)


def escalation_dps(result: float, magnitude: float) -> int:
    digits = math.log10(magnitude) - math.log10(max(abs(result), 1e-300))
    dps = 20 + max(0, math.ceil(digits))
    return min(dps, PRECISION_MAX_DPS)


def evaluate_with_escalation(evaluate, tag: str, dps=None):
    """Run ``evaluate(backend) -> (value, magnitude)`` with automatic mpmath escalation.

    Returns (value as float, dps used or None, limited). ``limited`` is True when
    the sum still cancels at PRECISION_MAX_DPS, so the value may carry no
    correct digits.
    """
    if dps is not None:
        backend = MpBackend(dps)
        value, magnitude = evaluate(backend)
        return float(value), int(dps), needs_escalation(float(value), float(magnitude), eps=backend.eps)
    value, magnitude = evaluate(FLOAT)
    if not needs_escalation(value, magnitude):
        return float(value), None, False

    record_escalation()
    work_dps = escalation_dps(value, magnitude)
    while True:
        backend = MpBackend(work_dps)
        value, magnitude = evaluate(backend)
        logger.debug(f"[{tag}] re-summed at dps={work_dps}: value={float(value):.6e} magnitude={float(magnitude):.3e}")
        if not needs_escalation(float(value), float(magnitude), eps=backend.eps):
            return float(value), work_dps, False
        if work_dps >= PRECISION_MAX_DPS:
            logger.warning(
                f"[PRECISION] [{tag}] cancellation persists at the dps cap {work_dps}: "
                f"value={float(value):.6e} magnitude={float(magnitude):.3e}"
            )
            return float(value), work_dps, True
        work_dps = min(PRECISION_MAX_DPS, work_dps + escalation_dps(float(value), float(magnitude)))
