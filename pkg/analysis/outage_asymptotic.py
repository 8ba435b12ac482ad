"""
High-SNR behaviour of the user outage probability.

With x = threshold/snr every factor of the exact sum is expanded in powers of x
(the Bessel factor also carries ln x terms). All orders below the diversity
order theta = min(N1, N2) cancel, and the coefficient of x**theta is the
asymptotic constant c(snr) = a + b*ln x. The relay gain constant enters only
through rho = N1*Omega1 + N2*Omega2, i.e. C/snr at infinite SNR.
"""
import logging
import math
from math import comb, factorial, perm
from typing import List, Tuple

import numpy as np

from analysis.outage_exact import NEGLIGIBLE_WEIGHT, ordered_expansions
from analysis.scenario import gain_constant
from analysis.spectral import leading_order
from models.types import AsymptoticExpansion, Scenario
from observability.metrics import record_closed_form
from utils.specfun import digamma_int

logger = logging.getLogger(__name__)

RESIDUAL_WARNING = 1e-6


def bessel_series(l: int, t: int, k: int, kappa: float, max_order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Coefficients (a_p, b_p) with 2 w**(k-l+t) K_(l+t-k)(2w) = sum_p (a_p + b_p ln x) x**p, w**2 = kappa*x."""
    a = np.zeros(max_order + 1)
    b = np.zeros(max_order + 1)
    lk = math.log(kappa)
    nu = l + t - k
    n = abs(nu)
    if nu > 0:
        finite_start, log_start = k - l, t
    else:
        finite_start, log_start = t, k - l
    for m in range(n):
        p = finite_start + m
        if p <= max_order:
            a[p] += (-1) ** m * factorial(n - m - 1) / factorial(m) * kappa ** p
    sign = -1.0 if n == 0 else (-1.0) ** (n + 1)
    for m in range(max_order + 1):
        p = log_start + m
        if p > max_order:
            break
        c = sign * kappa ** p / (factorial(m) * factorial(n + m))
        a[p] += c * (lk - digamma_int(m + 1) - digamma_int(n + m + 1))
        b[p] += c
    return a, b


def phi_term(l: int, t: int, k: int, rho: float, chi1: float, chi2: float,
             threshold: float, snr: float, order: int) -> float:
    """Coefficient of x**order of the Bessel factor, with ln x evaluated at threshold/snr."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    a, b = bessel_series(l, t, k, rho / (chi1 * chi2), order)
    return float(a[order] + b[order] * math.log(threshold / snr))


def _interference_series(l: int, chi_a: float, beta, inr, order: int) -> np.ndarray:
    # S_l(x) = sum_s l!/(l-s)! sum_ell beta * inr**(s+1) * (1 + x*inr/chi_a)**(-s-1)
    series = np.zeros(order + 1)
    if not inr:
        series[0] = 1.0
        return series
    for q in range(order + 1):
        terms = []
        for s in range(l + 1):
            for bl, level in zip(beta, inr):
                terms.append(perm(l, s) * bl * level ** (s + 1) * (-1) ** q * comb(s + q, q) * (level / chi_a) ** q)
        series[q] = math.fsum(terms)
    return series


def _general_coefficients(exp_a, exp_b, rho, profile, order):
    values: List[List[float]] = [[1.0]] + [[] for _ in range(order)]
    logs: List[List[float]] = [[] for _ in range(order + 1)]
    powers = np.arange(order + 1)
    for i, j, chi_a, wa in exp_a.components():
        decay = (-1.0 / chi_a) ** powers / np.array([factorial(q) for q in powers], dtype=float)
        for r, t, chi_b, wb in exp_b.components():
            if abs(wa * wb) < NEGLIGIBLE_WEIGHT:
                continue
            kappa = rho / (chi_a * chi_b)
            for k in range(j):
                for l in range(k + 1):
                    if l > order:
                        continue
                    scale = wa * wb * comb(k, l) / (factorial(k) * factorial(t - 1) * chi_a ** l)
                    plain = np.convolve(decay, _interference_series(l, chi_a, profile.beta, profile.inr, order))
                    shifted = np.zeros(order + 1)
                    shifted[l:] = plain[: order + 1 - l]
                    ba, bb = bessel_series(l, t, k, kappa, order)
                    prod_a = np.convolve(shifted, ba)[: order + 1]
                    prod_b = np.convolve(shifted, bb)[: order + 1]
                    for p in range(order + 1):
                        values[p].append(-scale * prod_a[p])
                        logs[p].append(-scale * prod_b[p])
    return values, logs


def _exponential_coefficients(exp_a, exp_b, rho, profile, order):
    """Coefficients for distinct eigenvalues, where only the K_1 factor appears."""
    values: List[List[float]] = [[] for _ in range(order + 1)]
    logs: List[List[float]] = [[] for _ in range(order + 1)]
    values[0].append(1.0)
    psi = [digamma_int(m) for m in range(1, order + 2)]
    for chi_a, row_a in zip(exp_a.chi, exp_a.theta):
        wa = row_a[0]
        # e^{-x/chi_a} * S_0(x)
        head = []
        for q in range(order + 1):
            if profile.inr:
                inner = [
                    (-1.0 / chi_a) ** u / factorial(u)
                    * math.fsum(bl * level * (-level / chi_a) ** (q - u) for bl, level in zip(profile.beta, profile.inr))
                    for u in range(q + 1)
                ]
            else:
                inner = [(-1.0 / chi_a) ** q / factorial(q)]
            head.append(math.fsum(inner))
        for chi_b, row_b in zip(exp_b.chi, exp_b.theta):
            kappa = rho / (chi_a * chi_b)
            lk = math.log(kappa)
            # 2wK_1(2w) = 1 + sum_m (kx)^(m+1)/(m!(m+1)!) [ln k + ln x - psi(m+1) - psi(m+2)]
            bessel_a = [1.0] + [kappa ** p / (factorial(p - 1) * factorial(p)) * (lk - psi[p - 1] - psi[p]) for p in range(1, order + 1)]
            bessel_b = [0.0] + [kappa ** p / (factorial(p - 1) * factorial(p)) for p in range(1, order + 1)]
            for p in range(order + 1):
                for q in range(p + 1):
                    values[p].append(-wa * row_b[0] * head[p - q] * bessel_a[q])
                    logs[p].append(-wa * row_b[0] * head[p - q] * bessel_b[q])
    return values, logs


def diversity_order(scenario: Scenario, user: int = 2) -> int:
    exp_a, exp_b = ordered_expansions(scenario, user)
    return min(leading_order(exp_a), leading_order(exp_b))


def asymptotic_outage(scenario: Scenario, user: int = 2, path: str = "auto") -> AsymptoticExpansion:
    """Leading high-SNR term of the user outage probability.

    ``path`` selects the coefficient route: "general" works for any spectrum,
    "exponential" needs distinct eigenvalues on both nodes, "auto" picks the
    exponential route whenever both nodes allow it.
    """
    if user not in (1, 2):
        raise ValueError(f"user must be 1 or 2, got {user}")
    if scenario.inr_ratios:
        raise ValueError(
            "interference that scales with the SNR leaves no outage floor-free regime; "
            "asymptotics need fixed INRs"
        )
    if scenario.threshold <= 0:
        raise ValueError(f"asymptotics require a positive threshold, got {scenario.threshold}")
    exp_a, exp_b = ordered_expansions(scenario, user)
    theta = diversity_order(scenario, user)
    rho = gain_constant(scenario).rho_asym
    profile = scenario.interference

    simple = exp_a.all_simple and exp_b.all_simple
    if path == "auto":
        path = "exponential" if simple else "general"
    if path == "exponential":
        if not simple:
            raise ValueError("the exponential route needs distinct eigenvalues on both nodes")
        values, logs = _exponential_coefficients(exp_a, exp_b, rho, profile, theta)
    elif path == "general":
        values, logs = _general_coefficients(exp_a, exp_b, rho, profile, theta)
    else:
        raise ValueError(f"unknown asymptotic path '{path}'")

    residuals = []
    for p in range(theta):
        magnitude = max(math.fsum(abs(v) for v in values[p]), math.fsum(abs(v) for v in logs[p]), 1e-300)
        residual = max(abs(math.fsum(values[p])), abs(math.fsum(logs[p])))
        residuals.append(residual)
        if residual > RESIDUAL_WARNING * magnitude:
            logger.warning(f"[ASYM] order {p} residual {residual:.3e} does not cancel (magnitude {magnitude:.3e})")

    a = math.fsum(values[theta])
    b = math.fsum(logs[theta])
    record_closed_form("asymptotic")
    logger.debug(f"[ASYM] user={user} path={path} theta={theta} a={a:.6e} b={b:.6e}")
    return AsymptoticExpansion(
        theta=theta,
        a=a,
        b=b,
        threshold=scenario.threshold,
        residuals=tuple(residuals),
        path=path,
    )


def array_gain(expansion: AsymptoticExpansion, snr: float) -> float:
    """Horizontal offset of the asymptote, c(snr)**(-1/theta)."""
    c = expansion.coefficient(snr)
    if c <= 0:
        raise ValueError(f"asymptotic coefficient must be positive, got {c:.6e}")
    return c ** (-1.0 / expansion.theta)
