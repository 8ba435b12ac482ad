"""
System outage of the two-way relay without co-channel interference.

The system is in outage when either user is. Without interference user 1 sees
gamma1*gamma2/(gamma1 + C) and user 2 sees gamma1*gamma2/(gamma2 + C), so the
weaker user is the one whose own link is stronger and

    P_sys = I1 + I2,  I1 = P(gamma2 < min(gamma1, threshold + threshold*C/gamma1))

with I2 the same expression with the nodes exchanged. The crossover of the two
bounds is the positive root epsilon of g**2 - threshold*g - threshold*C.
"""
import logging
import math
from math import comb
from typing import Iterator, List, Tuple

from scipy import integrate

from analysis.outage_exact import backend_weights, clip_probability, user_outage_no_cci, weight_pairs
from analysis.scenario import gain_constant, node_expansions
from analysis.spectral import gain_cdf, gain_pdf
from app.config import SERIES_MAX_TERMS, SERIES_TOLERANCE
from models.types import OutageResult, Scenario, SeriesControl, SeriesReport
from observability.metrics import record_closed_form, record_reroute
from utils.errors import SeriesDivergenceError
from utils.precision import FLOAT, evaluate_with_escalation

logger = logging.getLogger(__name__)

# Consecutive growing terms tolerated before the series is declared unusable
GROWTH_LIMIT = 10


def default_series_control() -> SeriesControl:
    return SeriesControl(max_terms=SERIES_MAX_TERMS, tolerance=SERIES_TOLERANCE)


def epsilon_root(threshold: float, gain: float) -> float:
    """Positive root of g**2 - threshold*g - threshold*gain."""
    if threshold <= 0 or gain <= 0:
        raise ValueError(f"epsilon_root requires positive threshold and gain, got {threshold}, {gain}")
    return 0.5 * threshold + math.sqrt(0.25 * threshold * threshold + threshold * gain)


def _check_system(scenario: Scenario) -> None:
    if scenario.interference.count:
        raise ValueError("system outage is defined for the interference-free relay only (L = 0)")
    if scenario.threshold <= 0:
        raise ValueError(f"system outage requires a positive threshold, got {scenario.threshold}")


def _blocks(exp_a, exp_b, snr, threshold, gain, backend) -> Iterator[Tuple[str, object, int, object, object]]:
    """Yield ("series", coef, n0, z, y) for the s-series pieces and ("closed", value, 0, None, None) otherwise.

    The series piece is coef * sum_s (-y)**s / s! * E_(n0+s)(z).
    """
    num = backend.num
    th, g, c = num(threshold), num(snr), num(gain)
    eps = (th + backend.sqrt(th * th + 4 * th * c)) / 2
    theta_a, theta_b = backend_weights(exp_a, backend), backend_weights(exp_b, backend)
    for i, chi_a in enumerate(exp_a.chi):
        a = g * num(chi_a)
        z = eps / a
        for r, chi_b in enumerate(exp_b.chi):
            b = g * num(chi_b)
            y = th * c / (b * eps)
            decay = backend.exp(-th / b)
            for j, wa, t, wb in weight_pairs(theta_a[i], theta_b[r]):
                for k in range(t):
                    pref = wa * wb / (backend.factorial(j - 1) * backend.factorial(k))
                    # gamma1 above epsilon: expand exp(-threshold*C/(b*g)) in powers of 1/g
                    head = pref * z ** j * (th / b) ** k * decay
                    for l in range(k + 1):
                        coef = head * comb(k, l) * (c / eps) ** (k - l)
                        yield "series", coef, k - j - l + 1, z, y
                    # gamma1 below epsilon: both gains capped by epsilon
                    share_a, share_b = b / (a + b), a / (a + b)
                    value = pref * share_a ** j * share_b ** k * backend.lower_gamma(j + k, eps / a + eps / b)
                    yield "closed", value, 0, None, None


def _inner_series(n0: int, z, y, tolerance, limit: int, backend) -> List:
    terms = []
    partial = 0
    previous = None
    streak = 0
    weight = backend.num(1)
    for s in range(limit):
        term = weight * backend.expint(n0 + s, z)
        terms.append(term)
        partial += term
        magnitude = backend.fabs(term)
        if previous is not None:
            if magnitude > previous:
                streak += 1
                if streak > GROWTH_LIMIT:
                    raise SeriesDivergenceError(
                        f"series terms grew for {streak} consecutive orders (y={float(y):.3g})", terms_used=s + 1
                    )
            else:
                streak = 0
                if magnitude <= tolerance * backend.fabs(partial):
                    return terms
        previous = magnitude
        weight = weight * (-y) / (s + 1)
    if streak:
        raise SeriesDivergenceError(
            f"series terms still growing after {limit} terms (y={float(y):.3g})", terms_used=limit
        )
    logger.debug(f"[SYSTEM] series truncated at {limit} terms, last |term|={float(previous):.3e}")
    return terms


def _half_sum(exp_a, exp_b, snr, threshold, gain, control: SeriesControl, backend):
    # max_terms is a truncation choice; extended precision only tightens the stopping rule
    tolerance = control.tolerance if backend is FLOAT else min(control.tolerance, 10.0 ** (5 - backend.dps))
    limit = control.max_terms
    terms = []
    for kind, coef, n0, z, y in _blocks(exp_a, exp_b, snr, threshold, gain, backend):
        if kind == "closed":
            terms.append(coef)
            continue
        terms.extend(coef * v for v in _inner_series(n0, z, y, tolerance, limit, backend))
    total = backend.fsum(terms)
    return 1 - total, backend.fsum(backend.fabs(v) for v in terms) + 1


def _evaluate_halves(scenario: Scenario, control: SeriesControl, dps, gain):
    c = gain if gain is not None else gain_constant(scenario, include_interference=False).value
    exp1, exp2 = node_expansions(scenario)
    halves = []
    used = []
    limited = False
    for exp_a, exp_b in ((exp1, exp2), (exp2, exp1)):
        value, half_dps, half_limited = evaluate_with_escalation(
            lambda backend: _half_sum(exp_a, exp_b, scenario.snr, scenario.threshold, c, control, backend),
            "SYSTEM",
            dps,
        )
        halves.append(clip_probability(value, "SYSTEM"))
        if half_dps:
            used.append(half_dps)
        limited = limited or half_limited
    return halves[0], halves[1], max(used) if used else None, limited


def system_outage_halves(scenario: Scenario, series: SeriesControl = None, dps=None, gain=None) -> Tuple[float, float]:
    """(I1, I2) with P_sys = I1 + I2; I2 is I1 with the nodes exchanged."""
    _check_system(scenario)
    i1, i2, _, _ = _evaluate_halves(scenario, series or default_series_control(), dps, gain)
    return i1, i2


def system_outage_exact(scenario: Scenario, series: SeriesControl = None, dps=None, gain=None) -> OutageResult:
    """Series closed form of P_sys; raises SeriesDivergenceError when the inner series will not converge."""
    _check_system(scenario)
    i1, i2, used, limited = _evaluate_halves(scenario, series or default_series_control(), dps, gain)
    record_closed_form("system-exact")
    logger.debug(f"[SYSTEM] snr={scenario.snr:.6g} I1={i1:.6e} I2={i2:.6e}")
    return OutageResult(
        p=clip_probability(i1 + i2, "SYSTEM"),
        method="system-exact",
        dps=used,
        precision_limited=limited,
    )


def _half_quadrature(exp_a, exp_b, snr, threshold, gain) -> float:
    eps = epsilon_root(threshold, gain)
    scale = snr * max(exp_a.chi)

    def below(v):
        g = eps * v
        return eps * gain_pdf(exp_a, snr, g) * gain_cdf(exp_b, snr, g)

    def above(u):
        g = eps + scale * u
        return scale * gain_pdf(exp_a, snr, g) * gain_cdf(exp_b, snr, threshold + threshold * gain / g)

    head, _ = integrate.quad(below, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)
    tail, _ = integrate.quad(above, 0.0, math.inf, epsabs=0.0, epsrel=1e-10, limit=200)
    return head + tail


def system_outage_quadrature(scenario: Scenario, gain=None) -> OutageResult:
    """P_sys by adaptive quadrature over gamma1 (and gamma2), split at epsilon."""
    _check_system(scenario)
    c = gain if gain is not None else gain_constant(scenario, include_interference=False).value
    exp1, exp2 = node_expansions(scenario)
    p = _half_quadrature(exp1, exp2, scenario.snr, scenario.threshold, c)
    p += _half_quadrature(exp2, exp1, scenario.snr, scenario.threshold, c)
    record_closed_form("system-exact-quadrature")
    return OutageResult(p=clip_probability(p, "SYSTEM"), method="system-exact-quadrature")


def system_outage(scenario: Scenario, series: SeriesControl = None, dps=None, gain=None) -> OutageResult:
    """Series closed form, rerouted to quadrature when the series diverges."""
    try:
        return system_outage_exact(scenario, series=series, dps=dps, gain=gain)
    except SeriesDivergenceError as e:
        logger.warning(f"[SYSTEM] {e}; rerouting snr={scenario.snr:.6g} to quadrature")
        record_reroute()
        return system_outage_quadrature(scenario, gain=gain)


def series_convergence_report(scenario: Scenario, max_terms: int = None) -> SeriesReport:
    """Signed contribution of each s to I1's inner series, summed over all other indices."""
    _check_system(scenario)
    limit = max_terms or SERIES_MAX_TERMS
    if limit < 1:
        raise ValueError(f"max_terms must be >= 1, got {limit}")
    c = gain_constant(scenario, include_interference=False).value
    exp1, exp2 = node_expansions(scenario)
    per_order = [[] for _ in range(limit)]
    for kind, coef, n0, z, y in _blocks(exp1, exp2, scenario.snr, scenario.threshold, c, FLOAT):
        if kind == "closed":
            continue
        weight = 1.0
        for s in range(limit):
            per_order[s].append(coef * weight * FLOAT.expint(n0 + s, z))
            weight *= -y / (s + 1)
    return SeriesReport(terms=tuple(math.fsum(values) for values in per_order))


def union_bounds(scenario: Scenario) -> Tuple[float, float]:
    """(max(P1, P2), min(1, P1 + P2)) from the interference-free user outages."""
    p1 = user_outage_no_cci(scenario, user=1).p
    p2 = user_outage_no_cci(scenario, user=2).p
    return max(p1, p2), min(1.0, p1 + p2)
