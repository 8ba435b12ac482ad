"""
Closed-form user outage probability of two-way fixed-gain AF relaying.

User 2 decodes S1 through the relay and is in outage when
gamma1*gamma2 / (gamma2*(gamma3 + 1) + C) < threshold. Conditioning on gamma2
and the interference power gamma3 gives

    P = 1 - sum theta1_ij theta2_rt C(k,l) / (k! (t-1)!) * x^l e^{-x}
            * 2 w^(k-l+t) K_(l+t-k)(2w) * S_l(x)

with x = threshold/(snr*chi1_i), w**2 = threshold*C/(snr**2 chi1_i chi2_r) and
S_l the interference average (S_l = 1 without interference). User 1 swaps the
roles of the two nodes. At high SNR the sum nearly cancels the leading 1, so
every evaluator runs through utils.precision.evaluate_with_escalation.
"""
import logging
from math import comb, perm

from analysis.scenario import beta_coefficients, gain_constant, node_expansions
from analysis.spectral import theta_table
from models.types import OutageResult, Scenario
from observability.metrics import record_closed_form
from utils.precision import FLOAT, evaluate_with_escalation

logger = logging.getLogger(__name__)

NEGLIGIBLE_WEIGHT = 1e-300


def _check_user(user: int) -> None:
    if user not in (1, 2):
        raise ValueError(f"user must be 1 or 2, got {user}")


def _check_threshold(scenario: Scenario) -> None:
    if scenario.threshold <= 0:
        raise ValueError(f"closed forms require a positive threshold, got {scenario.threshold}")


def ordered_expansions(scenario: Scenario, user: int):
    """(expansion inside the CDF, expansion averaged over) for the given user."""
    exp1, exp2 = node_expansions(scenario)
    return (exp1, exp2) if user == 2 else (exp2, exp1)


def clip_probability(p: float, tag: str) -> float:
    if p < -1e-9 or p > 1.0 + 1e-9:
        logger.warning(f"[{tag}] probability {p:.6e} outside [0, 1] beyond rounding")
    return min(1.0, max(0.0, p))


def backend_weights(expansion, backend):
    if backend is FLOAT:
        return expansion.theta
    return theta_table(expansion.chi, expansion.multiplicity, backend)


def weight_pairs(row_a, row_b):
    """Yield (j, theta_a_j, t, theta_b_t), skipping pairs whose weight product is negligible."""
    for j, wa in enumerate(row_a, start=1):
        for t, wb in enumerate(row_b, start=1):
            if abs(wa * wb) < NEGLIGIBLE_WEIGHT:
                continue
            yield j, wa, t, wb


def _bessel_factor(mu: int, nu: int, log_w, two_w, backend):
    """2 * w**mu * K_nu(2w), assembled in logs."""
    return 2 * backend.exp(mu * log_w + backend.log_besselk(nu, two_w))


def _interference_factor(x, l: int, beta, inr, backend):
    if not inr:
        return backend.num(1)
    terms = []
    for s in range(l + 1):
        falling = perm(l, s)
        for b, level in zip(beta, inr):
            terms.append(falling * b * (x + 1 / level) ** (-s - 1))
    return backend.fsum(terms)


def _general_sum(exp_a, exp_b, snr, threshold, gain, inrs, backend):
    num = backend.num
    th, g, c = num(threshold), num(snr), num(gain)
    theta_a, theta_b = backend_weights(exp_a, backend), backend_weights(exp_b, backend)
    inr = [num(v) for v in inrs]
    beta = beta_coefficients(inrs, backend) if inrs else ()
    max_l = max(exp_a.multiplicity) - 1
    terms = []
    for i, chi_a in enumerate(exp_a.chi):
        ca = num(chi_a)
        x = th / (g * ca)
        decay = backend.exp(-x)
        factors = [_interference_factor(x, l, beta, inr, backend) for l in range(max_l + 1)]
        for r, chi_b in enumerate(exp_b.chi):
            w = backend.sqrt(th * c / (g * g * ca * num(chi_b)))
            log_w, two_w = backend.log(w), 2 * w
            for j, wa, t, wb in weight_pairs(theta_a[i], theta_b[r]):
                for k in range(j):
                    for l in range(k + 1):
                        coef = num(comb(k, l)) / (backend.factorial(k) * backend.factorial(t - 1))
                        bessel = _bessel_factor(k - l + t, l + t - k, log_w, two_w, backend)
                        terms.append(wa * wb * coef * x ** l * decay * bessel * factors[l])
    total = backend.fsum(terms)
    return 1 - total, backend.fsum(backend.fabs(v) for v in terms) + 1


def _evaluate(scenario, user, gain, inrs, method, dps, summand):
    exp_a, exp_b = ordered_expansions(scenario, user)
    p, used, limited = evaluate_with_escalation(
        lambda backend: summand(exp_a, exp_b, scenario.snr, scenario.threshold, gain, inrs, backend),
        "EXACT",
        dps,
    )
    record_closed_form(method)
    logger.debug(f"[EXACT] user={user} method={method} snr={scenario.snr:.6g} p={p:.6e} dps={used}")
    return OutageResult(p=clip_probability(p, "EXACT"), method=method, dps=used, precision_limited=limited)


def user_outage_exact(scenario: Scenario, user: int = 2, dps=None, gain=None) -> OutageResult:
    """Outage of ``user`` under arbitrary correlation and L >= 1 distinct-INR interferers."""
    _check_user(user)
    _check_threshold(scenario)
    if scenario.interference.count == 0:
        raise ValueError("user_outage_exact needs at least one interferer; use user_outage_no_cci")
    c = gain if gain is not None else gain_constant(scenario).value
    return _evaluate(scenario, user, c, scenario.interference.inr, "exact-general", dps, _general_sum)


def user_outage_no_cci(scenario: Scenario, user: int = 2, dps=None, gain=None) -> OutageResult:
    """Interference-free outage: the general sum with S_l = 1 and C without the interference term."""
    _check_user(user)
    _check_threshold(scenario)
    c = gain if gain is not None else gain_constant(scenario, include_interference=False).value
    return _evaluate(scenario, user, c, (), "exact-general", dps, _general_sum)


def _exponential_sum(exp_a, exp_b, snr, threshold, gain, inrs, backend):
    # every multiplicity is 1, so j = t = 1 and only K_1 survives
    num = backend.num
    th, g, c = num(threshold), num(snr), num(gain)
    theta_a = [row[0] for row in backend_weights(exp_a, backend)]
    theta_b = [row[0] for row in backend_weights(exp_b, backend)]
    inr = [num(v) for v in inrs]
    beta = beta_coefficients(inrs, backend) if inrs else ()
    terms = []
    for ca, wa in zip(exp_a.chi, theta_a):
        ca = num(ca)
        x = th / (g * ca)
        head = backend.exp(-x)
        if inr:
            head = head * backend.fsum(b / (x + 1 / level) for b, level in zip(beta, inr))
        for cb, wb in zip(exp_b.chi, theta_b):
            if abs(wa * wb) < NEGLIGIBLE_WEIGHT:
                continue
            w = backend.sqrt(th * c / (g * g * ca * num(cb)))
            bessel = 2 * backend.exp(backend.log(w) + backend.log_besselk(1, 2 * w))
            terms.append(wa * wb * head * bessel)
    total = backend.fsum(terms)
    return 1 - total, backend.fsum(backend.fabs(v) for v in terms) + 1


def user_outage_exponential(scenario: Scenario, user: int = 2, dps=None, gain=None) -> OutageResult:
    """Exponential correlation; repeated eigenvalues fall back to the iid or general form."""
    _check_user(user)
    _check_threshold(scenario)
    for node in (scenario.node1, scenario.node2):
        if node.kind != "exponential":
            raise ValueError(f"user_outage_exponential requires exponential correlation, got '{node.kind}'")
    exp1, exp2 = node_expansions(scenario)
    if not (exp1.all_simple and exp2.all_simple):
        # rho = 0 with N > 1 repeats the eigenvalue 1
        if scenario.node1.rho == 0.0 and scenario.node2.rho == 0.0:
            logger.debug("[EXACT] uncorrelated exponential model, using the iid form")
            return user_outage_iid(scenario, user, dps=dps, gain=gain)
        logger.debug("[EXACT] repeated eigenvalues, using the general form")
        return user_outage(scenario, user, dps=dps, gain=gain)
    inrs = scenario.interference.inr
    c = gain if gain is not None else gain_constant(scenario, include_interference=bool(inrs)).value
    return _evaluate(scenario, user, c, inrs, "exact-exponential", dps, _exponential_sum)


def _iid_sum(exp_a, exp_b, snr, threshold, gain, inrs, backend):
    num = backend.num
    th, g, c = num(threshold), num(snr), num(gain)
    na, nb = exp_a.size, exp_b.size
    oa, ob = num(exp_a.omega), num(exp_b.omega)
    inr = [num(v) for v in inrs]
    beta = beta_coefficients(inrs, backend) if inrs else ()
    x = th / (g * oa)
    w = backend.sqrt(th * c / (g * g * oa * ob))
    log_w = backend.log(w)
    decay = backend.exp(-x)
    scale = backend.factorial(nb - 1)
    terms = []
    for k in range(na):
        for l in range(k + 1):
            coef = num(comb(k, l)) / (backend.factorial(k) * scale)
            interference = _interference_factor(x, l, beta, inr, backend)
            bessel = _bessel_factor(k - l + nb, l + nb - k, log_w, 2 * w, backend)
            terms.append(coef * x ** l * decay * bessel * interference)
    total = backend.fsum(terms)
    return 1 - total, backend.fsum(backend.fabs(v) for v in terms) + 1


def user_outage_iid(scenario: Scenario, user: int = 2, dps=None, gain=None) -> OutageResult:
    """Uncorrelated antennas on both nodes."""
    _check_user(user)
    _check_threshold(scenario)
    exp1, exp2 = node_expansions(scenario)
    for expansion in (exp1, exp2):
        if expansion.distinct != 1 or expansion.chi[0] != expansion.omega:
            raise ValueError("user_outage_iid requires uncorrelated antennas on both nodes")
    inrs = scenario.interference.inr
    c = gain if gain is not None else gain_constant(scenario, include_interference=bool(inrs)).value
    return _evaluate(scenario, user, c, inrs, "exact-iid", dps, _iid_sum)


def user_outage(scenario: Scenario, user: int = 2, dps=None, gain=None) -> OutageResult:
    """General closed form, with or without interference as the scenario dictates."""
    if scenario.interference.count:
        return user_outage_exact(scenario, user, dps=dps, gain=gain)
    return user_outage_no_cci(scenario, user, dps=dps, gain=gain)
