"""
High-SNR expansion: Bessel factor series, leading coefficient and convergence to the exact curve.
"""
import math

import mpmath
import pytest

from analysis.outage_asymptotic import array_gain, asymptotic_outage, bessel_series, diversity_order, phi_term
from analysis.outage_exact import user_outage
from analysis.scenario import at_snr, build_scenario, db_to_linear
from models.types import AsymptoticExpansion, CorrelationModel, Geometry


def _scenario(n1=3, n2=2, rho=0.5, inr_db=(1.0,), ratios=()):
    node = (lambda n: CorrelationModel.exponential(n, rho)) if rho > 0 else CorrelationModel.identity
    return build_scenario(
        node(n1),
        node(n2),
        snr=db_to_linear(30.0),
        threshold=db_to_linear(5.0),
        geometry=Geometry(kappa=0.5),
        inrs=[db_to_linear(v) for v in inr_db],
        inr_ratios=ratios,
    )


@pytest.mark.parametrize("l,t,k", [(0, 1, 0), (0, 2, 1), (1, 1, 1), (0, 1, 1), (0, 1, 2), (1, 3, 2), (2, 1, 3)])
def test_bessel_series_against_direct_evaluation(l, t, k):
    kappa, x, order = 0.37, 1e-3, 10
    a, b = bessel_series(l, t, k, kappa, order)
    series = math.fsum((a[p] + b[p] * math.log(x)) * x ** p for p in range(order + 1))
    with mpmath.workdps(40):
        w = mpmath.sqrt(mpmath.mpf(kappa) * mpmath.mpf(x))
        direct = 2 * w ** (k - l + t) * mpmath.besselk(l + t - k, 2 * w)
    assert series == pytest.approx(float(direct), rel=1e-10)


def test_phi_term_reads_one_coefficient():
    # 2wK_1(2w) = 1 + (kx)(ln(kx) - psi(1) - psi(2)) + ...
    rho, chi1, chi2, th, snr = 80.0, 16.0, 16.0, 3.0, 1e4
    kappa = rho / (chi1 * chi2)
    assert phi_term(0, 1, 0, rho, chi1, chi2, th, snr, 0) == pytest.approx(1.0)
    expected = kappa * (math.log(kappa) + math.log(th / snr) - float(mpmath.digamma(1)) - float(mpmath.digamma(2)))
    assert phi_term(0, 1, 0, rho, chi1, chi2, th, snr, 1) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        phi_term(0, 1, 0, rho, chi1, chi2, th, snr, -1)


@pytest.mark.parametrize("n1,n2", [(3, 2), (2, 3), (2, 2), (4, 1)])
def test_diversity_order_is_smaller_array(n1, n2):
    s = _scenario(n1=n1, n2=n2)
    assert diversity_order(s, 1) == min(n1, n2)
    assert diversity_order(s, 2) == min(n1, n2)


def test_log_term_only_for_equal_arrays():
    unequal = asymptotic_outage(_scenario(n1=3, n2=2))
    equal = asymptotic_outage(_scenario(n1=2, n2=2))
    assert abs(unequal.b) <= 1e-9 * abs(unequal.a)
    assert abs(equal.b) > 1e-6 * abs(equal.a)
    assert unequal.local_slope(1e5) == pytest.approx(-2.0)


def test_lower_orders_cancel():
    expansion = asymptotic_outage(_scenario(n1=3, n2=3, inr_db=(1.0, 2.0, 3.0)))
    assert len(expansion.residuals) == 3
    assert all(r < 1e-8 for r in expansion.residuals)


@pytest.mark.parametrize("n1,n2,rho", [(3, 2, 0.5), (2, 2, 0.3), (3, 3, 0.7), (2, 3, 0.2)])
def test_exponential_route_matches_general_route(n1, n2, rho):
    s = _scenario(n1=n1, n2=n2, rho=rho, inr_db=(1.0, 2.0))
    general = asymptotic_outage(s, path="general")
    fast = asymptotic_outage(s, path="exponential")
    assert fast.theta == general.theta
    assert fast.a == pytest.approx(general.a, rel=1e-8)
    assert fast.b == pytest.approx(general.b, rel=1e-8, abs=1e-12 * abs(general.a))


@pytest.mark.parametrize("rho", [0.2, 0.5, 0.8])
def test_asymptote_converges_to_exact_curve(rho):
    s = _scenario(n1=3, n2=2, rho=rho)
    expansion = asymptotic_outage(s)
    errors = []
    for snr_db in (30.0, 40.0, 50.0):
        point = at_snr(s, db_to_linear(snr_db))
        exact = user_outage(point).p
        errors.append(abs(expansion.outage(point.snr) / exact - 1.0))
    print(f"rho={rho}: ratio errors {['%.2e' % e for e in errors]}")
    assert errors[-1] <= 0.10
    assert errors[0] > errors[1] > errors[2]


def test_correlation_costs_array_gain_not_diversity():
    snr = db_to_linear(40.0)
    low = asymptotic_outage(_scenario(rho=0.2))
    high = asymptotic_outage(_scenario(rho=0.8))
    assert low.theta == high.theta == 2
    assert array_gain(high, snr) < array_gain(low, snr)


def test_user_one_asymptote():
    s = _scenario(n1=3, n2=2, rho=0.5)
    expansion = asymptotic_outage(s, user=1)
    point = at_snr(s, db_to_linear(50.0))
    assert expansion.outage(point.snr) == pytest.approx(user_outage(point, user=1).p, rel=0.1)


def test_rejected_inputs():
    with pytest.raises(ValueError):
        asymptotic_outage(_scenario(inr_db=(), ratios=(0.1,)))
    with pytest.raises(ValueError):
        asymptotic_outage(_scenario(), user=0)
    with pytest.raises(ValueError):
        asymptotic_outage(_scenario(rho=0.0), path="exponential")
    with pytest.raises(ValueError):
        asymptotic_outage(_scenario(), path="fast")
    with pytest.raises(ValueError):
        array_gain(AsymptoticExpansion(theta=2, a=-1.0, b=0.0, threshold=1.0), 100.0)
