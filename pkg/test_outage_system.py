"""
System outage: series closed form, quadrature route, truncation and relay placement.
"""
import math

import numpy as np
import pytest

from analysis.outage_exact import user_outage_no_cci
from analysis.outage_system import (
    epsilon_root,
    series_convergence_report,
    system_outage,
    system_outage_exact,
    system_outage_halves,
    system_outage_quadrature,
    union_bounds,
)
from analysis.scenario import at_kappa, at_snr, build_scenario, db_to_linear, swap_nodes
from models.types import CorrelationModel, Geometry, SeriesControl
from utils.errors import SeriesDivergenceError

KAPPA_GRID = [round(0.05 * k, 2) for k in range(1, 20)]


def _scenario(n1=2, n2=4, rho=0.0, kappa=0.5, snr_db=20.0, inr_db=()):
    node = (lambda n: CorrelationModel.exponential(n, rho)) if rho > 0 else CorrelationModel.identity
    return build_scenario(
        node(n1),
        node(n2),
        snr=db_to_linear(snr_db),
        threshold=db_to_linear(5.0),
        geometry=Geometry(kappa=kappa),
        inrs=[db_to_linear(v) for v in inr_db],
    )


def test_epsilon_root_solves_crossover():
    th, c = 3.2, 150.0
    eps = epsilon_root(th, c)
    assert eps * eps - th * eps - th * c == pytest.approx(0.0, abs=1e-9 * eps * eps)
    assert eps > th
    assert epsilon_root(2.0, 3.0) == pytest.approx(1.0 + math.sqrt(7.0), rel=1e-12)
    assert epsilon_root(2.0, 1e-12) == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(ValueError):
        epsilon_root(0.0, c)


@pytest.mark.parametrize("n1,n2,rho", [(2, 2, 0.0), (2, 4, 0.0), (3, 2, 0.5)])
@pytest.mark.parametrize("kappa", [0.3, 0.5, 0.7])
def test_series_matches_quadrature(n1, n2, rho, kappa):
    s = _scenario(n1=n1, n2=n2, rho=rho, kappa=kappa)
    series = system_outage_exact(s)
    quad = system_outage_quadrature(s)
    print(f"({n1},{n2}) rho={rho} kappa={kappa}: series={series.p:.10e} quadrature={quad.p:.10e}")
    assert series.method == "system-exact"
    assert quad.method == "system-exact-quadrature"
    assert series.p == pytest.approx(quad.p, rel=1e-6)


def test_five_terms_are_enough_at_default_point():
    s = _scenario(n1=2, n2=4, kappa=0.5, snr_db=20.0)
    short = system_outage_exact(s, series=SeriesControl(max_terms=5, tolerance=1e-12)).p
    full = system_outage_exact(s, series=SeriesControl(max_terms=50, tolerance=1e-12)).p
    print(f"5 terms: {short:.12e}  50 terms: {full:.12e}")
    assert abs(short - full) <= 1e-8


def test_convergence_report_decays():
    report = series_convergence_report(_scenario(), max_terms=20)
    mags = report.magnitudes
    assert len(mags) == 20
    assert mags[10] < 1e-8 * max(mags)
    assert mags[-1] < mags[10]
    assert all(a * b < 0 for a, b in zip(report.terms[:10], report.terms[1:11]))
    with pytest.raises(ValueError):
        series_convergence_report(_scenario(), max_terms=-1)


@pytest.mark.parametrize("n1,n2", [(2, 2), (2, 4)])
def test_system_outage_between_union_bounds(n1, n2):
    s = _scenario(n1=n1, n2=n2)
    for snr_db in range(0, 41, 10):
        point = at_snr(s, db_to_linear(float(snr_db)))
        p_sys = system_outage(point).p
        lower, upper = union_bounds(point)
        p1 = user_outage_no_cci(point, 1).p
        p2 = user_outage_no_cci(point, 2).p
        assert lower == max(p1, p2)
        assert p_sys >= lower * (1 - 1e-9)
        assert p_sys <= upper * (1 + 1e-9)


def test_extreme_placement_reroutes_to_quadrature():
    s = _scenario(n1=2, n2=4, kappa=0.05)
    with pytest.raises(SeriesDivergenceError) as info:
        system_outage_exact(s)
    assert info.value.terms_used > 0
    result = system_outage(s)
    assert result.method == "system-exact-quadrature"
    assert 0.0 <= result.p <= 1.0


def test_interference_is_rejected():
    with pytest.raises(ValueError):
        system_outage(_scenario(inr_db=(1.0,)))
    with pytest.raises(ValueError):
        system_outage_quadrature(_scenario(inr_db=(1.0,)))


def _kappa_curve(n1, n2, snr_db=20.0):
    s = _scenario(n1=n1, n2=n2, snr_db=snr_db)
    return np.array([system_outage(at_kappa(s, k)).p for k in KAPPA_GRID])


def test_symmetric_arrays_prefer_midpoint():
    curve = _kappa_curve(2, 2)
    assert KAPPA_GRID[int(np.argmin(curve))] == 0.5
    for k in range(len(KAPPA_GRID) // 2):
        assert curve[k] == pytest.approx(curve[-1 - k], rel=1e-8)


@pytest.mark.parametrize("snr_db", [10.0, 20.0, 30.0])
def test_unbalanced_arrays_pull_relay_toward_smaller_array(snr_db):
    curve = _kappa_curve(2, 4, snr_db)
    best = KAPPA_GRID[int(np.argmin(curve))]
    print(f"(2,4) system outage argmin kappa at {snr_db} dB = {best}")
    assert abs(best - 0.4) <= 0.05 + 1e-9


def test_symmetric_arrays_split_system_outage_evenly():
    i1, i2 = system_outage_halves(_scenario(n1=2, n2=2, rho=0.3, kappa=0.5))
    assert i1 > 0.0
    assert i1 == pytest.approx(i2, rel=1e-10)
    u1, u2 = system_outage_halves(_scenario(n1=2, n2=4, kappa=0.5))
    assert u1 != pytest.approx(u2, rel=1e-3)
    assert u1 + u2 == pytest.approx(system_outage_exact(_scenario(n1=2, n2=4, kappa=0.5)).p, rel=1e-12)


def test_series_control_validation():
    with pytest.raises(ValueError):
        SeriesControl(max_terms=4)
    with pytest.raises(ValueError):
        SeriesControl(tolerance=1e-3)
    assert math.isclose(SeriesControl().tolerance, 1e-12)


@pytest.mark.parametrize("n1,n2,rho,kappa", [(2, 4, 0.0, 0.3), (3, 2, 0.5, 0.7)])
def test_exchanging_nodes_leaves_system_outage_unchanged(n1, n2, rho, kappa):
    s = _scenario(n1=n1, n2=n2, rho=rho, kappa=kappa)
    assert system_outage_exact(s).p == pytest.approx(system_outage_exact(swap_nodes(s)).p, rel=1e-10)
