"""
Monte Carlo estimators: reproducibility, agreement with the closed forms, explicit-vector cross-check.
"""
import numpy as np
import pytest

from analysis.outage_exact import user_outage
from analysis.outage_system import system_outage
from analysis.scenario import at_snr, build_scenario, db_to_linear, node_expansions
from models.types import CorrelationModel, Geometry
from simulate.channel import sample_channel_gain, sample_sinr_explicit
from simulate.monte_carlo import (
    MIN_TRIALS,
    block_generator,
    estimate_all,
    estimate_system_outage,
    estimate_user_outage,
)

TRIALS = 200_000
SEED = 20120301


def _scenario(inr_db=(1.0,), threshold_db=5.0, rho=0.5):
    return build_scenario(
        CorrelationModel.exponential(2, rho),
        CorrelationModel.exponential(3, rho),
        snr=db_to_linear(10.0),
        threshold=db_to_linear(threshold_db) if threshold_db is not None else 0.0,
        omega1=1.0,
        omega2=1.0,
        inrs=[db_to_linear(v) for v in inr_db],
    )


def test_block_streams_are_independent_of_order():
    a = block_generator(7, 3).random(4)
    b = block_generator(7, 3).random(4)
    c = block_generator(7, 4).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_same_seed_same_estimate():
    s = _scenario()
    first = estimate_user_outage(s, 2, trials=50_000, seed=11)
    second = estimate_user_outage(s, 2, trials=50_000, seed=11)
    assert first == second


def test_worker_count_does_not_change_counts():
    s = _scenario()
    serial = estimate_all(s, trials=150_000, seed=5, workers=1)
    parallel = estimate_all(s, trials=150_000, seed=5, workers=3)
    assert serial == parallel


@pytest.mark.parametrize("user", [1, 2])
def test_user_outage_agrees_with_closed_form(user):
    s = _scenario()
    closed = user_outage(s, user).p
    estimate = estimate_user_outage(s, user, trials=TRIALS, seed=SEED)
    print(f"user {user}: closed={closed:.6f} mc={estimate.p:.6f} +- {estimate.stderr:.6f}")
    assert abs(closed - estimate.p) <= 4.0 * estimate.stderr


def test_system_outage_agrees_with_closed_form():
    s = _scenario(inr_db=())
    closed = system_outage(s).p
    estimate = estimate_system_outage(s, trials=TRIALS, seed=SEED)
    print(f"system: closed={closed:.6f} mc={estimate.p:.6f} +- {estimate.stderr:.6f}")
    assert abs(closed - estimate.p) <= 4.0 * estimate.stderr


def test_joint_estimates_are_consistent():
    u1, u2, system = estimate_all(_scenario(inr_db=()), trials=100_000, seed=3)
    assert system.events >= max(u1.events, u2.events)
    assert system.events <= u1.events + u2.events


def test_zero_events_report_upper_bound():
    estimate = estimate_user_outage(_scenario(threshold_db=None), 2, trials=MIN_TRIALS, seed=1)
    assert estimate.events == 0
    assert estimate.p == 0.0
    assert estimate.upper_bound_only
    assert estimate.stderr == pytest.approx(3.0 / MIN_TRIALS)


def test_invalid_runs():
    s = _scenario()
    with pytest.raises(ValueError):
        estimate_user_outage(s, 2, trials=MIN_TRIALS - 1, seed=1)
    with pytest.raises(ValueError):
        estimate_user_outage(s, 2, trials=MIN_TRIALS, seed=-1)
    with pytest.raises(ValueError):
        estimate_user_outage(s, 3, trials=MIN_TRIALS, seed=1)


def test_sampled_gain_mean():
    s = _scenario()
    exp1, _ = node_expansions(s)
    gains = sample_channel_gain(exp1, s.snr, block_generator(9, 0), 400_000)
    # E[gamma_1] = snr * N1 * Omega1
    assert gains.mean() == pytest.approx(s.snr * 2 * 1.0, rel=0.01)


@pytest.mark.parametrize("user", [1, 2])
def test_explicit_vectors_reproduce_gain_form(user):
    explicit, gain_form = sample_sinr_explicit(_scenario(inr_db=(1.0, 3.0)), user, trials=20_000, seed=4)
    assert explicit.shape == gain_form.shape == (20_000,)
    assert np.allclose(explicit, gain_form, rtol=1e-10, atol=0.0)


def test_estimate_shows_floor_with_proportional_interference():
    s = build_scenario(
        CorrelationModel.exponential(3, 0.8),
        CorrelationModel.exponential(2, 0.8),
        snr=db_to_linear(50.0),
        threshold=db_to_linear(5.0),
        geometry=Geometry(kappa=0.5),
        inr_ratios=(0.1,),
    )
    p50 = estimate_user_outage(s, 2, trials=2_000_000, seed=SEED)
    p60 = estimate_user_outage(at_snr(s, db_to_linear(60.0)), 2, trials=2_000_000, seed=SEED)
    print(f"floor: mc(50 dB)={p50.p:.4e} ({p50.events} events) mc(60 dB)={p60.p:.4e} ({p60.events} events)")
    assert p60.events > 0
    assert abs(p50.p - p60.p) <= 0.10 * p60.p


@pytest.mark.parametrize("user", [1, 2])
def test_unequal_channel_powers_agree_with_closed_form(user):
    # user 1 is evaluated by exchanging the nodes, which only matters when the hops differ
    s = build_scenario(
        CorrelationModel.exponential(2, 0.5),
        CorrelationModel.exponential(3, 0.5),
        snr=db_to_linear(10.0),
        threshold=db_to_linear(5.0),
        omega1=1.0,
        omega2=4.0,
        inrs=[db_to_linear(1.0)],
    )
    closed = user_outage(s, user).p
    other = user_outage(s, 3 - user).p
    estimate = estimate_user_outage(s, user, trials=TRIALS, seed=SEED)
    print(f"user {user}: closed={closed:.6f} other user={other:.6f} mc={estimate.p:.6f} +- {estimate.stderr:.6f}")
    assert abs(closed - other) > 10.0 * estimate.stderr
    assert abs(closed - estimate.p) <= 4.0 * estimate.stderr
