"""
Monte Carlo outage estimators.

Trials are split into fixed-size blocks; block b draws from a Philox stream
keyed by the seed with its counter offset by b * 2**64, so each block's numbers
depend only on (seed, b). Blocks return integer outage counts, which makes the
estimate identical for any worker count.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Tuple

import numpy as np

from analysis.scenario import gain_constant, node_expansions
from app.config import MC_BLOCK_SIZE
from models.types import McEstimate, Scenario
from observability.metrics import record_mc_trials
from simulate.channel import sample_channel_gain, sample_interference, user_sinr

logger = logging.getLogger(__name__)

MIN_TRIALS = 10_000


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 64))


def _block_sizes(trials: int, block_size: int):
    blocks = (trials + block_size - 1) // block_size
    return [(b, min(block_size, trials - b * block_size)) for b in range(blocks)]


def _count_block(args) -> Tuple[int, int, int]:
    """Outage counts (user1, user2, system) for one block."""
    scenario, gain, seed, block, size = args
    exp1, exp2 = node_expansions(scenario)
    rng = block_generator(seed, block)
    g1 = sample_channel_gain(exp1, scenario.snr, rng, size)
    g2 = sample_channel_gain(exp2, scenario.snr, rng, size)
    g3 = sample_interference(scenario.interference, rng, size)
    out1 = user_sinr(g1, g2, g3, gain, user=1) < scenario.threshold
    out2 = user_sinr(g1, g2, g3, gain, user=2) < scenario.threshold
    return int(out1.sum()), int(out2.sum()), int((out1 | out2).sum())


def _run_blocks(scenario: Scenario, trials: int, seed: int, workers: int, gain: Optional[float]) -> Tuple[int, int, int]:
    if trials < MIN_TRIALS:
        raise ValueError(f"Monte Carlo needs at least {MIN_TRIALS} trials, got {trials}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    c = gain if gain is not None else gain_constant(scenario).value
    jobs = [(scenario, c, seed, b, size) for b, size in _block_sizes(trials, MC_BLOCK_SIZE)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_count_block, jobs))
    else:
        counts = [_count_block(job) for job in jobs]
    return tuple(sum(c[k] for c in counts) for k in range(3))


def _estimate(events: int, trials: int, seed: int) -> McEstimate:
    p = events / trials
    if events == 0:
        # one-sided 95% bound for zero observed events
        stderr = 3.0 / trials
    else:
        stderr = math.sqrt(p * (1.0 - p) / trials)
    return McEstimate(p=p, stderr=stderr, trials=trials, seed=seed, events=events)


def estimate_user_outage(scenario: Scenario, user: int, trials: int, seed: int, workers: int = 1,
                         gain: Optional[float] = None) -> McEstimate:
    if user not in (1, 2):
        raise ValueError(f"user must be 1 or 2, got {user}")
    counts = _run_blocks(scenario, trials, seed, workers, gain)
    record_mc_trials(f"user{user}", trials)
    estimate = _estimate(counts[user - 1], trials, seed)
    logger.debug(f"[MC] user={user} snr={scenario.snr:.6g} p={estimate.p:.6e} events={estimate.events}")
    return estimate


def estimate_system_outage(scenario: Scenario, trials: int, seed: int, workers: int = 1,
                           gain: Optional[float] = None) -> McEstimate:
    counts = _run_blocks(scenario, trials, seed, workers, gain)
    record_mc_trials("system", trials)
    estimate = _estimate(counts[2], trials, seed)
    logger.debug(f"[MC] system snr={scenario.snr:.6g} p={estimate.p:.6e} events={estimate.events}")
    return estimate


def estimate_all(scenario: Scenario, trials: int, seed: int, workers: int = 1) -> Tuple[McEstimate, McEstimate, McEstimate]:
    """User 1, user 2 and system estimates from one shared set of draws."""
    counts = _run_blocks(scenario, trials, seed, workers, None)
    record_mc_trials("joint", trials)
    return tuple(_estimate(n, trials, seed) for n in counts)
