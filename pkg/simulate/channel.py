"""
Channel draws for the two-way relay.

The beamformed gain of node n is snr * ||Xi_n^{1/2} h_n||**2 with
h_n ~ CN(0, Omega_n I); in the eigenbasis of Xi_n that is
snr * sum_i chi_i * Gamma(alpha_i, 1).
"""
import numpy as np

from analysis.scenario import gain_constant
from analysis.spectral import correlation_matrix
from models.types import InterferenceProfile, Scenario, SpectralExpansion


def sample_channel_gain(expansion: SpectralExpansion, snr: float, rng: np.random.Generator, size: int) -> np.ndarray:
    gain = np.zeros(size)
    for chi, alpha in zip(expansion.chi, expansion.multiplicity):
        gain += chi * rng.gamma(alpha, 1.0, size)
    return snr * gain


def sample_interference(profile: InterferenceProfile, rng: np.random.Generator, size: int) -> np.ndarray:
    total = np.zeros(size)
    for level in profile.inr:
        total += rng.exponential(level, size)
    return total


def user_sinr(g1: np.ndarray, g2: np.ndarray, g3: np.ndarray, gain: float, user: int) -> np.ndarray:
    """End-to-end SINR after self-interference removal; user 2 is limited by the relay's first hop."""
    own = g2 if user == 2 else g1
    return g1 * g2 / (own * (g3 + 1.0) + gain)


def _matrix_sqrt(model) -> np.ndarray:
    values, vectors = np.linalg.eigh(correlation_matrix(model))
    return (vectors * np.sqrt(values)) @ vectors.T


def _complex_normal(rng: np.random.Generator, shape, power: float) -> np.ndarray:
    return np.sqrt(power / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_sinr_explicit(scenario: Scenario, user: int, trials: int, seed: int):
    """Per-trial SINR from explicit antenna vectors, alongside the gain-form SINR of the same draws.

    Transmit and receive weights are the matched filters of the effective
    channel Xi^{1/2} h; the relay amplifies with the fixed gain G**2 = snr/C.
    """
    if user not in (1, 2):
        raise ValueError(f"user must be 1 or 2, got {user}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    snr = scenario.snr
    c = gain_constant(scenario).value

    v1 = _complex_normal(rng, (trials, scenario.node1.size), scenario.omega1) @ _matrix_sqrt(scenario.node1).T
    v2 = _complex_normal(rng, (trials, scenario.node2.size), scenario.omega2) @ _matrix_sqrt(scenario.node2).T
    g3 = sample_interference(scenario.interference, rng, trials)

    norm1 = np.linalg.norm(v1, axis=1, keepdims=True)
    norm2 = np.linalg.norm(v2, axis=1, keepdims=True)
    # source transmit weights (matched to the uplink) and receive combiners
    tx1, tx2 = np.conj(v1) / norm1, np.conj(v2) / norm2
    rx1, rx2 = np.conj(v1) / norm1, np.conj(v2) / norm2

    uplink1 = np.abs(np.sum(v1 * tx1, axis=1)) ** 2
    uplink2 = np.abs(np.sum(v2 * tx2, axis=1)) ** 2
    if user == 2:
        desired, combined = uplink1, np.abs(np.sum(rx2 * v2, axis=1)) ** 2
    else:
        desired, combined = uplink2, np.abs(np.sum(rx1 * v1, axis=1)) ** 2
    # unit-norm combiner keeps the destination noise at unit power
    explicit = snr * desired * combined / (combined * (g3 + 1.0) + c / snr)

    g1 = snr * np.sum(np.abs(v1) ** 2, axis=1)
    g2 = snr * np.sum(np.abs(v2) ** 2, axis=1)
    return explicit, user_sinr(g1, g2, g3, c, user)
