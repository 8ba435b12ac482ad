"""
Scenario assembly: interference weights, relay gain constant and relay geometry.
"""
import logging
import math
from dataclasses import replace
from functools import reduce
from typing import Optional, Sequence, Tuple

from analysis.spectral import build_expansion
from models.types import (
    CorrelationModel,
    GainConstant,
    Geometry,
    InterferenceProfile,
    Scenario,
    SpectralExpansion,
)
from utils.precision import FLOAT

logger = logging.getLogger(__name__)

# Relative gap below which two interferer INRs are treated as equal
INR_COINCIDENCE_GAP = 1e-6


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0:
        raise ValueError(f"cannot express {value} in dB")
    return 10.0 * math.log10(value)


def beta_coefficients(inrs: Sequence[float], backend=FLOAT) -> Tuple:
    """Hypoexponential weights of the aggregate interference power.

    beta_l = (1/inr_l) * prod_{k != l} (1 - inr_k/inr_l)**-1, so that the
    density of sum Exp(inr_l) is sum_l beta_l * exp(-x/inr_l).
    """
    values = [float(v) for v in inrs]
    for v in values:
        if v <= 0:
            raise ValueError(f"interferer INRs must be positive, got {v}")
    ordered = sorted(values, reverse=True)
    for hi, lo in zip(ordered, ordered[1:]):
        if (hi - lo) / hi < INR_COINCIDENCE_GAP:
            raise ValueError(
                f"interferer INRs {hi:.10g} and {lo:.10g} are nearly equal; merge them into one "
                "interferer or perturb one of them"
            )
    nums = [backend.num(v) for v in values]
    one = backend.num(1)
    betas = []
    for l, inr_l in enumerate(nums):
        prod = reduce(lambda acc, inr_k: acc * (one - inr_k / inr_l), (nums[k] for k in range(len(nums)) if k != l), one)
        betas.append(one / (inr_l * prod))
    return tuple(betas)


def interference_profile(inrs: Sequence[float]) -> InterferenceProfile:
    inr = tuple(float(v) for v in inrs)
    if not inr:
        return InterferenceProfile()
    return InterferenceProfile(inr=inr, beta=beta_coefficients(inr))


def scenario_channel_powers(omega0: float, kappa: float, mu: float) -> Tuple[float, float]:
    """(Omega1, Omega2) for a relay at fraction kappa of the S1-S2 distance."""
    geometry = Geometry(kappa=kappa, mu=mu, omega0=omega0)
    return geometry.omega0 * geometry.kappa ** (-geometry.mu), geometry.omega0 * (1.0 - geometry.kappa) ** (-geometry.mu)


def build_scenario(
    node1: CorrelationModel,
    node2: CorrelationModel,
    snr: float,
    threshold: float,
    omega1: Optional[float] = None,
    omega2: Optional[float] = None,
    geometry: Optional[Geometry] = None,
    inrs: Sequence[float] = (),
    inr_ratios: Sequence[float] = (),
) -> Scenario:
    """Assemble a scenario. Channel powers come either explicitly or from the geometry."""
    if geometry is not None:
        omega1, omega2 = scenario_channel_powers(geometry.omega0, geometry.kappa, geometry.mu)
    if omega1 is None or omega2 is None:
        raise ValueError("either explicit channel powers or a relay geometry is required")
    if inrs and inr_ratios:
        raise ValueError("fixed INRs and INR ratios are mutually exclusive")
    ratios = tuple(float(v) for v in inr_ratios)
    levels = tuple(v * snr for v in ratios) if ratios else tuple(inrs)
    return Scenario(
        node1=node1,
        node2=node2,
        snr=float(snr),
        threshold=float(threshold),
        omega1=float(omega1),
        omega2=float(omega2),
        interference=interference_profile(levels),
        inr_ratios=ratios,
        geometry=geometry,
    )


def at_snr(scenario: Scenario, snr: float) -> Scenario:
    """Same scenario at another SNR; INRs given as ratios follow the SNR."""
    interference = scenario.interference
    if scenario.inr_ratios:
        interference = interference_profile([v * snr for v in scenario.inr_ratios])
    return replace(scenario, snr=float(snr), interference=interference)


def at_kappa(scenario: Scenario, kappa: float) -> Scenario:
    if scenario.geometry is None:
        raise ValueError("scenario has no relay geometry to move")
    geometry = replace(scenario.geometry, kappa=float(kappa))
    omega1, omega2 = scenario_channel_powers(geometry.omega0, geometry.kappa, geometry.mu)
    return replace(scenario, geometry=geometry, omega1=omega1, omega2=omega2)


def at_rho(scenario: Scenario, rho: float) -> Scenario:
    """Both nodes switched to exponential correlation with coefficient rho."""
    return replace(
        scenario,
        node1=CorrelationModel.exponential(scenario.node1.size, rho),
        node2=CorrelationModel.exponential(scenario.node2.size, rho),
    )


def _resized(model: CorrelationModel, size: int) -> CorrelationModel:
    if model.kind == "identity":
        return CorrelationModel.identity(size)
    if model.kind == "exponential":
        return CorrelationModel.exponential(size, model.rho)
    raise ValueError("an explicit spectrum cannot be resized to another antenna count")


def at_antennas(scenario: Scenario, n1: int, n2: int) -> Scenario:
    """Same correlation family on resized arrays."""
    return replace(scenario, node1=_resized(scenario.node1, n1), node2=_resized(scenario.node2, n2))


def at_threshold(scenario: Scenario, threshold: float) -> Scenario:
    return replace(scenario, threshold=float(threshold))


def swap_nodes(scenario: Scenario) -> Scenario:
    geometry = scenario.geometry
    if geometry is not None:
        geometry = replace(geometry, kappa=1.0 - geometry.kappa)
    return replace(
        scenario,
        node1=scenario.node2,
        node2=scenario.node1,
        omega1=scenario.omega2,
        omega2=scenario.omega1,
        geometry=geometry,
    )


def node_expansions(scenario: Scenario) -> Tuple[SpectralExpansion, SpectralExpansion]:
    return build_expansion(scenario.node1, scenario.omega1), build_expansion(scenario.node2, scenario.omega2)


def _expansion_mean(expansion: SpectralExpansion) -> float:
    # E[gamma_n]/snr = sum_ij theta_ij * j * chi_i
    return math.fsum(weight * j * chi for _, j, chi, weight in expansion.components())


def gain_constant(scenario: Scenario, include_interference: bool = True) -> GainConstant:
    """Fixed relay gain constant C = snr/G**2 in units of the noise power."""
    exp1, exp2 = node_expansions(scenario)
    interference = 0.0
    if include_interference and scenario.interference.count:
        profile = scenario.interference
        interference = math.fsum(b * inr * inr for b, inr in zip(profile.beta, profile.inr))
    value = scenario.snr * _expansion_mean(exp1) + scenario.snr * _expansion_mean(exp2) + interference + 1.0
    rho_asym = scenario.node1.size * scenario.omega1 + scenario.node2.size * scenario.omega2
    return GainConstant(value=value, rho_asym=rho_asym)
