"""
Spatial-correlation spectra and the mixture-of-Gamma form of each node's gain.

A node with N antennas, correlation matrix Xi and per-antenna power Omega has
normalized gain gamma/snr = sum_i chi_i * Gamma(alpha_i, 1) with chi_i = lambda_i*Omega
over the distinct eigenvalues lambda_i of Xi. Partial fractions turn the density
into sum_ij theta_ij * Gamma(j, snr*chi_i).
"""
import logging
from functools import lru_cache, reduce
from math import comb, factorial, fsum
from typing import List, Sequence, Tuple

import numpy as np
from scipy import special, stats
from scipy.linalg import eigh, toeplitz

from models.types import CorrelationModel, SpectralExpansion
from utils.precision import FLOAT

logger = logging.getLogger(__name__)

# Relative eigenvalue gap below which two eigenvalues count as coincident
COINCIDENCE_GAP = 1e-9


def correlation_matrix(model: CorrelationModel) -> np.ndarray:
    if model.kind == "identity":
        return np.eye(model.size)
    if model.kind == "exponential":
        return toeplitz(model.rho ** np.arange(model.size))
    raise ValueError("an explicit-spectrum correlation model has no matrix form")


def _check_distinct(values: Sequence[float], what: str) -> None:
    ordered = sorted(values, reverse=True)
    for hi, lo in zip(ordered, ordered[1:]):
        if (hi - lo) / hi < COINCIDENCE_GAP:
            raise ValueError(
                f"{what} {hi:.15g} and {lo:.15g} coincide to relative gap < {COINCIDENCE_GAP:g}; "
                "merge them into one value with summed multiplicity or perturb the model"
            )


def eigen_spectrum(model: CorrelationModel) -> List[Tuple[float, int]]:
    """Distinct eigenvalues (descending) with multiplicities."""
    if model.kind == "identity" or (model.kind == "exponential" and model.rho == 0.0):
        return [(1.0, model.size)]
    if model.kind == "spectrum":
        pairs = sorted(model.spectrum, key=lambda p: p[0], reverse=True)
        _check_distinct([lam for lam, _ in pairs], "eigenvalues")
        return [(float(lam), int(m)) for lam, m in pairs]

    matrix = correlation_matrix(model)
    eigenvalues, vectors = eigh(matrix)
    residual = float(np.max(np.abs(matrix @ vectors - vectors * eigenvalues)))
    if residual > 1e-12 * model.size:
        logger.warning(f"[SPECTRAL] eigen residual {residual:.3e} for rho={model.rho} N={model.size}")
    if np.any(eigenvalues <= 0):
        raise ValueError(f"correlation matrix is not positive definite for rho={model.rho}")
    eigenvalues = sorted((float(v) for v in eigenvalues), reverse=True)
    _check_distinct(eigenvalues, "eigenvalues")
    return [(lam, 1) for lam in eigenvalues]


def theta_table(chi: Sequence[float], multiplicity: Sequence[int], backend=FLOAT) -> Tuple[Tuple, ...]:
    """Partial-fraction weights theta[i][j-1] of prod_l (1 + s*chi_l)**-alpha_l.

    theta_ij = G_i^{(m)}(-1/chi_i) / (m! chi_i**m) with m = alpha_i - j and
    G_i(s) = prod_{l != i} (1 + s*chi_l)**-alpha_l. Derivatives of G_i follow
    from G' = G * (ln G)'.
    """
    chis = [backend.num(c) for c in chi]
    one = backend.num(1)
    table = []
    for i, ci in enumerate(chis):
        ai = multiplicity[i]
        others = [(chis[l], multiplicity[l]) for l in range(len(chis)) if l != i]
        # 1 + s0*chi_l at s0 = -1/chi_i
        shifted = [((ci - cl) / ci, al) for cl, al in others]
        g0 = reduce(lambda acc, p: acc * p[0] ** (-p[1]), shifted, one)
        u = [(cl / d, al) for (cl, al), (d, _) in zip(others, shifted)]
        log_derivs = []
        for q in range(ai - 1):
            sign = 1 if q % 2 else -1
            log_derivs.append(backend.fsum(sign * al * backend.factorial(q) * ul ** (q + 1) for ul, al in u))
        derivs = [g0]
        for m in range(ai - 1):
            derivs.append(backend.fsum(comb(m, q) * derivs[q] * log_derivs[m - q] for q in range(m + 1)))
        row = []
        for j in range(1, ai + 1):
            m = ai - j
            row.append(derivs[m] / (backend.factorial(m) * ci ** m))
        table.append(tuple(row))
    return tuple(table)


def expansion_coefficients(spectrum: Sequence[Tuple[float, int]], omega: float) -> SpectralExpansion:
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    chi = tuple(float(lam) * omega for lam, _ in spectrum)
    multiplicity = tuple(int(m) for _, m in spectrum)
    _check_distinct(chi, "scaled eigenvalues")
    theta = theta_table(chi, multiplicity)
    total = sum(w for row in theta for w in row)
    if abs(total - 1.0) > 1e-8 * max(1.0, max(abs(w) for row in theta for w in row)):
        logger.warning(f"[SPECTRAL] theta weights sum to {total:.15g} for chi={chi}")
    return SpectralExpansion(chi=chi, multiplicity=multiplicity, theta=theta, omega=float(omega))


@lru_cache(maxsize=256)
def build_expansion(model: CorrelationModel, omega: float) -> SpectralExpansion:
    return expansion_coefficients(eigen_spectrum(model), omega)


# Mixtures with several distinct eigenvalues cancel near zero; below this
# fraction of the smallest chi the CDF is summed from its Taylor series.
TAYLOR_SWITCH = 0.25
TAYLOR_EXTRA_TERMS = 40


def _mixture_cdf(expansion: SpectralExpansion, y: np.ndarray) -> np.ndarray:
    total = np.zeros_like(y)
    for _, j, chi, weight in expansion.components():
        if weight == 0.0:
            continue
        total = total + weight * special.gammainc(j, y / chi)
    return total


def _mixture_pdf(expansion: SpectralExpansion, y: np.ndarray) -> np.ndarray:
    total = np.zeros_like(y)
    for _, j, chi, weight in expansion.components():
        if weight == 0.0:
            continue
        total = total + weight * stats.gamma.pdf(y, a=j, scale=chi)
    return total


@lru_cache(maxsize=256)
def _series_coefficients(expansion: SpectralExpansion) -> np.ndarray:
    values, _ = _taylor_terms(expansion, expansion.size + TAYLOR_EXTRA_TERMS)
    return np.asarray(values)


def _normalized(expansion: SpectralExpansion, snr: float, gamma, derivative: bool):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("gain distribution requires gamma >= 0")
    y = g / snr
    result = _mixture_pdf(expansion, y) if derivative else _mixture_cdf(expansion, y)
    if expansion.distinct > 1:
        small = y < TAYLOR_SWITCH * min(expansion.chi)
        if np.any(small):
            coeffs = _series_coefficients(expansion)
            if derivative:
                coeffs = np.polynomial.polynomial.polyder(coeffs)
            result = np.where(small, np.polynomial.polynomial.polyval(y, coeffs), result)
    return result


def gain_cdf(expansion: SpectralExpansion, snr: float, gamma):
    """P(gamma_n <= gamma) as a theta-weighted sum of regularized lower gamma functions."""
    result = np.clip(_normalized(expansion, snr, gamma, derivative=False), 0.0, 1.0)
    return float(result) if result.ndim == 0 else result


def gain_pdf(expansion: SpectralExpansion, snr: float, gamma):
    result = np.maximum(_normalized(expansion, snr, gamma, derivative=True) / snr, 0.0)
    return float(result) if result.ndim == 0 else result


def _taylor_terms(expansion: SpectralExpansion, order: int):
    # P(j, u) = u^j/Gamma(j) * sum_q (-u)^q / (q! (j+q)), u = y/chi
    values = []
    magnitudes = []
    for n in range(order + 1):
        terms = []
        for _, j, chi, weight in expansion.components():
            if n < j or weight == 0.0:
                continue
            q = n - j
            sign = -1.0 if q % 2 else 1.0
            terms.append(sign * weight / (factorial(j - 1) * factorial(q) * n * chi ** n))
        values.append(fsum(terms))
        magnitudes.append(fsum(abs(v) for v in terms))
    return values, magnitudes


def gain_cdf_taylor(expansion: SpectralExpansion, order: int) -> Tuple[float, ...]:
    """Taylor coefficients f_0..f_order of F(y) = P(gamma_n/snr <= y) around y = 0."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    values, _ = _taylor_terms(expansion, order)
    return tuple(values)


def leading_order(expansion: SpectralExpansion, tolerance: float = 1e-8) -> int:
    """Index of the first Taylor coefficient of the gain CDF that does not cancel."""
    values, magnitudes = _taylor_terms(expansion, expansion.size + 1)
    for n, (value, mag) in enumerate(zip(values, magnitudes)):
        if mag > 0 and abs(value) > tolerance * mag:
            return n
    raise ValueError("gain CDF has no non-vanishing Taylor coefficient up to N+1")
