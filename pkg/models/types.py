import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

CORRELATION_KINDS = ("identity", "exponential", "spectrum")

OUTAGE_METHODS = (
    "exact-general",
    "exact-exponential",
    "exact-iid",
    "asymptotic",
    "system-exact",
    "system-exact-quadrature",
    "monte-carlo",
)


@dataclass(frozen=True)
class SpecialValue:
    """Special-function value paired with an absolute error bound."""
    value: float
    error_bound: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise OverflowError(f"special function value is not finite: {self.value}")
        if self.error_bound < 0:
            raise ValueError(f"error_bound must be nonnegative, got {self.error_bound}")


@dataclass(frozen=True)
class CorrelationModel:
    """Spatial correlation of one node's antenna array.

    ``identity`` and ``exponential`` carry a matrix; ``spectrum`` carries only
    the (eigenvalue, multiplicity) pairs.
    """
    kind: str
    size: int
    rho: float = 0.0
    spectrum: Tuple[Tuple[float, int], ...] = ()

    def __post_init__(self):
        if self.kind not in CORRELATION_KINDS:
            raise ValueError(f"unknown correlation kind '{self.kind}', expected one of {CORRELATION_KINDS}")
        if self.size < 1:
            raise ValueError(f"antenna count must be >= 1, got {self.size}")
        if self.kind == "exponential" and not (0.0 <= self.rho < 1.0):
            raise ValueError(f"exponential correlation coefficient must lie in [0, 1), got {self.rho}")
        if self.kind == "spectrum":
            if not self.spectrum:
                raise ValueError("explicit spectrum must not be empty")
            total = 0
            weighted = 0.0
            for lam, mult in self.spectrum:
                if lam <= 0:
                    raise ValueError(f"eigenvalues must be positive, got {lam}")
                if mult < 1:
                    raise ValueError(f"multiplicities must be >= 1, got {mult}")
                total += mult
                weighted += lam * mult
            if total != self.size:
                raise ValueError(f"multiplicities sum to {total}, expected {self.size}")
            if abs(weighted - self.size) > 1e-9 * self.size:
                raise ValueError(
                    f"eigenvalues of a unit-diagonal correlation matrix sum to {self.size}, got {weighted:.12g}"
                )

    @classmethod
    def identity(cls, size: int) -> "CorrelationModel":
        return cls(kind="identity", size=size)

    @classmethod
    def exponential(cls, size: int, rho: float) -> "CorrelationModel":
        return cls(kind="exponential", size=size, rho=float(rho))

    @classmethod
    def from_spectrum(cls, pairs) -> "CorrelationModel":
        spectrum = tuple((float(lam), int(mult)) for lam, mult in pairs)
        return cls(kind="spectrum", size=sum(m for _, m in spectrum), spectrum=spectrum)


@dataclass(frozen=True)
class SpectralExpansion:
    """Mixture-of-Gamma form of one node's normalized gain.

    ``theta[i][j-1]`` is the weight of the Gamma(j, chi[i]) component.
    """
    chi: Tuple[float, ...]
    multiplicity: Tuple[int, ...]
    theta: Tuple[Tuple[float, ...], ...]
    omega: float

    @property
    def size(self) -> int:
        return sum(self.multiplicity)

    @property
    def distinct(self) -> int:
        return len(self.chi)

    @property
    def all_simple(self) -> bool:
        return all(m == 1 for m in self.multiplicity)

    def components(self) -> Iterator[Tuple[int, int, float, float]]:
        """Yield (i, j, chi_i, theta_ij) with j starting at 1."""
        for i, chi in enumerate(self.chi):
            for j, weight in enumerate(self.theta[i], start=1):
                yield i, j, chi, weight


@dataclass(frozen=True)
class InterferenceProfile:
    inr: Tuple[float, ...] = ()
    beta: Tuple[float, ...] = ()

    @property
    def count(self) -> int:
        return len(self.inr)

    @property
    def total(self) -> float:
        return math.fsum(self.inr)


@dataclass(frozen=True)
class Geometry:
    """Linear source-relay-source placement; kappa is the S1-R fraction of the S1-S2 distance."""
    kappa: float
    mu: float = 4.0
    omega0: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.kappa < 1.0):
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.mu < 0:
            raise ValueError(f"path-loss exponent must be nonnegative, got {self.mu}")
        if self.omega0 <= 0:
            raise ValueError(f"reference power must be positive, got {self.omega0}")


@dataclass(frozen=True)
class Scenario:
    """Complete two-way relay configuration. Powers and SNRs are linear."""
    node1: CorrelationModel
    node2: CorrelationModel
    snr: float
    threshold: float
    omega1: float
    omega2: float
    interference: InterferenceProfile = field(default_factory=InterferenceProfile)
    inr_ratios: Tuple[float, ...] = ()
    geometry: Optional[Geometry] = None

    def __post_init__(self):
        if self.snr <= 0:
            raise ValueError(f"snr must be positive, got {self.snr}")
        if self.threshold < 0:
            raise ValueError(f"threshold must be nonnegative, got {self.threshold}")
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError(f"channel powers must be positive, got omega1={self.omega1} omega2={self.omega2}")
        for inr in self.interference.inr:
            if inr <= 0:
                raise ValueError(f"interferer INRs must be positive, got {inr}")
        for nu in self.inr_ratios:
            if nu <= 0:
                raise ValueError(f"INR ratios must be positive, got {nu}")

    @property
    def antennas(self) -> Tuple[int, int]:
        return self.node1.size, self.node2.size


@dataclass(frozen=True)
class GainConstant:
    value: float
    rho_asym: float

    def __post_init__(self):
        if self.value <= 1.0:
            raise ValueError(f"relay gain constant must exceed 1, got {self.value}")


@dataclass(frozen=True)
class OutageResult:
    """``precision_limited`` marks a sum that still cancelled at the mpmath precision cap."""
    p: float
    method: str
    dps: Optional[int] = None
    precision_limited: bool = False

    def __post_init__(self):
        if self.method not in OUTAGE_METHODS:
            raise ValueError(f"unknown outage method '{self.method}'")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"outage probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo outage estimate.

    With zero outage events ``stderr`` holds the one-sided 95% upper bound
    3/trials instead of zero.
    """
    p: float
    stderr: float
    trials: int
    seed: int
    events: int

    @property
    def upper_bound_only(self) -> bool:
        return self.events == 0


@dataclass(frozen=True)
class SeriesControl:
    max_terms: int = 50
    tolerance: float = 1e-12

    def __post_init__(self):
        if self.max_terms < 5:
            raise ValueError(f"max_terms must be >= 5, got {self.max_terms}")
        if not (0.0 < self.tolerance <= 1e-6):
            raise ValueError(f"tolerance must lie in (0, 1e-6], got {self.tolerance}")


@dataclass(frozen=True)
class SeriesReport:
    """Signed per-s contributions of the system-outage inner series."""
    terms: Tuple[float, ...]

    @property
    def magnitudes(self) -> Tuple[float, ...]:
        return tuple(abs(t) for t in self.terms)


@dataclass(frozen=True)
class AsymptoticExpansion:
    """High-SNR form p ~ c(snr) * (threshold/snr)**theta.

    The leading coefficient is c(snr) = a + b*ln(threshold/snr); b vanishes
    unless the two nodes have equal antenna counts.
    """
    theta: int
    a: float
    b: float
    threshold: float
    residuals: Tuple[float, ...] = ()
    path: str = "general"

    def coefficient(self, snr: float) -> float:
        return self.a + self.b * math.log(self.threshold / snr)

    def outage(self, snr: float) -> float:
        return self.coefficient(snr) * (self.threshold / snr) ** self.theta

    def local_slope(self, snr: float) -> float:
        """d ln p / d ln snr of the asymptote."""
        return -self.theta - self.b / self.coefficient(snr)


SWEEP_VARIABLES = ("snr_db", "kappa", "rho", "gamma_th_db")
SWEEP_METHODS = ("exact", "asymptotic", "mc", "system")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float
    methods: Tuple[str, ...]

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable '{self.variable}', expected one of {SWEEP_VARIABLES}")
        if self.step <= 0:
            raise ValueError(f"sweep step must be positive, got {self.step}")
        if self.stop <= self.start:
            raise ValueError(f"empty sweep range: start={self.start} stop={self.stop}")
        if not self.methods:
            raise ValueError("at least one method is required")
        for method in self.methods:
            if method not in SWEEP_METHODS:
                raise ValueError(f"unknown method '{method}', expected a subset of {SWEEP_METHODS}")

    def points(self) -> Tuple[float, ...]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return tuple(round(self.start + k * self.step, 12) for k in range(count))


@dataclass(frozen=True)
class SweepRow:
    """One CSV row; stderr/trials/seed stay None for closed forms."""
    variable: str
    value: float
    method: str
    p: float
    stderr: Optional[float] = None
    trials: Optional[int] = None
    seed: Optional[int] = None

    @property
    def sort_key(self) -> Tuple[float, str]:
        return self.value, self.method


@dataclass(frozen=True)
class ValidationRow:
    value: float
    quantity: str
    closed_form: float
    estimate: float
    stderr: float
    status: str

    @property
    def delta(self) -> float:
        return abs(self.closed_form - self.estimate)
