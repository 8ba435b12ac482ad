"""
Scenario config files.

Flat ``key = value`` text with ``#`` comments, read with python-dotenv and
validated by a pydantic model. Powers, thresholds and INRs are in dB; list
values are comma-separated. Example:

    n1 = 3
    n2 = 2
    correlation = exponential
    rho = 0.5
    inr_db = 1
    gamma_th_db = 5
    sweep = snr_db
    start = 0
    stop = 40
    step = 2
    methods = exact, asymptotic, mc
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from analysis.scenario import at_antennas, at_rho, build_scenario, db_to_linear
from app.config import MC_DEFAULT_SEED, MC_DEFAULT_TRIALS, SERIES_MAX_TERMS, SERIES_TOLERANCE
from models.types import (
    SWEEP_METHODS,
    SWEEP_VARIABLES,
    CorrelationModel,
    Geometry,
    Scenario,
    SeriesControl,
    SweepSpec,
)
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


def _split(value: Any) -> Any:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n1: int = Field(ge=1)
    n2: int = Field(ge=1)
    correlation: Literal["identity", "exponential"] = "exponential"
    rho: float = Field(default=0.0, ge=0.0, lt=1.0)
    rho1: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    rho2: Optional[float] = Field(default=None, ge=0.0, lt=1.0)

    snr_db: float = 20.0
    gamma_th_db: float = 5.0
    inr_db: List[float] = []
    inr_ratio: List[float] = []  # linear, interferer INR = ratio * snr

    omega0: float = Field(default=1.0, gt=0.0)
    kappa: float = Field(default=0.5, gt=0.0, lt=1.0)
    mu: float = Field(default=4.0, ge=0.0)
    omega1: Optional[float] = Field(default=None, gt=0.0)
    omega2: Optional[float] = Field(default=None, gt=0.0)

    users: List[int] = [2]
    sweep: Optional[str] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = None
    methods: List[str] = ["exact"]
    rho_curves: List[float] = []
    antenna_curves: List[str] = []

    trials: int = Field(default=MC_DEFAULT_TRIALS, ge=1)
    seed: int = Field(default=MC_DEFAULT_SEED, ge=0)
    max_series_terms: int = Field(default=SERIES_MAX_TERMS, ge=5)

    @field_validator("inr_db", "inr_ratio", "users", "methods", "rho_curves", "antenna_curves", mode="before")
    @classmethod
    def _comma_list(cls, value):
        return _split(value)

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, value):
        for method in value:
            if method not in SWEEP_METHODS:
                raise ValueError(f"unknown method '{method}', expected a subset of {SWEEP_METHODS}")
        return value

    @field_validator("users")
    @classmethod
    def _known_users(cls, value):
        if not value or any(u not in (1, 2) for u in value):
            raise ValueError(f"users must be a nonempty subset of 1, 2, got {value}")
        return sorted(set(value))

    @field_validator("sweep")
    @classmethod
    def _known_variable(cls, value):
        if value is not None and value not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable '{value}', expected one of {SWEEP_VARIABLES}")
        return value

    @field_validator("antenna_curves")
    @classmethod
    def _antenna_pairs(cls, value):
        for label in value:
            parts = label.lower().split("x")
            if len(parts) != 2 or not all(p.isdigit() and int(p) >= 1 for p in parts):
                raise ValueError(f"antenna curve '{label}' must look like N1xN2")
        return value

    @model_validator(mode="after")
    def _consistent(self):
        if self.inr_db and self.inr_ratio:
            raise ValueError("inr_db and inr_ratio are mutually exclusive")
        if self.inr_ratio and "asymptotic" in self.methods:
            raise ValueError("asymptotic curves need fixed INRs; drop inr_ratio or the asymptotic method")
        if "system" in self.methods and (self.inr_db or self.inr_ratio):
            raise ValueError("the system closed form is interference-free; remove inr_db/inr_ratio")
        if self.rho_curves and self.antenna_curves:
            raise ValueError("rho_curves and antenna_curves cannot be combined")
        if self.rho_curves and self.sweep == "rho":
            raise ValueError("rho_curves cannot be combined with a rho sweep")
        if (self.omega1 is None) != (self.omega2 is None):
            raise ValueError("omega1 and omega2 must be given together")
        if self.sweep == "kappa" and self.omega1 is not None:
            raise ValueError("a kappa sweep needs the relay geometry, not explicit omega1/omega2")
        return self

    def node(self, size: int, rho: Optional[float]) -> CorrelationModel:
        if self.correlation == "identity":
            return CorrelationModel.identity(size)
        return CorrelationModel.exponential(size, self.rho if rho is None else rho)

    def base_scenario(self) -> Scenario:
        geometry = None
        if self.omega1 is None:
            geometry = Geometry(kappa=self.kappa, mu=self.mu, omega0=self.omega0)
        snr = db_to_linear(self.snr_db)
        return build_scenario(
            self.node(self.n1, self.rho1),
            self.node(self.n2, self.rho2),
            snr=snr,
            threshold=db_to_linear(self.gamma_th_db),
            omega1=self.omega1,
            omega2=self.omega2,
            geometry=geometry,
            inrs=[db_to_linear(v) for v in self.inr_db],
            inr_ratios=self.inr_ratio,
        )

    def curves(self) -> List[Tuple[str, Scenario]]:
        """(label suffix, scenario) per plotted curve; a single unlabeled curve when none are configured."""
        base = self.base_scenario()
        if self.rho_curves:
            return [(f"@rho={r:g}", at_rho(base, r)) for r in self.rho_curves]
        if self.antenna_curves:
            out = []
            for label in self.antenna_curves:
                n1, n2 = (int(p) for p in label.lower().split("x"))
                out.append((f"@{n1}x{n2}", at_antennas(base, n1, n2)))
            return out
        return [("", base)]

    def sweep_spec(self) -> SweepSpec:
        if self.sweep is None or self.start is None or self.stop is None or self.step is None:
            raise ConfigError("sweep, start, stop and step are required for a sweep")
        try:
            return SweepSpec(self.sweep, self.start, self.stop, self.step, tuple(self.methods))
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def series_control(self) -> SeriesControl:
        return SeriesControl(max_terms=self.max_series_terms, tolerance=SERIES_TOLERANCE)


def load_config(path, overrides: Optional[Dict[str, Any]] = None) -> SweepConfig:
    """Parse a config file; ``overrides`` (CLI flags) win over file values, None entries are ignored."""
    source = Path(path)
    if not source.is_file():
        raise ConfigError(f"config file not found: {source}")
    raw: Dict[str, Any] = {k: v for k, v in dotenv_values(source).items() if v is not None and v != ""}
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    try:
        config = SweepConfig(**raw)
        config.base_scenario()
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "config"
        raise ConfigError(f"{source.name}: {where}: {first.get('msg')}") from e
    except ValueError as e:
        raise ConfigError(f"{source.name}: {e}") from e
    logger.debug(f"[SWEEP] loaded {source} ({len(raw)} keys)")
    return config
