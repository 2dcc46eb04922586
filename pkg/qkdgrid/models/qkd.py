"""
Value types for the decoy-state key-rate engine
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qkdgrid.core.config import get_settings

PROBABILITY_SUM_TOLERANCE = 1e-12


class Basis(str, Enum):
    X = "X"
    Z = "Z"


class CountKind(str, Enum):
    DETECTIONS = "detections"
    ERRORS = "errors"


class ProtocolParams(BaseModel):
    """Protocol-side constants (defaults from the reference testbed)"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    k1: float = Field(0.4, ge=0)
    k2: float = Field(0.1, ge=0)
    k3: float = Field(0.007, ge=0)
    p_k1: float = Field(1 / 3, ge=0, le=1)
    p_k2: float = Field(1 / 3, ge=0, le=1)
    p_k3: float = Field(1 / 3, ge=0, le=1)
    p_x: float = Field(0.8, gt=0, le=1)
    n_x: int = Field(10_000_000, ge=1)
    eta_ec: float = Field(1.16, ge=1)
    eps_c: float = Field(1e-11, gt=0, lt=1)
    eps_s: float = Field(1e-11, gt=0, lt=1)
    ec_leakage: Literal["phase_error", "qber"] = "phase_error"

    @model_validator(mode="after")
    def _check_decoy_ordering(self) -> "ProtocolParams":
        if not self.k2 > self.k3:
            raise ValueError("decoy intensities must satisfy k2 > k3")
        if not self.k1 > self.k2 + self.k3:
            raise ValueError("signal intensity must satisfy k1 > k2 + k3")
        total = self.p_k1 + self.p_k2 + self.p_k3
        if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise ValueError(f"intensity probabilities sum to {total}, expected 1")
        return self

    @property
    def intensities(self) -> Tuple[float, float, float]:
        return (self.k1, self.k2, self.k3)

    @property
    def probabilities(self) -> Tuple[float, float, float]:
        return (self.p_k1, self.p_k2, self.p_k3)

    def basis_probability(self, basis: Basis) -> float:
        """Probability that both parties pick the given basis"""
        p = self.p_x if basis is Basis.X else 1.0 - self.p_x
        return p * p


class ChannelModel(BaseModel):
    """Physical-side constants (defaults from the reference testbed)"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    length_km: float = Field(5.0, ge=0)
    e_mis: float = Field(5e-4, ge=0, le=1)
    p_dc: float = Field(6e-7, ge=0, le=1)
    p_ap: float = Field(4e-2, ge=0, le=1)
    eta_bob: float = Field(0.1, gt=0, le=1)
    pulse_rate: float = Field(
        default_factory=lambda: get_settings().default_pulse_rate, gt=0
    )
    misalignment_includes_eta_bob: bool = False


@dataclass(frozen=True)
class ObservedStatistics:
    """Per-intensity detection and error counts, ordered (k1, k2, k3)"""

    n_x: Tuple[int, int, int]
    n_z: Tuple[int, int, int]
    m_x: Tuple[int, int, int]
    m_z: Tuple[int, int, int]
    n_pulses: int

    def __post_init__(self) -> None:
        for name in ("n_x", "n_z", "m_x", "m_z"):
            counts = getattr(self, name)
            if len(counts) != 3 or any(c < 0 for c in counts):
                raise ValueError(f"{name} must hold three non-negative counts")
        for n, m in zip(self.n_x + self.n_z, self.m_x + self.m_z):
            if m > n:
                raise ValueError("error counts cannot exceed detection counts")
        if self.n_pulses < sum(self.n_x) + sum(self.n_z):
            raise ValueError("pulse count is smaller than the detections")

    def detections(self, basis: Basis) -> Tuple[int, int, int]:
        return self.n_x if basis is Basis.X else self.n_z

    def errors(self, basis: Basis) -> Tuple[int, int, int]:
        return self.m_x if basis is Basis.X else self.m_z

    def counts(self, basis: Basis, kind: CountKind) -> Tuple[int, int, int]:
        if kind is CountKind.DETECTIONS:
            return self.detections(basis)
        return self.errors(basis)

    @property
    def raw_key_bits(self) -> int:
        return sum(self.n_x)

    def scaled(self, factor: int) -> "ObservedStatistics":
        """Statistics of `factor` independent blocks pooled together"""
        return ObservedStatistics(
            n_x=tuple(c * factor for c in self.n_x),  # type: ignore[arg-type]
            n_z=tuple(c * factor for c in self.n_z),  # type: ignore[arg-type]
            m_x=tuple(c * factor for c in self.m_x),  # type: ignore[arg-type]
            m_z=tuple(c * factor for c in self.m_z),  # type: ignore[arg-type]
            n_pulses=self.n_pulses * factor,
        )


@dataclass(frozen=True)
class KeyRateResult:
    """Secret key length of one block and its diagnostics"""

    ell: int
    n_pulses: int
    speed: float
    n_x: int = 0
    xi_x0: float = 0.0
    xi_x1: float = 0.0
    xi_z0: float = 0.0
    xi_z1: float = 0.0
    delta_z1: float = 0.0
    phi_x: float = 0.0
    phase_error_raw: float = 0.0
    lambda_ec: float = 0.0
    insufficient_statistics: bool = False
    diagnostics: Dict[str, str] = field(default_factory=dict, compare=False)

