"""
Scenario configuration models
"""

from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qkdgrid.models.qkd import ChannelModel, ProtocolParams


class KpsPolicy(BaseModel):
    """Key pool sharing policy (defaults: 5,000-bit threshold, 20,000-bit transfer)"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    threshold: int = Field(5_000, ge=0)
    transfer_size: int = Field(20_000, ge=1)
    donor_selection: Literal["highest_level"] = "highest_level"
    transfer_key_bits: int = Field(128, ge=1)

    @model_validator(mode="after")
    def _check_transfer_size(self) -> "KpsPolicy":
        if self.transfer_size <= self.transfer_key_bits:
            raise ValueError("transfer_size must exceed transfer_key_bits")
        return self


class ChannelConfig(BaseModel):
    """One QKD link between the MGCC and a local controller, with its key pool"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    controller_id: int = Field(1, ge=1, le=255)
    channel: ChannelModel = Field(default_factory=ChannelModel)
    protocol: ProtocolParams = Field(default_factory=ProtocolParams)
    threshold: Optional[int] = Field(None, ge=0)
    capacity: Optional[int] = Field(None, ge=1)
    # None primes the pool with one key block at t = 0
    initial_bits: Optional[int] = Field(None, ge=0)


class NoiseAttack(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["noise"] = "noise"
    time: float = Field(..., ge=0)
    channel: int = Field(1, ge=1, le=255)
    e_mis: float = Field(..., ge=0, le=1)


class ForgeAttack(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["forge"] = "forge"
    time: float = Field(..., ge=0)
    channel: int = Field(1, ge=1, le=255)
    p_mw: float = -6.0
    q_mvar: float = 0.0


Attack = Annotated[Union[NoiseAttack, ForgeAttack], Field(discriminator="kind")]


class ScheduledValue(BaseModel):
    """A P-Q pair taking effect at `time` on one channel"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    time: float = Field(..., ge=0)
    channel: int = Field(1, ge=1, le=255)
    p_mw: float = 0.0
    q_mvar: float = 0.0


class SimConfig(BaseModel):
    """Simulation scenario (defaults: 100 packets/s, 64-bit packets, KPS off)"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    duration: float = Field(60.0, gt=0)
    tx_rate: float = Field(100.0, gt=0)
    channels: List[ChannelConfig] = Field(default_factory=lambda: [ChannelConfig()])
    kps: KpsPolicy = Field(default_factory=KpsPolicy)
    kps_enabled: bool = False
    attacks: List[Attack] = Field(default_factory=list)
    references: List[ScheduledValue] = Field(default_factory=list)
    measurements: List[ScheduledValue] = Field(default_factory=list)
    seed: int = Field(0, ge=0)
    sample_interval: float = Field(1.0, gt=0)
    encrypt_measurements: bool = False
    authenticate: bool = False
    latency: float = Field(0.0, ge=0)
    statistics: Literal["expected", "sampled"] = "expected"

    @model_validator(mode="after")
    def _check_consistency(self) -> "SimConfig":
        ids = [c.controller_id for c in self.channels]
        if not ids:
            raise ValueError("at least one channel is required")
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate controller ids: {ids}")
        if self.latency >= 1.0 / self.tx_rate:
            raise ValueError("latency must be shorter than one packet cycle")
        for item in [*self.attacks, *self.references, *self.measurements]:
            if item.channel not in ids:
                raise ValueError(f"unknown channel {item.channel}")
            if item.time > self.duration:
                raise ValueError(
                    f"time {item.time} s is beyond duration {self.duration} s"
                )
        return self

    def channel_config(self, controller_id: int) -> ChannelConfig:
        for c in self.channels:
            if c.controller_id == controller_id:
                return c
        raise KeyError(controller_id)

    def pool_threshold(self, controller_id: int) -> int:
        threshold = self.channel_config(controller_id).threshold
        return self.kps.threshold if threshold is None else threshold
