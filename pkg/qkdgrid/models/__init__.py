"""
Domain models for qkdgrid
"""

from qkdgrid.models.frames import CipherMode, Frame
from qkdgrid.models.qkd import (
    Basis,
    ChannelModel,
    CountKind,
    KeyRateResult,
    ObservedStatistics,
    ProtocolParams,
)
from qkdgrid.models.scenario import (
    ChannelConfig,
    ForgeAttack,
    KpsPolicy,
    NoiseAttack,
    ScheduledValue,
    SimConfig,
)
from qkdgrid.models.trace import EventType, Interval, Trace, TransferEvent

__all__ = [
    "Basis",
    "ChannelConfig",
    "ChannelModel",
    "CipherMode",
    "CountKind",
    "EventType",
    "ForgeAttack",
    "Frame",
    "Interval",
    "KeyRateResult",
    "KpsPolicy",
    "NoiseAttack",
    "ObservedStatistics",
    "ProtocolParams",
    "ScheduledValue",
    "SimConfig",
    "Trace",
    "TransferEvent",
]
