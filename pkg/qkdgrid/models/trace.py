"""
Simulation trace records
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class EventType(str, Enum):
    DEPOSIT = "deposit"
    OVERFLOW = "overflow"
    EXHAUSTION_START = "exhaustion_start"
    EXHAUSTION_END = "exhaustion_end"
    TRANSFER = "transfer"
    NO_ELIGIBLE_DONOR = "no_eligible_donor"
    RECIPIENT_KEY_SHORTAGE = "recipient_key_shortage"
    NOISE_ATTACK = "noise_attack"
    FORGE_ATTACK = "forge_attack"


class PacketOutcome(str, Enum):
    SENT = "sent"
    APPLIED = "applied"
    SHORTAGE = "shortage"
    MALFORMED = "malformed"
    DECRYPTION_MISMATCH = "decryption_mismatch"
    AUTHENTICATION_FAILURE = "authentication_failure"
    UNAUTHENTICATED_APPLIED = "unauthenticated_applied"


@dataclass(frozen=True)
class TransferEvent:
    """Outcome of one KPS decision for a pool below its threshold"""

    kind: EventType
    recipient_id: int
    donor_id: Optional[int] = None
    transferred_bits: int = 0
    key_bits: int = 0
    plaintext_bytes: int = 0
    ciphertext_bytes: int = 0
    overflow_bits: int = 0
    time: float = 0.0

    @property
    def recipient_gain(self) -> int:
        return self.transferred_bits - self.key_bits


@dataclass(frozen=True)
class PoolSample:
    time: float
    pool_id: int
    level: int


@dataclass(frozen=True)
class PoolEvent:
    """A change or condition of one pool; transfers carry the donor as counterpart"""

    time: float
    pool_id: int
    level: int
    event_type: EventType
    delta: int = 0
    counterpart_id: Optional[int] = None
    counterpart_delta: Optional[int] = None


@dataclass(frozen=True)
class KeyBlock:
    time: float
    pool_id: int
    ell: int
    n_pulses: int
    e_mis: float


@dataclass
class Interval:
    pool_id: int
    start: float
    end: Optional[float] = None

    @property
    def length(self) -> float:
        return 0.0 if self.end is None else self.end - self.start


@dataclass(frozen=True)
class ReferenceChange:
    time: float
    controller_id: int
    p_mw: float
    q_mvar: float
    source: str


@dataclass
class PacketCounters:
    """Per-channel packet outcome counters"""

    measurements_sent: int = 0
    measurements_received: int = 0
    control_sent: int = 0
    control_applied: int = 0
    shortages: int = 0
    decryption_mismatches: int = 0
    authentication_failures: int = 0
    malformed: int = 0
    dropped: int = 0
    forge_attempts: int = 0
    forge_accepted: int = 0
    key_bits_consumed: int = 0

    def as_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass
class KeyLedger:
    """Bit accounting across all pools of a run"""

    qkd_deposited: int = 0
    packet_consumed: int = 0
    transfer_key_cost: int = 0
    overflow_discarded: int = 0

    def balances(self, total_level: int) -> bool:
        return self.qkd_deposited == (
            total_level
            + self.packet_consumed
            + self.transfer_key_cost
            + self.overflow_discarded
        )

    def as_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass
class Trace:
    """Time-ordered record of one simulation run"""

    duration: float
    samples: List[PoolSample] = field(default_factory=list)
    events: List[PoolEvent] = field(default_factory=list)
    blocks: List[KeyBlock] = field(default_factory=list)
    transfers: List[TransferEvent] = field(default_factory=list)
    exhaustion_intervals: List[Interval] = field(default_factory=list)
    compromised_intervals: List[Interval] = field(default_factory=list)
    reference_changes: List[ReferenceChange] = field(default_factory=list)
    packet_counters: Dict[int, PacketCounters] = field(default_factory=dict)
    ledger: KeyLedger = field(default_factory=KeyLedger)
    final_levels: Dict[int, int] = field(default_factory=dict)

    def intervals_for(self, pool_id: int) -> List[Interval]:
        return [i for i in self.exhaustion_intervals if i.pool_id == pool_id]

    def exhausted_time(self, pool_id: Optional[int] = None) -> float:
        return sum(
            i.length
            for i in self.exhaustion_intervals
            if pool_id is None or i.pool_id == pool_id
        )

    def min_level(self, pool_id: int) -> int:
        return min(s.level for s in self.samples if s.pool_id == pool_id)

    def summary(self) -> Dict[str, Any]:
        """Compact run summary for logs and the HTTP API"""
        return {
            "duration": self.duration,
            "key_blocks": len(self.blocks),
            "transfers": sum(1 for t in self.transfers if t.kind is EventType.TRANSFER),
            "exhaustion_intervals": [asdict(i) for i in self.exhaustion_intervals],
            "compromised_intervals": [asdict(i) for i in self.compromised_intervals],
            "exhausted_seconds": {
                pool_id: self.exhausted_time(pool_id) for pool_id in self.final_levels
            },
            "final_levels": dict(self.final_levels),
            "packets": {k: v.as_dict() for k, v in self.packet_counters.items()},
            "ledger": self.ledger.as_dict(),
        }
