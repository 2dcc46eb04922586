"""
Key pools fed by QKD blocks and drained by packet encryption and KPS transfers
"""

import hashlib
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    Deque,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import structlog

from qkdgrid.core.exceptions import (
    KeyLengthError,
    KeyShortageError,
    ParameterValidationError,
)
from qkdgrid.models.frames import PAYLOAD_BITS, PAYLOAD_MASK, PacketKeys
from qkdgrid.models.scenario import KpsPolicy
from qkdgrid.models.trace import EventType, KeyLedger, TransferEvent
from qkdgrid.services.secure_link import block_decrypt_transfer, block_encrypt_transfer

logger = structlog.get_logger(__name__)

WORD_BITS = 64


def _derive_seed(*parts: int) -> int:
    data = b":".join(str(p).encode() for p in parts)
    return int.from_bytes(hashlib.blake2b(data, digest_size=16).digest(), "big")


def _keystream_word(seed: int, index: int) -> int:
    digest = hashlib.blake2b(
        index.to_bytes(8, "big"), digest_size=8, key=seed.to_bytes(16, "big")
    ).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class StreamSegment:
    """Key bits of one QKD block, generated on demand from a seeded keystream"""

    seed: int
    length: int

    def bits(self, start: int, count: int) -> int:
        first = start // WORD_BITS
        last = (start + count - 1) // WORD_BITS
        acc = 0
        for index in range(first, last + 1):
            acc = (acc << WORD_BITS) | _keystream_word(self.seed, index)
        shift = (last - first + 1) * WORD_BITS - (start - first * WORD_BITS) - count
        return (acc >> shift) & ((1 << count) - 1)


@dataclass(frozen=True)
class LiteralSegment:
    """Key bits received in a KPS transfer, MSB first"""

    value: int
    length: int

    def bits(self, start: int, count: int) -> int:
        return (self.value >> (self.length - start - count)) & ((1 << count) - 1)


Segment = Union[StreamSegment, LiteralSegment]
Chunk = Tuple[Segment, int, int]


@dataclass(frozen=True)
class KeyMaterial:
    """Bits removed from a pool by one extraction.

    ``offset`` is the absolute position of the first bit in the pool's FIFO.
    The value is only computed when accessed.
    """

    pool_id: int
    offset: int
    length: int
    chunks: Tuple[Chunk, ...] = field(repr=False, compare=False, default=())

    @cached_property
    def value(self) -> int:
        acc = 0
        for segment, start, count in self.chunks:
            acc = (acc << count) | segment.bits(start, count)
        return acc

    def to_bytes(self) -> bytes:
        pad = -self.length % 8
        return (self.value << pad).to_bytes((self.length + pad) // 8, "big")


@dataclass(frozen=True)
class DepositReceipt:
    accepted: int
    overflow: int = 0


class KeyPool:
    """FIFO reservoir of secret key bits"""

    def __init__(
        self,
        pool_id: int,
        threshold: int = 0,
        capacity: Optional[int] = None,
        seed: int = 0,
    ):
        if threshold < 0:
            raise ParameterValidationError("threshold must be >= 0")
        if capacity is not None and capacity < 1:
            raise ParameterValidationError("capacity must be >= 1")
        self.pool_id = pool_id
        self.threshold = threshold
        self.capacity = capacity
        self.seed = seed
        self.total_deposited = 0
        self.total_extracted = 0
        self._blocks = 0
        # [segment, consumed bits]
        self._segments: Deque[List] = deque()

    @property
    def level(self) -> int:
        return self.total_deposited - self.total_extracted

    @property
    def cursor(self) -> int:
        """Absolute position of the next bit to be extracted"""
        return self.total_extracted

    def _accept(self, n_bits: int) -> DepositReceipt:
        if n_bits < 0:
            raise ParameterValidationError("cannot deposit a negative number of bits")
        if self.capacity is None:
            return DepositReceipt(accepted=n_bits)
        accepted = min(n_bits, self.capacity - self.level)
        return DepositReceipt(accepted=accepted, overflow=n_bits - accepted)

    def deposit(self, n_bits: int, seed: Optional[int] = None) -> DepositReceipt:
        """Append a fresh QKD block of `n_bits` bits"""
        receipt = self._accept(n_bits)
        if seed is None:
            seed = _derive_seed(self.seed, self.pool_id, self._blocks)
        self._blocks += 1
        if receipt.accepted:
            self._segments.append([StreamSegment(seed, receipt.accepted), 0])
            self.total_deposited += receipt.accepted
        return receipt

    def deposit_bits(self, value: int, n_bits: int) -> DepositReceipt:
        """Append explicit key bits, MSB first"""
        receipt = self._accept(n_bits)
        if receipt.accepted:
            segment = LiteralSegment(value >> receipt.overflow, receipt.accepted)
            self._segments.append([segment, 0])
            self.total_deposited += receipt.accepted
        return receipt

    def extract(self, n_bits: int) -> KeyMaterial:
        """Remove exactly `n_bits` bits FIFO, or raise without touching the pool"""
        if n_bits < 1:
            raise ParameterValidationError("extraction size must be >= 1")
        if self.level < n_bits:
            raise KeyShortageError(self.pool_id, n_bits, self.level)

        offset = self.cursor
        chunks = []
        remaining = n_bits
        while remaining:
            entry = self._segments[0]
            segment, consumed = entry
            take = min(remaining, segment.length - consumed)
            chunks.append((segment, consumed, take))
            remaining -= take
            if consumed + take == segment.length:
                self._segments.popleft()
            else:
                entry[1] = consumed + take
        self.total_extracted += n_bits
        return KeyMaterial(self.pool_id, offset, n_bits, tuple(chunks))

    def __repr__(self) -> str:
        return (
            f"KeyPool(id={self.pool_id}, level={self.level}, "
            f"threshold={self.threshold})"
        )


def _select_donor(
    recipient: KeyPool, pools: Sequence[KeyPool], policy: KpsPolicy
) -> Optional[KeyPool]:
    eligible = [
        pool
        for pool in pools
        if pool is not recipient and pool.level - policy.transfer_size > pool.threshold
    ]
    if not eligible:
        return None
    return max(eligible, key=lambda pool: (pool.level, -pool.pool_id))


def kps_check_and_transfer(
    pools: Iterable[KeyPool], policy: KpsPolicy, time: float = 0.0
) -> List[TransferEvent]:
    """Refill every pool below its threshold from the richest eligible donor"""
    ordered = sorted(pools, key=lambda pool: pool.pool_id)
    if len(ordered) < 2:
        raise ParameterValidationError("key pool sharing needs at least two pools")

    events = []
    for recipient in ordered:
        if recipient.level >= recipient.threshold:
            continue

        donor = _select_donor(recipient, ordered, policy)
        if donor is None:
            events.append(
                TransferEvent(EventType.NO_ELIGIBLE_DONOR, recipient.pool_id, time=time)
            )
            continue
        if recipient.level < policy.transfer_key_bits:
            events.append(
                TransferEvent(
                    EventType.RECIPIENT_KEY_SHORTAGE,
                    recipient.pool_id,
                    donor_id=donor.pool_id,
                    time=time,
                )
            )
            continue

        # MGCC side: seal donor bits under a key drawn from the recipient pool
        key = recipient.extract(policy.transfer_key_bits).to_bytes()
        material = donor.extract(policy.transfer_size)
        plaintext = material.to_bytes()
        sealed = block_encrypt_transfer(plaintext, key, policy.transfer_size)

        # Controller side: open with the mirrored key and store the shared bits
        opened = block_decrypt_transfer(sealed, key, policy.transfer_size)
        value = int.from_bytes(opened, "big") >> (-policy.transfer_size % 8)
        receipt = recipient.deposit_bits(value, policy.transfer_size)

        events.append(
            TransferEvent(
                EventType.TRANSFER,
                recipient.pool_id,
                donor_id=donor.pool_id,
                transferred_bits=policy.transfer_size,
                key_bits=policy.transfer_key_bits,
                plaintext_bytes=len(plaintext),
                ciphertext_bytes=len(sealed),
                overflow_bits=receipt.overflow,
                time=time,
            )
        )
        logger.info(
            "Key pool sharing transfer",
            t=time,
            recipient=recipient.pool_id,
            donor=donor.pool_id,
            bits=policy.transfer_size,
            recipient_level=recipient.level,
            donor_level=donor.level,
        )
    return events


class KeyPoolManager:
    """Owns the pool set of a run, its KPS policy and the bit ledger"""

    def __init__(
        self,
        pools: Iterable[KeyPool],
        policy: Optional[KpsPolicy] = None,
        kps_enabled: bool = False,
    ):
        self.pools: Dict[int, KeyPool] = {pool.pool_id: pool for pool in pools}
        self.policy = policy or KpsPolicy()
        self.kps_enabled = kps_enabled and len(self.pools) >= 2
        self.ledger = KeyLedger()
        self._events: List[TransferEvent] = []
        self._stalled: Set[Tuple[int, EventType]] = set()

    def __getitem__(self, pool_id: int) -> KeyPool:
        return self.pools[pool_id]

    @property
    def total_level(self) -> int:
        return sum(pool.level for pool in self.pools.values())

    def deposit_block(
        self, pool_id: int, n_bits: int, time: float = 0.0, seed: Optional[int] = None
    ) -> DepositReceipt:
        receipt = self.pools[pool_id].deposit(n_bits, seed)
        self.ledger.qkd_deposited += n_bits
        self.ledger.overflow_discarded += receipt.overflow
        self._run_kps(time)
        return receipt

    def extract(self, pool_id: int, n_bits: int, time: float = 0.0) -> KeyMaterial:
        """Extract packet key bits; KPS runs afterwards whether or not it succeeded"""
        try:
            material = self.pools[pool_id].extract(n_bits)
        except KeyShortageError:
            self._run_kps(time)
            raise
        self.ledger.packet_consumed += n_bits
        self._run_kps(time)
        return material

    def _run_kps(self, time: float) -> None:
        if not self.kps_enabled:
            return
        if all(pool.level >= pool.threshold for pool in self.pools.values()):
            self._stalled.clear()
            return
        # A stalled marker lasts until its pool is back at its threshold
        self._stalled = {
            (pool_id, kind)
            for pool_id, kind in self._stalled
            if self.pools[pool_id].level < self.pools[pool_id].threshold
        }

        for event in kps_check_and_transfer(self.pools.values(), self.policy, time):
            marker = (event.recipient_id, event.kind)
            if event.kind is EventType.TRANSFER:
                self.ledger.transfer_key_cost += event.key_bits
                self.ledger.overflow_discarded += event.overflow_bits
                self._stalled = {m for m in self._stalled if m[0] != event.recipient_id}
            elif marker in self._stalled:
                continue
            else:
                self._stalled.add(marker)
            self._events.append(event)

    def drain_events(self) -> List[TransferEvent]:
        events, self._events = self._events, []
        return events

    def balanced(self) -> bool:
        return self.ledger.balances(self.total_level)


def packet_keys(material: KeyMaterial) -> PacketKeys:
    """Split one extraction into the one-time pad and, if present, the MAC key"""
    if material.length == PAYLOAD_BITS:
        return PacketKeys(material.value, None, material.pool_id, material.offset)
    if material.length == 2 * PAYLOAD_BITS:
        return PacketKeys(
            material.value >> PAYLOAD_BITS,
            material.value & PAYLOAD_MASK,
            material.pool_id,
            material.offset,
        )
    raise KeyLengthError(f"packet keys need 64 or 128 bits, got {material.length}")


class KeyMirror:
    """Peer-side view of a synchronized pool replica, indexed by frame sequence.

    Receivers only accept increasing sequence numbers, so claiming `seq` on a
    stream also discards that stream's unclaimed keys below it.
    """

    def __init__(self) -> None:
        self._keys: Dict[Tuple[int, int], Dict[int, PacketKeys]] = {}

    def publish(self, stream: Tuple[int, int], seq: int, keys: PacketKeys) -> None:
        self._keys.setdefault(stream, {})[seq] = keys

    def claim(self, stream: Tuple[int, int], seq: int) -> Optional[PacketKeys]:
        """Keys for (stream, seq), usable once"""
        pending = self._keys.get(stream)
        if not pending or seq not in pending:
            return None
        keys = pending.pop(seq)
        for stale in [s for s in pending if s < seq]:
            del pending[stale]
        return keys

    def __len__(self) -> int:
        return sum(len(pending) for pending in self._keys.values())


__all__ = [
    "DepositReceipt",
    "KeyMaterial",
    "KeyMirror",
    "KeyPool",
    "KeyPoolManager",
    "kps_check_and_transfer",
    "packet_keys",
]
