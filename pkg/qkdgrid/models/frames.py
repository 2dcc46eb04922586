"""
Wire frame carried between the MGCC and local controllers
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Tuple

PAYLOAD_BITS = 64
PAYLOAD_MASK = (1 << PAYLOAD_BITS) - 1

MGCC_ID = 0


class CipherMode(IntEnum):
    PLAIN = 0
    OTP = 1
    BLOCK = 2


@dataclass(frozen=True)
class Frame:
    """One 20-octet datagram: header, 64-bit payload and optional tag"""

    seq: int
    src: int
    dst: int
    mode: CipherMode
    payload: int
    tag: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0 <= self.seq < 1 << 32:
            raise ValueError(f"seq out of range: {self.seq}")
        if not (0 <= self.src < 256 and 0 <= self.dst < 256):
            raise ValueError("endpoint ids must fit in one octet")
        if not 0 <= self.payload <= PAYLOAD_MASK:
            raise ValueError("payload must fit in 64 bits")
        if self.tag is not None and not 0 <= self.tag < 1 << 32:
            raise ValueError("tag must fit in 32 bits")

    @property
    def stream(self) -> Tuple[int, int]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class PacketKeys:
    """Key bits bound to one frame: the pad and an optional MAC key"""

    pad: int
    mac: Optional[int] = None
    pool_id: int = 0
    offset: int = 0
