"""
MGCC server - listens for measurements and answers with encrypted P-Q references
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple

import structlog

from qkdgrid.core.exceptions import (
    AuthenticationError,
    KeyShortageError,
    MalformedFrameError,
)
from qkdgrid.models.frames import MGCC_ID, PAYLOAD_BITS, CipherMode, Frame
from qkdgrid.models.trace import PacketCounters, PacketOutcome
from qkdgrid.services.keypool import KeyMirror, KeyPoolManager, packet_keys
from qkdgrid.services.secure_link import (
    decode_reference,
    encode_reference,
    open_frame,
    seal_frame,
)

logger = structlog.get_logger(__name__)


class MgccMode(str, Enum):
    LISTENING = "listening"
    SENDING = "sending"


@dataclass
class LinkState:
    """State of one MGCC <-> controller link, shared by both endpoints"""

    controller_id: int
    pool_id: int
    # Set when the MGCC pool could not key the last control frame
    degraded: bool = False
    counters: PacketCounters = field(default_factory=PacketCounters)


def packet_key_bits(authenticate: bool) -> int:
    return 2 * PAYLOAD_BITS if authenticate else PAYLOAD_BITS


class MgccServer:
    """Microgrid control center endpoint.

    The control law replays the scheduled reference of each controller; the
    server alternates LISTENING -> SENDING -> LISTENING per measurement.
    """

    def __init__(
        self,
        manager: KeyPoolManager,
        mirror: KeyMirror,
        links: Iterable[LinkState],
        authenticate: bool = False,
        encrypt_measurements: bool = False,
    ):
        self.manager = manager
        self.mirror = mirror
        self.links: Dict[int, LinkState] = {link.controller_id: link for link in links}
        self.authenticate = authenticate
        self.encrypt_measurements = encrypt_measurements
        self.mode = MgccMode.LISTENING
        self.sending_transitions = 0
        self.references: Dict[int, Tuple[float, float]] = {
            cid: (0.0, 0.0) for cid in self.links
        }
        self.measurements: Dict[int, Tuple[float, float]] = {}
        self._seq_out: Dict[int, int] = {cid: 0 for cid in self.links}
        self._last_seq_in: Dict[int, int] = {cid: 0 for cid in self.links}

    def schedule_reference(self, controller_id: int, p_mw: float, q_mvar: float):
        """Set the reference sent with the next control frames"""
        self.references[controller_id] = (p_mw, q_mvar)

    def _read_measurement(self, frame: Frame) -> Tuple[float, float]:
        stream = (frame.src, MGCC_ID)
        if not self.encrypt_measurements:
            if frame.mode is not CipherMode.PLAIN:
                raise MalformedFrameError("measurements are expected in plain mode")
            return decode_reference(frame.payload)

        keys = self.mirror.claim(stream, frame.seq)
        if keys is None or frame.seq <= self._last_seq_in[frame.src]:
            raise KeyError(frame.seq)
        return decode_reference(open_frame(frame, keys))

    def on_measurement(
        self, frame: Frame, now: float
    ) -> Tuple[Optional[Frame], List[PacketOutcome]]:
        """Handle one measurement; returns the control frame to send, if any"""
        if self.mode is not MgccMode.LISTENING:
            raise RuntimeError("MGCC received a measurement while sending")
        link = self.links.get(frame.src)
        if link is None or frame.dst != MGCC_ID:
            return None, [PacketOutcome.MALFORMED]

        counters = link.counters
        try:
            self.measurements[frame.src] = self._read_measurement(frame)
        except MalformedFrameError:
            counters.malformed += 1
            return None, [PacketOutcome.MALFORMED]
        except AuthenticationError:
            counters.authentication_failures += 1
            return None, [PacketOutcome.AUTHENTICATION_FAILURE]
        except KeyError:
            counters.decryption_mismatches += 1
            return None, [PacketOutcome.DECRYPTION_MISMATCH]
        self._last_seq_in[frame.src] = frame.seq
        counters.measurements_received += 1

        self.mode = MgccMode.SENDING
        try:
            control = self._send_control(link, now)
        finally:
            self.mode = MgccMode.LISTENING

        if control is None:
            return None, [PacketOutcome.SHORTAGE]
        self.sending_transitions += 1
        return control, [PacketOutcome.SENT]

    def _send_control(self, link: LinkState, now: float) -> Optional[Frame]:
        bits = packet_key_bits(self.authenticate)
        try:
            material = self.manager.extract(link.pool_id, bits, now)
        except KeyShortageError:
            link.degraded = True
            link.counters.shortages += 1
            return None

        link.degraded = False
        cid = link.controller_id
        self._seq_out[cid] += 1
        seq = self._seq_out[cid]
        keys = packet_keys(material)
        self.mirror.publish((MGCC_ID, cid), seq, keys)

        payload = encode_reference(*self.references[cid])
        link.counters.control_sent += 1
        link.counters.key_bits_consumed += bits
        return seal_frame(seq, MGCC_ID, cid, payload, keys)

    def get_status(self) -> Dict[str, Any]:
        """Get MGCC status"""
        return {
            "mode": self.mode.value,
            "sending_transitions": self.sending_transitions,
            "links": {
                cid: {
                    "pool_id": link.pool_id,
                    "degraded": link.degraded,
                    "pool_level": self.manager[link.pool_id].level,
                    "seq_out": self._seq_out[cid],
                    **link.counters.as_dict(),
                }
                for cid, link in self.links.items()
            },
        }
