"""
Local controller endpoint and the plant stub it drives
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import structlog

from qkdgrid.agents.mgcc import LinkState, packet_key_bits
from qkdgrid.core.exceptions import AuthenticationError, KeyShortageError
from qkdgrid.models.frames import MGCC_ID, CipherMode, Frame
from qkdgrid.models.trace import PacketOutcome, ReferenceChange
from qkdgrid.services.keypool import KeyMirror, KeyPoolManager, packet_keys
from qkdgrid.services.secure_link import (
    decode_reference,
    encode_reference,
    open_frame,
    seal_frame,
)

logger = structlog.get_logger(__name__)


@dataclass
class PlantStub:
    """Battery inverter that records the P-Q references applied to it"""

    controller_id: int
    p_ref: float = 0.0
    q_ref: float = 0.0
    compromised: bool = False
    history: List[ReferenceChange] = field(default_factory=list)

    def apply(self, time: float, p_mw: float, q_mvar: float, authenticated: bool):
        self.p_ref, self.q_ref = p_mw, q_mvar
        self.compromised = not authenticated
        self.history.append(
            ReferenceChange(
                time,
                self.controller_id,
                p_mw,
                q_mvar,
                "mgcc" if authenticated else "unauthenticated",
            )
        )


class LocalController:
    """Controller endpoint: sends measurements, applies decrypted references"""

    def __init__(
        self,
        link: LinkState,
        manager: KeyPoolManager,
        mirror: KeyMirror,
        plant: Optional[PlantStub] = None,
        authenticate: bool = False,
        encrypt_measurements: bool = False,
    ):
        self.link = link
        self.controller_id = link.controller_id
        self.manager = manager
        self.mirror = mirror
        self.plant = plant or PlantStub(link.controller_id)
        self.authenticate = authenticate
        self.encrypt_measurements = encrypt_measurements
        self.measurement = (0.0, 0.0)
        self._seq_out = 0
        self._last_seq_in = 0

    def schedule_measurement(self, p_mw: float, q_mvar: float):
        self.measurement = (p_mw, q_mvar)

    def make_measurement(self, now: float) -> Optional[Frame]:
        """Build the next measurement frame, or None when it cannot be keyed"""
        payload = encode_reference(*self.measurement)
        counters = self.link.counters

        if not self.encrypt_measurements:
            self._seq_out += 1
            counters.measurements_sent += 1
            return Frame(
                self._seq_out, self.controller_id, MGCC_ID, CipherMode.PLAIN, payload
            )

        bits = packet_key_bits(self.authenticate)
        try:
            material = self.manager.extract(self.link.pool_id, bits, now)
        except KeyShortageError:
            counters.shortages += 1
            return None
        self._seq_out += 1
        keys = packet_keys(material)
        self.mirror.publish((self.controller_id, MGCC_ID), self._seq_out, keys)
        counters.measurements_sent += 1
        counters.key_bits_consumed += bits
        return seal_frame(self._seq_out, self.controller_id, MGCC_ID, payload, keys)

    def on_control(self, frame: Frame, now: float) -> List[PacketOutcome]:
        """Verify, decrypt and apply one control frame"""
        counters = self.link.counters
        if frame.dst != self.controller_id or frame.mode is CipherMode.BLOCK:
            counters.malformed += 1
            return [PacketOutcome.MALFORMED]

        if frame.mode is CipherMode.PLAIN:
            if not self.link.degraded:
                counters.decryption_mismatches += 1
                return [PacketOutcome.DECRYPTION_MISMATCH]
            p_mw, q_mvar = decode_reference(frame.payload)
            self.plant.apply(now, p_mw, q_mvar, authenticated=False)
            logger.warning(
                "Unauthenticated reference applied",
                t=now,
                controller=self.controller_id,
                p_mw=p_mw,
                q_mvar=q_mvar,
            )
            return [PacketOutcome.UNAUTHENTICATED_APPLIED]

        keys = self.mirror.claim((frame.src, self.controller_id), frame.seq)
        if keys is None or frame.seq <= self._last_seq_in:
            counters.decryption_mismatches += 1
            return [PacketOutcome.DECRYPTION_MISMATCH]
        try:
            payload = open_frame(frame, keys)
        except AuthenticationError:
            counters.authentication_failures += 1
            return [PacketOutcome.AUTHENTICATION_FAILURE]

        self._last_seq_in = frame.seq
        p_mw, q_mvar = decode_reference(payload)
        changed = (p_mw, q_mvar) != (self.plant.p_ref, self.plant.q_ref)
        if changed or self.plant.compromised:
            self.plant.apply(now, p_mw, q_mvar, authenticated=True)
        counters.control_applied += 1
        return [PacketOutcome.APPLIED]

    def get_status(self) -> Dict[str, Any]:
        """Get controller status"""
        return {
            "controller_id": self.controller_id,
            "p_ref": self.plant.p_ref,
            "q_ref": self.plant.q_ref,
            "compromised": self.plant.compromised,
            "last_seq_in": self._last_seq_in,
            "seq_out": self._seq_out,
        }
