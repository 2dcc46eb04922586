"""
Attacker endpoint that sniffs the control network and forges references
"""

from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np
import structlog

from qkdgrid.models.frames import MGCC_ID, CipherMode, Frame
from qkdgrid.services.secure_link import encode_reference, otp_encrypt

logger = structlog.get_logger(__name__)

ATTACKER_ID = 255


@dataclass
class _StreamView:
    last_measurement_seq: int = 0
    last_control_seq: int = 0
    answered: bool = True


@dataclass(frozen=True)
class ForgeAttempt:
    time: float
    controller_id: int
    mode: CipherMode
    seq: int


class Attacker:
    """Man-in-the-middle that spoofs the MGCC address.

    While the MGCC keeps answering measurements the attacker can only guess a
    pad, so it sends OTP frames under a random key. Once a measurement goes
    unanswered the link has run out of key and it falls back to plain frames.
    """

    def __init__(self, seed: int = 0, endpoint_id: int = ATTACKER_ID):
        self.endpoint_id = endpoint_id
        self.attempts: List[ForgeAttempt] = []
        self._views: Dict[int, _StreamView] = {}
        self._rng = np.random.default_rng(seed)

    def _view(self, controller_id: int) -> _StreamView:
        return self._views.setdefault(controller_id, _StreamView())

    def observe(self, frame: Frame) -> None:
        """Sniff a frame sent on the wire"""
        if frame.dst == MGCC_ID:
            view = self._view(frame.src)
            view.last_measurement_seq = frame.seq
            view.answered = False
        elif frame.src == MGCC_ID:
            view = self._view(frame.dst)
            view.last_control_seq = frame.seq
            view.answered = True

    def keys_flowing(self, controller_id: int) -> bool:
        return self._view(controller_id).answered

    def forge(
        self, controller_id: int, p_mw: float, q_mvar: float, now: float
    ) -> Frame:
        view = self._view(controller_id)
        seq = view.last_control_seq + 1
        payload = encode_reference(p_mw, q_mvar)

        if view.answered:
            guess = int.from_bytes(self._rng.bytes(8), "big")
            ciphertext = otp_encrypt(payload, guess)
            frame = Frame(seq, MGCC_ID, controller_id, CipherMode.OTP, ciphertext)
        else:
            frame = Frame(seq, MGCC_ID, controller_id, CipherMode.PLAIN, payload)

        self.attempts.append(ForgeAttempt(now, controller_id, frame.mode, seq))
        logger.warning(
            "Forged reference injected",
            t=now,
            controller=controller_id,
            mode=frame.mode.name,
            p_mw=p_mw,
            q_mvar=q_mvar,
        )
        return frame

    def get_status(self) -> Dict[str, Any]:
        """Get attacker status"""
        return {
            "attempts": len(self.attempts),
            "streams": {
                cid: {
                    "last_control_seq": v.last_control_seq,
                    "keys_flowing": v.answered,
                }
                for cid, v in self._views.items()
            },
        }
