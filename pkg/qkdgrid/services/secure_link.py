"""
Secure link: frame codec, one-time pad, transfer cipher and packet MAC
"""

import struct
from typing import Optional, Tuple

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from qkdgrid.core.exceptions import (
    AuthenticationError,
    KeyLengthError,
    MalformedFrameError,
    ParameterValidationError,
)
from qkdgrid.models.frames import (
    PAYLOAD_BITS,
    PAYLOAD_MASK,
    CipherMode,
    Frame,
    PacketKeys,
)

# seq | src | dst | mode | reserved | payload | tag
FRAME_FORMAT = ">IBBBBQI"
FRAME_SIZE = struct.calcsize(FRAME_FORMAT)
HEADER_SIZE = FRAME_SIZE - 4

TRANSFER_KEY_BITS = 128
# Each transfer key is used exactly once, so a fixed nonce is safe.
TRANSFER_NONCE = bytes(12)

MAC_KEY_BITS = 64
MAC_PRIME = (1 << 32) - 5

REFERENCE_SCALE = 1000
_INT32_MIN = -(1 << 31)
_INT32_MAX = (1 << 31) - 1


def otp_encrypt(payload: int, key: int, key_bits: int = PAYLOAD_BITS) -> int:
    """XOR a 64-bit payload with an equally long pad"""
    if key_bits != PAYLOAD_BITS:
        raise KeyLengthError(
            f"one-time pad needs {PAYLOAD_BITS} key bits, got {key_bits}"
        )
    if not 0 <= payload <= PAYLOAD_MASK:
        raise KeyLengthError("payload does not fit in 64 bits")
    if not 0 <= key <= PAYLOAD_MASK:
        raise KeyLengthError("key does not fit in 64 bits")
    return payload ^ key


def otp_decrypt(ciphertext: int, key: int, key_bits: int = PAYLOAD_BITS) -> int:
    return otp_encrypt(ciphertext, key, key_bits)


def _transfer_aad(bit_length: int) -> bytes:
    return b"kps" + bit_length.to_bytes(4, "big")


def block_encrypt_transfer(
    payload: bytes, key: bytes, bit_length: Optional[int] = None
) -> bytes:
    """Seal a key-pool transfer with AES-128-GCM.

    The ciphertext keeps the payload length and appends the 16-octet tag.
    ``bit_length`` is bound as associated data so a truncated transfer cannot
    be replayed as a shorter one.
    """
    if len(key) * 8 != TRANSFER_KEY_BITS:
        raise KeyLengthError(f"transfer key must be {TRANSFER_KEY_BITS} bits")
    bits = len(payload) * 8 if bit_length is None else bit_length
    return AESGCM(key).encrypt(TRANSFER_NONCE, payload, _transfer_aad(bits))


def block_decrypt_transfer(
    ciphertext: bytes, key: bytes, bit_length: Optional[int] = None
) -> bytes:
    """Open a sealed transfer; wrong keys and tampering raise AuthenticationError"""
    if len(key) * 8 != TRANSFER_KEY_BITS:
        raise KeyLengthError(f"transfer key must be {TRANSFER_KEY_BITS} bits")
    bits = (len(ciphertext) - 16) * 8 if bit_length is None else bit_length
    try:
        return AESGCM(key).decrypt(TRANSFER_NONCE, ciphertext, _transfer_aad(bits))
    except InvalidTag as e:
        raise AuthenticationError("transfer failed authentication") from e


def poly_mac(key: int, message: bytes) -> int:
    """One-time polynomial MAC over 32-bit words modulo 2^32 - 5.

    The high key half is the evaluation point, the low half masks the result.
    """
    if not 0 <= key < 1 << MAC_KEY_BITS:
        raise KeyLengthError(f"MAC key must fit in {MAC_KEY_BITS} bits")
    r = (key >> 32) % MAC_PRIME
    s = key & 0xFFFFFFFF
    padded = message + bytes(-len(message) % 4)
    acc = 0
    for (word,) in struct.iter_unpack(">I", padded):
        acc = (acc + word + 1) * r % MAC_PRIME
    return (acc + s) & 0xFFFFFFFF


def frame_encode(frame: Frame) -> bytes:
    return struct.pack(
        FRAME_FORMAT,
        frame.seq,
        frame.src,
        frame.dst,
        int(frame.mode),
        0,
        frame.payload,
        frame.tag or 0,
    )


def frame_decode(octets: bytes) -> Frame:
    if len(octets) != FRAME_SIZE:
        raise MalformedFrameError(f"expected {FRAME_SIZE} octets, got {len(octets)}")
    seq, src, dst, mode, _, payload, tag = struct.unpack(FRAME_FORMAT, octets)
    try:
        cipher_mode = CipherMode(mode)
    except ValueError as e:
        raise MalformedFrameError(f"unknown mode tag {mode}") from e
    return Frame(
        seq=seq, src=src, dst=dst, mode=cipher_mode, payload=payload, tag=tag or None
    )


def frame_header(frame: Frame) -> bytes:
    """Octets covered by the packet MAC"""
    return frame_encode(frame)[:HEADER_SIZE]


def _to_fixed(value: float) -> int:
    scaled = round(value * REFERENCE_SCALE)
    if not _INT32_MIN <= scaled <= _INT32_MAX:
        raise ParameterValidationError(
            f"{value} is outside the 32-bit fixed-point range"
        )
    return scaled & 0xFFFFFFFF


def _from_fixed(field: int) -> float:
    if field & 0x80000000:
        field -= 1 << 32
    return field / REFERENCE_SCALE


def encode_reference(p_mw: float, q_mvar: float) -> int:
    """Pack a P-Q pair into a 64-bit payload, P in the high half"""
    return (_to_fixed(p_mw) << 32) | _to_fixed(q_mvar)


def decode_reference(payload: int) -> Tuple[float, float]:
    return _from_fixed(payload >> 32), _from_fixed(payload & 0xFFFFFFFF)


def seal_frame(seq: int, src: int, dst: int, payload: int, keys: PacketKeys) -> Frame:
    """OTP-encrypt a payload and tag the frame when a MAC key is present"""
    frame = Frame(seq, src, dst, CipherMode.OTP, otp_encrypt(payload, keys.pad))
    if keys.mac is None:
        return frame
    tag = poly_mac(keys.mac, frame_header(frame))
    return Frame(seq, src, dst, CipherMode.OTP, frame.payload, tag)


def open_frame(frame: Frame, keys: PacketKeys) -> int:
    """Verify and decrypt an OTP frame with the keys bound to its sequence number"""
    if frame.mode is not CipherMode.OTP:
        raise MalformedFrameError(f"expected an OTP frame, got {frame.mode.name}")
    if keys.mac is not None:
        expected = poly_mac(keys.mac, frame_header(frame))
        if (frame.tag or 0) != expected:
            raise AuthenticationError(f"bad tag on frame {frame.seq}")
    return otp_decrypt(frame.payload, keys.pad)
