"""GTPv2 tunnel header codec.

Header layout, big-endian throughout::

    bit   0..2   version (always 2 here)
    bit   3      piggybacking flag
    bit   4      TEID flag (T)
    bit   5..7   spare, encoded as 0
    bit   8..15  message type
    bit  16..31  message length (octets following the first 4 header octets)
    bit  32..63  TEID, present iff T = 1
    next 24 bits sequence number (bit 64 with T = 1, bit 32 otherwise)

One spare octet after the 24-bit sequence number pads the header to a
32-bit boundary: 12 octets with a TEID, 8 without.  ``message_length`` is
carried verbatim; :func:`decode_gtp` only rejects values larger than the
octets actually present, so callers building frames by hand may under-fill
it (use :func:`user_plane_header` to get the conventional value).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

from .errors import BadVersion, InvariantViolation, LengthMismatch, TruncatedHeader

GTP_VERSION = 2

# Message type values fixed by this artifact (the tunnel carries user data
# and connectivity-echo frames; nothing else is generated).
MSG_ECHO_REQUEST = 1
MSG_ECHO_RESPONSE = 2
MSG_USER_DATA = 255

HEADER_LEN_WITH_TEID = 12
HEADER_LEN_NO_TEID = 8


@dataclass(frozen=True)
class GtpHeader:
    """Decoded tunnel header; ``teid`` must be present iff ``teid_flag`` is set."""

    version: int = GTP_VERSION
    piggyback: bool = False
    teid_flag: bool = False
    message_type: int = MSG_USER_DATA
    message_length: int = 0
    teid: int | None = None
    sequence_number: int = 0

    @property
    def header_len(self) -> int:
        return HEADER_LEN_WITH_TEID if self.teid_flag else HEADER_LEN_NO_TEID

    def with_teid(self, teid: int) -> "GtpHeader":
        """Copy of this header carrying ``teid`` (used for downstream rewrite)."""
        if not self.teid_flag:
            raise InvariantViolation("cannot rewrite TEID on a header with T=0")
        return replace(self, teid=teid)


def user_plane_header(teid: int, sequence_number: int, payload_len: int) -> GtpHeader:
    """User-data header with the conventional message length for ``payload_len``."""
    return GtpHeader(
        teid_flag=True,
        message_type=MSG_USER_DATA,
        message_length=8 + payload_len,
        teid=teid,
        sequence_number=sequence_number,
    )


def echo_header(sequence_number: int, *, response: bool = False) -> GtpHeader:
    return GtpHeader(
        message_type=MSG_ECHO_RESPONSE if response else MSG_ECHO_REQUEST,
        message_length=4,
        sequence_number=sequence_number,
    )


def encode_gtp(header: GtpHeader, payload: bytes = b"") -> bytes:
    """Serialize a header followed by ``payload``.

    Raises InvariantViolation when the TEID flag disagrees with the TEID
    field or any field is out of range.  ``message_length`` is written
    verbatim, never recomputed.
    """
    if header.version != GTP_VERSION:
        raise InvariantViolation(f"only version {GTP_VERSION} frames are produced")
    if header.teid_flag and header.teid is None:
        raise InvariantViolation("teid_flag set but no TEID given")
    if not header.teid_flag and header.teid is not None:
        raise InvariantViolation("TEID given but teid_flag clear")
    if not 0 <= header.message_type <= 0xFF:
        raise InvariantViolation(f"message type out of range: {header.message_type}")
    if not 0 <= header.message_length <= 0xFFFF:
        raise InvariantViolation(f"message length out of range: {header.message_length}")
    if not 0 <= header.sequence_number <= 0xFFFFFF:
        raise InvariantViolation(f"sequence number out of range: {header.sequence_number}")

    first = (header.version << 5) | (int(header.piggyback) << 4) | (int(header.teid_flag) << 3)
    out = bytearray(struct.pack(">BBH", first, header.message_type, header.message_length))
    if header.teid_flag:
        assert header.teid is not None
        if not 0 <= header.teid <= 0xFFFFFFFF:
            raise InvariantViolation(f"TEID out of range: {header.teid}")
        out += struct.pack(">I", header.teid)
    seq = header.sequence_number
    out += bytes([(seq >> 16) & 0xFF, (seq >> 8) & 0xFF, seq & 0xFF, 0])
    return bytes(out) + payload


def decode_gtp(data: bytes) -> tuple[GtpHeader, bytes]:
    """Parse a header, returning it with the octets after the fixed header.

    The declared message length must not exceed the octets following the
    first 4 header octets; the spare bits and pad octet are ignored on read.
    """
    if len(data) < HEADER_LEN_NO_TEID:
        raise TruncatedHeader(f"need at least {HEADER_LEN_NO_TEID} octets, got {len(data)}")
    first = data[0]
    version = first >> 5
    if version != GTP_VERSION:
        raise BadVersion(f"version {version}, expected {GTP_VERSION}")
    piggyback = bool((first >> 4) & 1)
    teid_flag = bool((first >> 3) & 1)
    message_type = data[1]
    (message_length,) = struct.unpack(">H", data[2:4])

    if teid_flag:
        if len(data) < HEADER_LEN_WITH_TEID:
            raise TruncatedHeader(
                f"T=1 header needs {HEADER_LEN_WITH_TEID} octets, got {len(data)}"
            )
        (teid,) = struct.unpack(">I", data[4:8])
        seq_off = 8
        header_len = HEADER_LEN_WITH_TEID
    else:
        teid = None
        seq_off = 4
        header_len = HEADER_LEN_NO_TEID
    seq = (data[seq_off] << 16) | (data[seq_off + 1] << 8) | data[seq_off + 2]

    if message_length > len(data) - 4:
        raise LengthMismatch(
            f"declared length {message_length} exceeds {len(data) - 4} remaining octets"
        )
    header = GtpHeader(
        version=version,
        piggyback=piggyback,
        teid_flag=teid_flag,
        message_type=message_type,
        message_length=message_length,
        teid=teid,
        sequence_number=seq,
    )
    return header, data[header_len:]
