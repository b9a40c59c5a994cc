"""Decode/encode error types for the wire codecs.

Every error a codec can raise derives from WireError, so callers that feed
untrusted octets can catch one class and treat the frame as garbage.
"""

from __future__ import annotations

from ..errors import CellgridError


class WireError(CellgridError):
    """Base class for frame encode/decode failures."""


class TruncatedHeader(WireError):
    """Fewer octets than the fixed header requires."""


class TruncatedFrame(WireError):
    """Frame ends inside a recognized protocol layer."""


class BadVersion(WireError):
    """Tunnel header carries a version this codec does not speak."""


class LengthMismatch(WireError):
    """Declared message length exceeds the octets actually present."""


class InvariantViolation(WireError):
    """Field combination that has no legal encoding (e.g. TEID without its flag)."""


class UnknownOpcode(WireError):
    """Control-message identifier outside the assigned opcode table."""


class PayloadLengthMismatch(WireError):
    """Control-message payload shorter or longer than its opcode dictates."""


class WrongEthertype(WireError):
    """Frame handed to a codec whose ethertype gate does not match."""
