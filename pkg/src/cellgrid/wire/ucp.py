"""Switch-management control protocol carried directly over Ethernet.

Frames use ethertype 0xF1F1.  The frame body starts with an 8-bit control
message identifier (CMI) whose top 3 bits name the operation type and whose
low 5 bits name the operation, followed by the 8-bit id of the switch the
message is from or to, followed by operation data::

    octet 0..5   destination MAC
    octet 6..11  source MAC
    octet 12..13 ethertype 0xF1F1
    octet 14     CMI  (op_type << 5 | op_id)
    octet 15     switch id
    octet 16..   payload, fixed per opcode (see docs/protocol.md)

Reply payloads repeat the CMI of the request they answer, then carry
answer data whose shape depends on that original opcode.  All multi-octet
integers are big-endian; variable-length lists carry a one-octet count.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from .errors import (
    InvariantViolation,
    PayloadLengthMismatch,
    TruncatedFrame,
    UnknownOpcode,
    WrongEthertype,
)
from .inet import BROADCAST_MAC, switch_mac

ETHERTYPE_UCP = 0xF1F1


class OpType(IntEnum):
    SECURITY = 0b000
    MONITORING = 0b001
    CONTROL_5G = 0b010
    DATA_5G = 0b011
    GNB_CONTROL = 0b110
    REPLY = 0b111


class Opcode(IntEnum):
    """Every assigned CMI byte; anything else is a decode error."""

    GET_IPV4_WHITELIST = 0x00
    GET_IPV4_BLACKLIST = 0x01
    ADD_IPV4_WHITELIST = 0x10
    ADD_IPV4_BLACKLIST = 0x11
    GET_MONITOR_STATS = 0x20
    GET_MONITOR_RULE = 0x21
    GET_MONITOR_RULE_COUNT = 0x22
    ADD_MONITOR_RULE = 0x30
    GET_UE_COUNT = 0x40
    DELETE_UE_ID = 0x50
    ADD_UE_IPV4 = 0x70
    NEW_TEID = 0xD0
    REMOVE_TEID = 0xD1
    INSTALL_PATH = 0xD3
    REPLY_NO_MODIFICATION = 0xE0
    REPLY_MODIFIED = 0xF0
    REPLY_FAILED = 0xF1
    REPLY_NEXTHOP_UPDATED = 0xF2


_ASSIGNED = {int(op) for op in Opcode}


@dataclass(frozen=True)
class Cmi:
    """Control message identifier split into its two bit fields."""

    op_type: int
    op_id: int

    @property
    def raw(self) -> int:
        return (self.op_type << 5) | self.op_id

    @property
    def is_reply(self) -> bool:
        return self.op_type == OpType.REPLY

    @property
    def name(self) -> str:
        return Opcode(self.raw).name


def split_cmi(raw: int) -> Cmi:
    """Split a CMI byte; unassigned (op_type, op_id) pairs are decode errors."""
    if not 0 <= raw <= 0xFF:
        raise UnknownOpcode(f"CMI byte out of range: {raw}")
    if raw not in _ASSIGNED:
        raise UnknownOpcode(f"unassigned CMI {raw:#04x} (op type {raw >> 5:03b})")
    return Cmi(op_type=raw >> 5, op_id=raw & 0x1F)


def cmi(op: Opcode | int) -> Cmi:
    return split_cmi(int(op))


# --- request payload variants ------------------------------------------------

@dataclass(frozen=True)
class Ipv4Payload:
    addr: int


@dataclass(frozen=True)
class TeidPayload:
    teid: int


@dataclass(frozen=True)
class UeIdPayload:
    ue_id: int


@dataclass(frozen=True)
class RuleIndexPayload:
    index: int


@dataclass(frozen=True)
class RuleSpecPayload:
    """Opaque header-pattern octets; the pipeline layer defines their schema."""

    spec: bytes


@dataclass(frozen=True)
class SwitchPathPayload:
    """Ordered routing path to install, addressed by its destination switch."""

    dst_switch: int
    hops: tuple[int, ...]


# --- reply payload -----------------------------------------------------------

@dataclass(frozen=True)
class Ipv4ListData:
    addrs: tuple[int, ...]


@dataclass(frozen=True)
class CounterSnapshotData:
    entries: tuple[tuple[int, int], ...]  # (rule index, 64-bit count)


@dataclass(frozen=True)
class CountData:
    value: int


@dataclass(frozen=True)
class RuleSpecData:
    spec: bytes


@dataclass(frozen=True)
class SwitchRefData:
    switch: int


ReplyData = (
    Ipv4ListData | CounterSnapshotData | CountData | RuleSpecData | SwitchRefData | None
)


@dataclass(frozen=True)
class ReplyPayload:
    """A reply names the request CMI it answers, then op-specific data."""

    orig: Cmi
    data: ReplyData = None


UcpPayload = (
    Ipv4Payload
    | TeidPayload
    | UeIdPayload
    | RuleIndexPayload
    | RuleSpecPayload
    | SwitchPathPayload
    | ReplyPayload
    | None
)


@dataclass(frozen=True)
class UcpMessage:
    switch_id: int
    cmi: Cmi
    payload: UcpPayload = None


def message(op: Opcode | int, switch_id: int, payload: UcpPayload = None) -> UcpMessage:
    return UcpMessage(switch_id=switch_id, cmi=cmi(op), payload=payload)


def reply(
    op: Opcode | int, switch_id: int, orig: Cmi | Opcode | int, data: ReplyData = None
) -> UcpMessage:
    orig_cmi = orig if isinstance(orig, Cmi) else cmi(orig)
    return UcpMessage(switch_id=switch_id, cmi=cmi(op), payload=ReplyPayload(orig_cmi, data))


# --- codec -------------------------------------------------------------------

_EMPTY_OPS = {
    Opcode.GET_IPV4_WHITELIST,
    Opcode.GET_IPV4_BLACKLIST,
    Opcode.GET_MONITOR_STATS,
    Opcode.GET_MONITOR_RULE_COUNT,
    Opcode.GET_UE_COUNT,
}
_IPV4_OPS = {Opcode.ADD_IPV4_WHITELIST, Opcode.ADD_IPV4_BLACKLIST, Opcode.ADD_UE_IPV4}
_TEID_OPS = {Opcode.NEW_TEID, Opcode.REMOVE_TEID}
_REPLY_OPS = {
    Opcode.REPLY_NO_MODIFICATION,
    Opcode.REPLY_MODIFIED,
    Opcode.REPLY_FAILED,
    Opcode.REPLY_NEXTHOP_UPDATED,
}
# replies to these gets carry data; everything else answers with orig CMI only
_LIST_GETS = {Opcode.GET_IPV4_WHITELIST, Opcode.GET_IPV4_BLACKLIST}
_COUNT_GETS = {Opcode.GET_MONITOR_RULE_COUNT, Opcode.GET_UE_COUNT}


def _check_u8(value: int, what: str) -> int:
    if not 0 <= value <= 0xFF:
        raise InvariantViolation(f"{what} out of 8-bit range: {value}")
    return value


def _check_u32(value: int, what: str) -> int:
    if not 0 <= value <= 0xFFFFFFFF:
        raise InvariantViolation(f"{what} out of 32-bit range: {value}")
    return value


def _encode_reply_data(op: Opcode, orig: Cmi, data: ReplyData) -> bytes:
    if op is Opcode.REPLY_NEXTHOP_UPDATED:
        if not isinstance(data, SwitchRefData):
            raise InvariantViolation("nexthop-updated reply needs a switch reference")
        return bytes([_check_u8(data.switch, "switch reference")])
    if op is not Opcode.REPLY_NO_MODIFICATION:
        if data is not None:
            raise InvariantViolation(f"{op.name} carries no data")
        return b""
    orig_op = Opcode(orig.raw)
    if orig_op in _LIST_GETS:
        if not isinstance(data, Ipv4ListData):
            raise InvariantViolation(f"reply to {orig_op.name} needs an IPv4 list")
        if len(data.addrs) > 0xFF:
            raise InvariantViolation("IPv4 list longer than one-octet count allows")
        out = bytearray([len(data.addrs)])
        for addr in data.addrs:
            out += struct.pack(">I", _check_u32(addr, "IPv4"))
        return bytes(out)
    if orig_op is Opcode.GET_MONITOR_STATS:
        if not isinstance(data, CounterSnapshotData):
            raise InvariantViolation("monitoring-stats reply needs a counter snapshot")
        if len(data.entries) > 0xFF:
            raise InvariantViolation("counter snapshot longer than one-octet count allows")
        out = bytearray([len(data.entries)])
        for index, count in data.entries:
            out += struct.pack(">BQ", _check_u8(index, "rule index"), count)
        return bytes(out)
    if orig_op is Opcode.GET_MONITOR_RULE:
        if not isinstance(data, RuleSpecData):
            raise InvariantViolation("monitoring-rule reply needs a rule spec")
        if len(data.spec) > 0xFF:
            raise InvariantViolation("rule spec longer than one-octet length allows")
        return bytes([len(data.spec)]) + data.spec
    if orig_op in _COUNT_GETS:
        if not isinstance(data, CountData):
            raise InvariantViolation(f"reply to {orig_op.name} needs a count")
        return struct.pack(">I", _check_u32(data.value, "count"))
    if data is not None:
        raise InvariantViolation(f"reply to {orig_op.name} carries no data")
    return b""


def _decode_reply_data(op: Opcode, orig: Cmi, body: bytes) -> ReplyData:
    if op is Opcode.REPLY_NEXTHOP_UPDATED:
        if len(body) != 1:
            raise PayloadLengthMismatch("nexthop-updated reply needs exactly one octet")
        return SwitchRefData(body[0])
    if op is not Opcode.REPLY_NO_MODIFICATION:
        if body:
            raise PayloadLengthMismatch(f"{op.name} carries no data, got {len(body)} octets")
        return None
    orig_op = Opcode(orig.raw)
    if orig_op in _LIST_GETS:
        if not body or len(body) != 1 + 4 * body[0]:
            raise PayloadLengthMismatch("malformed IPv4 list")
        addrs = struct.unpack(f">{body[0]}I", body[1:]) if body[0] else ()
        return Ipv4ListData(tuple(addrs))
    if orig_op is Opcode.GET_MONITOR_STATS:
        if not body or len(body) != 1 + 9 * body[0]:
            raise PayloadLengthMismatch("malformed counter snapshot")
        entries = tuple(
            struct.unpack_from(">BQ", body, 1 + 9 * i) for i in range(body[0])
        )
        return CounterSnapshotData(entries)
    if orig_op is Opcode.GET_MONITOR_RULE:
        if not body or len(body) != 1 + body[0]:
            raise PayloadLengthMismatch("malformed rule spec")
        return RuleSpecData(body[1:])
    if orig_op in _COUNT_GETS:
        if len(body) != 4:
            raise PayloadLengthMismatch("count reply needs exactly four octets")
        return CountData(struct.unpack(">I", body)[0])
    if body:
        raise PayloadLengthMismatch(f"reply to {orig_op.name} carries no data")
    return None


def _encode_payload(msg_cmi: Cmi, payload: UcpPayload) -> bytes:
    op = Opcode(msg_cmi.raw)
    if op in _EMPTY_OPS:
        if payload is not None:
            raise InvariantViolation(f"{op.name} takes no payload")
        return b""
    if op in _IPV4_OPS:
        if not isinstance(payload, Ipv4Payload):
            raise InvariantViolation(f"{op.name} needs an IPv4 payload")
        return struct.pack(">I", _check_u32(payload.addr, "IPv4"))
    if op in _TEID_OPS:
        if not isinstance(payload, TeidPayload):
            raise InvariantViolation(f"{op.name} needs a TEID payload")
        return struct.pack(">I", _check_u32(payload.teid, "TEID"))
    if op is Opcode.DELETE_UE_ID:
        if not isinstance(payload, UeIdPayload):
            raise InvariantViolation("DELETE_UE_ID needs a UE id payload")
        return struct.pack(">I", _check_u32(payload.ue_id, "UE id"))
    if op is Opcode.GET_MONITOR_RULE:
        if not isinstance(payload, RuleIndexPayload):
            raise InvariantViolation("GET_MONITOR_RULE needs a rule index")
        return bytes([_check_u8(payload.index, "rule index")])
    if op is Opcode.ADD_MONITOR_RULE:
        if not isinstance(payload, RuleSpecPayload):
            raise InvariantViolation("ADD_MONITOR_RULE needs a rule spec")
        if len(payload.spec) > 0xFF:
            raise InvariantViolation("rule spec longer than one-octet length allows")
        return bytes([len(payload.spec)]) + payload.spec
    if op is Opcode.INSTALL_PATH:
        if not isinstance(payload, SwitchPathPayload):
            raise InvariantViolation("INSTALL_PATH needs a switch path")
        if len(payload.hops) > 0xFF:
            raise InvariantViolation("path longer than one-octet count allows")
        out = bytearray([_check_u8(payload.dst_switch, "destination switch"), len(payload.hops)])
        out += bytes(_check_u8(h, "switch id") for h in payload.hops)
        return bytes(out)
    if op in _REPLY_OPS:
        if not isinstance(payload, ReplyPayload):
            raise InvariantViolation(f"{op.name} needs a reply payload")
        orig_byte = payload.orig.raw
        if orig_byte not in _ASSIGNED:
            raise UnknownOpcode(f"reply references unassigned CMI {orig_byte:#04x}")
        return bytes([orig_byte]) + _encode_reply_data(op, payload.orig, payload.data)
    raise UnknownOpcode(f"no payload codec for CMI {msg_cmi.raw:#04x}")  # pragma: no cover


def _decode_payload(msg_cmi: Cmi, body: bytes) -> UcpPayload:
    op = Opcode(msg_cmi.raw)
    if op in _EMPTY_OPS:
        if body:
            raise PayloadLengthMismatch(f"{op.name} takes no payload, got {len(body)} octets")
        return None
    if op in _IPV4_OPS:
        if len(body) != 4:
            raise PayloadLengthMismatch(f"{op.name} needs 4 octets, got {len(body)}")
        return Ipv4Payload(struct.unpack(">I", body)[0])
    if op in _TEID_OPS:
        if len(body) != 4:
            raise PayloadLengthMismatch(f"{op.name} needs 4 octets, got {len(body)}")
        return TeidPayload(struct.unpack(">I", body)[0])
    if op is Opcode.DELETE_UE_ID:
        if len(body) != 4:
            raise PayloadLengthMismatch(f"{op.name} needs 4 octets, got {len(body)}")
        return UeIdPayload(struct.unpack(">I", body)[0])
    if op is Opcode.GET_MONITOR_RULE:
        if len(body) != 1:
            raise PayloadLengthMismatch(f"{op.name} needs 1 octet, got {len(body)}")
        return RuleIndexPayload(body[0])
    if op is Opcode.ADD_MONITOR_RULE:
        if not body or len(body) != 1 + body[0]:
            raise PayloadLengthMismatch("malformed rule spec payload")
        return RuleSpecPayload(body[1:])
    if op is Opcode.INSTALL_PATH:
        if len(body) < 2 or len(body) != 2 + body[1]:
            raise PayloadLengthMismatch("malformed path payload")
        return SwitchPathPayload(dst_switch=body[0], hops=tuple(body[2:]))
    if op in _REPLY_OPS:
        if not body:
            raise PayloadLengthMismatch("reply payload needs the original CMI octet")
        orig = split_cmi(body[0])
        return ReplyPayload(orig, _decode_reply_data(op, orig, body[1:]))
    raise UnknownOpcode(f"no payload codec for CMI {msg_cmi.raw:#04x}")  # pragma: no cover


def encode_ucp(
    msg: UcpMessage, *, dst_mac: bytes = BROADCAST_MAC, src_mac: bytes | None = None
) -> bytes:
    """Serialize a message as a full Ethernet frame.

    MAC addresses are transport detail, not part of the message; the source
    defaults to a locally-administered MAC derived from the switch id.
    """
    if src_mac is None:
        src_mac = switch_mac(msg.switch_id if 0 <= msg.switch_id <= 0xFF else 0)
    if len(dst_mac) != 6 or len(src_mac) != 6:
        raise InvariantViolation("MAC addresses must be 6 octets")
    raw = msg.cmi.raw
    if raw not in _ASSIGNED:
        raise UnknownOpcode(f"unassigned CMI {raw:#04x}")
    body = _encode_payload(msg.cmi, msg.payload)
    return (
        dst_mac
        + src_mac
        + struct.pack(">H", ETHERTYPE_UCP)
        + bytes([raw, _check_u8(msg.switch_id, "switch id")])
        + body
    )


def decode_ucp(frame: bytes) -> UcpMessage:
    """Parse a full Ethernet frame into a message; strict about payload length."""
    if len(frame) < 14:
        raise TruncatedFrame(f"frame shorter than an Ethernet header: {len(frame)} octets")
    (ethertype,) = struct.unpack(">H", frame[12:14])
    if ethertype != ETHERTYPE_UCP:
        raise WrongEthertype(f"ethertype {ethertype:#06x}, expected {ETHERTYPE_UCP:#06x}")
    if len(frame) < 16:
        raise PayloadLengthMismatch("frame body shorter than CMI + switch id")
    msg_cmi = split_cmi(frame[14])
    switch_id = frame[15]
    payload = _decode_payload(msg_cmi, frame[16:])
    return UcpMessage(switch_id=switch_id, cmi=msg_cmi, payload=payload)
