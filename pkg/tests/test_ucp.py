import pytest
from hypothesis import given

from cellgrid.wire import (
    Cmi,
    CountData,
    Ipv4ListData,
    Ipv4Payload,
    Opcode,
    PayloadLengthMismatch,
    ReplyPayload,
    SwitchPathPayload,
    TeidPayload,
    UcpMessage,
    UnknownOpcode,
    WrongEthertype,
    cmi,
    decode_ucp,
    encode_ucp,
    ipv4_to_int,
    message,
    reply,
    split_cmi,
)

from strategies import ucp_messages

OPCODE_TABLE = {
    # security
    0x00: (0b000, 0b00000),
    0x01: (0b000, 0b00001),
    0x10: (0b000, 0b10000),
    0x11: (0b000, 0b10001),
    # monitoring
    0x20: (0b001, 0b00000),
    0x21: (0b001, 0b00001),
    0x22: (0b001, 0b00010),
    0x30: (0b001, 0b10000),
    # 5G control / data
    0x40: (0b010, 0b00000),
    0x50: (0b010, 0b10000),
    0x70: (0b011, 0b10000),
    # gNB control
    0xD0: (0b110, 0b10000),
    0xD1: (0b110, 0b10001),
    0xD3: (0b110, 0b10011),
    # reply
    0xE0: (0b111, 0b00000),
    0xF0: (0b111, 0b10000),
    0xF1: (0b111, 0b10001),
    0xF2: (0b111, 0b10010),
}


@pytest.mark.parametrize("raw,expected", sorted(OPCODE_TABLE.items()))
def test_split_cmi_assigned(raw, expected):
    c = split_cmi(raw)
    assert (c.op_type, c.op_id) == expected
    assert c.raw == raw


def test_split_cmi_named_rows():
    assert split_cmi(0xD0) == Cmi(0b110, 0b10000)  # new tunnel id
    assert split_cmi(0xF2) == Cmi(0b111, 0b10010)  # nexthop updated


@pytest.mark.parametrize("raw", [0b10100000, 0x02, 0x1F, 0x41, 0x71, 0xD2, 0xFF])
def test_split_cmi_unassigned(raw):
    with pytest.raises(UnknownOpcode):
        split_cmi(raw)


def test_new_teid_round_trip():
    msg = message(Opcode.NEW_TEID, 3, TeidPayload(42))
    assert decode_ucp(encode_ucp(msg)) == msg


def test_empty_payload_get():
    msg = message(Opcode.GET_IPV4_WHITELIST, 0)
    frame = encode_ucp(msg)
    assert frame[14] == 0x00
    assert decode_ucp(frame) == msg


def test_path_payload_layout():
    msg = message(Opcode.INSTALL_PATH, 2, SwitchPathPayload(4, (2, 7, 4)))
    frame = encode_ucp(msg)
    # CMI, switch id, then destination + one-octet count + hop list
    assert frame[14:] == bytes([0xD3, 2, 4, 3, 2, 7, 4])
    assert decode_ucp(frame) == msg


def test_switch_id_always_present():
    for op in (Opcode.GET_UE_COUNT, Opcode.GET_MONITOR_STATS):
        frame = encode_ucp(message(op, 9))
        assert frame[15] == 9


def test_reply_carries_original_cmi():
    msg = reply(Opcode.REPLY_MODIFIED, 5, Opcode.ADD_IPV4_WHITELIST)
    frame = encode_ucp(msg)
    assert frame[14] == 0xF0
    assert frame[16] == 0x10
    assert decode_ucp(frame) == msg


def test_reply_list_data():
    addrs = (ipv4_to_int("10.0.0.1"), ipv4_to_int("10.0.0.2"))
    msg = reply(Opcode.REPLY_NO_MODIFICATION, 1, Opcode.GET_IPV4_WHITELIST, Ipv4ListData(addrs))
    decoded = decode_ucp(encode_ucp(msg))
    assert isinstance(decoded.payload, ReplyPayload)
    assert decoded.payload.data == Ipv4ListData(addrs)


def test_reply_count_data():
    msg = reply(Opcode.REPLY_NO_MODIFICATION, 1, Opcode.GET_UE_COUNT, CountData(3))
    assert decode_ucp(encode_ucp(msg)) == msg


def test_decode_rejects_wrong_ethertype():
    frame = bytearray(encode_ucp(message(Opcode.GET_UE_COUNT, 1)))
    frame[12:14] = b"\x08\x00"
    with pytest.raises(WrongEthertype):
        decode_ucp(bytes(frame))


def test_decode_rejects_bad_lengths():
    frame = encode_ucp(message(Opcode.NEW_TEID, 3, TeidPayload(42)))
    with pytest.raises(PayloadLengthMismatch):
        decode_ucp(frame[:-1])
    with pytest.raises(PayloadLengthMismatch):
        decode_ucp(frame + b"\x00")
    with pytest.raises(PayloadLengthMismatch):
        decode_ucp(frame[:15])


def test_decode_rejects_unknown_cmi():
    frame = bytearray(encode_ucp(message(Opcode.GET_UE_COUNT, 1)))
    frame[14] = 0xA0
    with pytest.raises(UnknownOpcode):
        decode_ucp(bytes(frame))


def test_encode_rejects_wrong_payload_type():
    from cellgrid.wire import InvariantViolation

    with pytest.raises(InvariantViolation):
        encode_ucp(UcpMessage(1, cmi(Opcode.NEW_TEID), Ipv4Payload(1)))
    with pytest.raises(InvariantViolation):
        encode_ucp(UcpMessage(1, cmi(Opcode.GET_UE_COUNT), TeidPayload(1)))


@given(ucp_messages())
def test_round_trip_identity(msg):
    assert decode_ucp(encode_ucp(msg)) == msg
