import pytest
from hypothesis import given

from cellgrid.wire import (
    GtpHeader,
    InvariantViolation,
    LengthMismatch,
    TruncatedHeader,
    decode_gtp,
    encode_gtp,
    user_plane_header,
)

from strategies import gtp_header_and_payload

# hand-constructed from the bit layout: first octet 010_0_1_000
FRAME_WITH_TEID = bytes([0x48, 0xFF, 0x00, 0x04, 0, 0, 0, 0x2A, 0, 0, 1, 0])
FRAME_NO_TEID = bytes([0x40, 0x01, 0x00, 0x00, 0, 0, 0, 0])


def test_decode_with_teid():
    header, payload = decode_gtp(FRAME_WITH_TEID)
    assert header.version == 2
    assert header.piggyback is False
    assert header.teid_flag is True
    assert header.message_type == 0xFF
    assert header.message_length == 4
    assert header.teid == 42
    assert header.sequence_number == 1
    assert payload == b""


def test_decode_without_teid():
    header, payload = decode_gtp(FRAME_NO_TEID)
    assert header.teid is None
    assert header.teid_flag is False
    assert header.message_type == 1
    assert header.sequence_number == 0
    assert payload == b""


def test_decode_truncated():
    with pytest.raises(TruncatedHeader):
        decode_gtp(bytes(3))
    # T=1 needs the 12-octet header
    with pytest.raises(TruncatedHeader):
        decode_gtp(bytes([0x48, 0, 0, 0, 0, 0, 0, 0]))


def test_decode_length_mismatch():
    bad = bytes([0x40, 0x01, 0x00, 0x09, 0, 0, 0, 0])
    with pytest.raises(LengthMismatch):
        decode_gtp(bad)


def test_decode_bad_version():
    from cellgrid.wire import BadVersion

    with pytest.raises(BadVersion):
        decode_gtp(bytes([0x20] + [0] * 7))


def test_encode_round_trips_teid_frame():
    header, payload = decode_gtp(FRAME_WITH_TEID)
    assert encode_gtp(header, payload) == FRAME_WITH_TEID


def test_encode_zero_case():
    assert encode_gtp(GtpHeader(message_type=0)) == bytes([0x40, 0, 0, 0, 0, 0, 0, 0])


def test_encode_rejects_flag_contradictions():
    with pytest.raises(InvariantViolation):
        encode_gtp(GtpHeader(teid_flag=False, teid=7))
    with pytest.raises(InvariantViolation):
        encode_gtp(GtpHeader(teid_flag=True, teid=None))
    with pytest.raises(InvariantViolation):
        encode_gtp(GtpHeader(version=1))


def test_teid_offset_fidelity():
    frame = encode_gtp(user_plane_header(0xDEADBEEF, 9, 5), b"hello")
    assert frame[4:8] == bytes.fromhex("deadbeef")
    # without a TEID the sequence number starts at byte offset 4
    no_teid = encode_gtp(GtpHeader(message_length=4, sequence_number=0xA0B0C0))
    assert no_teid[4:7] == bytes.fromhex("a0b0c0")


def test_user_plane_header_length_convention():
    header = user_plane_header(7, 1, 20)
    assert header.message_length == 28
    assert header.header_len == 12


@given(gtp_header_and_payload())
def test_round_trip_identity(header_payload):
    header, payload = header_payload
    assert decode_gtp(encode_gtp(header, payload)) == (header, payload)
