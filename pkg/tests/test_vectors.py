"""Golden wire vectors: one frame per line, decode and re-encode byte-exactly."""

from pathlib import Path

import pytest

from cellgrid.wire import (
    CountData,
    Opcode,
    ReplyPayload,
    SwitchPathPayload,
    TeidPayload,
    decode_gtp,
    decode_ucp,
    encode_gtp,
    encode_ucp,
)

VECTOR_DIR = Path(__file__).parent / "vectors"


def _lines(name):
    return [
        line.strip()
        for line in (VECTOR_DIR / name).read_text().splitlines()
        if line.strip()
    ]


@pytest.mark.parametrize("line", _lines("ucp_frames.hex"))
def test_ucp_vectors_round_trip(line):
    frame = bytes.fromhex(line)
    msg = decode_ucp(frame)
    assert encode_ucp(msg) == frame


@pytest.mark.parametrize("line", _lines("gtp_frames.hex"))
def test_gtp_vectors_round_trip(line):
    frame = bytes.fromhex(line)
    header, payload = decode_gtp(frame)
    assert encode_gtp(header, payload) == frame


def test_pinned_ucp_fields():
    frames = [bytes.fromhex(line) for line in _lines("ucp_frames.hex")]
    first = decode_ucp(frames[0])
    assert first.cmi.raw == Opcode.NEW_TEID
    assert first.switch_id == 3
    assert first.payload == TeidPayload(42)

    path = decode_ucp(frames[2])
    assert path.payload == SwitchPathPayload(dst_switch=4, hops=(2, 7, 4))

    count = decode_ucp(frames[6])
    assert isinstance(count.payload, ReplyPayload)
    assert count.payload.orig.raw == Opcode.GET_UE_COUNT
    assert count.payload.data == CountData(3)


def test_pinned_gtp_fields():
    frames = [bytes.fromhex(line) for line in _lines("gtp_frames.hex")]
    header, payload = decode_gtp(frames[0])
    assert (header.teid, header.sequence_number, payload) == (42, 1, b"")
    header, payload = decode_gtp(frames[2])
    assert (header.teid, payload) == (7, b"HELLO")
