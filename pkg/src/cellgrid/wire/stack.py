"""Frame classification and layered header parsing.

The parser walks the same fixed state machine the switch pipeline uses:
Ethernet, then IPv4, then UDP or SCTP, then the tunnel header, then the
encapsulated IPv4/TCP/UDP headers of the user packet.  A layer that is not
recognized ends the walk with the remaining octets kept opaque; a layer
that is recognized but cut short raises :class:`TruncatedFrame`.

Application content is modeled minimally: a 9-octet payload on an inner
TCP port-80 connection is a sensor heartbeat (the first two octets carry
the sensor id), and control-plane registration messages are a fixed
8-octet record (magic + UE id) behind the SCTP common header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

from .errors import BadVersion, LengthMismatch, TruncatedFrame, TruncatedHeader
from .gtp import GtpHeader, decode_gtp, encode_gtp, user_plane_header
from .ucp import ETHERTYPE_UCP

ETHERTYPE_IPV4 = 0x0800

IPPROTO_TCP = 6
IPPROTO_UDP = 17
IPPROTO_SCTP = 132

GTP_UDP_SRC_PORT = 2152
NGAP_SCTP_PORT = 38412
HTTP_PORT = 80
HEARTBEAT_LEN = 9

# 4-octet tag opening the simplified initial-UE registration record.
INITIAL_UE_MAGIC = b"NGIU"
INITIAL_UE_RECORD_LEN = 8

ETHERNET_HEADER_LEN = 14


class PacketClass(Enum):
    UCP = "ucp"
    NGAP = "ngap"
    GTP = "gtp"
    OTHER = "other"


@dataclass(frozen=True)
class EthernetHeader:
    dst: bytes
    src: bytes
    ethertype: int


@dataclass(frozen=True)
class Ipv4Info:
    src: int
    dst: int
    protocol: int
    header_len: int


@dataclass(frozen=True)
class PortPair:
    src: int
    dst: int


@dataclass(frozen=True)
class ParsedHeaders:
    ethernet: EthernetHeader
    ipv4: Ipv4Info | None = None
    udp: PortPair | None = None
    sctp: PortPair | None = None
    gtp: GtpHeader | None = None
    inner_ipv4: Ipv4Info | None = None
    inner_tcp: PortPair | None = None
    inner_udp: PortPair | None = None
    http_heartbeat: bytes | None = None
    ngap_ue_id: int | None = None
    payload: bytes = b""
    # byte offset of the tunnel header within the frame, kept so the pipeline
    # can rewrite the TEID by splicing instead of re-encoding every layer
    gtp_offset: int | None = None

    @property
    def heartbeat_sensor_id(self) -> int | None:
        if self.http_heartbeat is None:
            return None
        return (self.http_heartbeat[0] << 8) | self.http_heartbeat[1]


def classify_frame(frame: bytes) -> PacketClass:
    """Total, deterministic classification of any frame of Ethernet length.

    Checked in order: control ethertype, then IPv4/SCTP on the signaling
    port, then IPv4/UDP sourced from the tunnel port; everything else
    (including malformed IPv4 internals) is OTHER and handled as L2 traffic.
    """
    if len(frame) < ETHERNET_HEADER_LEN:
        raise TruncatedFrame(f"frame shorter than an Ethernet header: {len(frame)} octets")
    (ethertype,) = struct.unpack(">H", frame[12:14])
    if ethertype == ETHERTYPE_UCP:
        return PacketClass.UCP
    if ethertype != ETHERTYPE_IPV4:
        return PacketClass.OTHER
    ip = frame[ETHERNET_HEADER_LEN:]
    if len(ip) < 20 or ip[0] >> 4 != 4:
        return PacketClass.OTHER
    ihl = (ip[0] & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        return PacketClass.OTHER
    protocol = ip[9]
    l4 = ip[ihl:]
    if protocol == IPPROTO_SCTP and len(l4) >= 4:
        src, dst = struct.unpack(">HH", l4[:4])
        if NGAP_SCTP_PORT in (src, dst):
            return PacketClass.NGAP
    if protocol == IPPROTO_UDP and len(l4) >= 4:
        src = struct.unpack(">H", l4[:2])[0]
        if src == GTP_UDP_SRC_PORT:
            return PacketClass.GTP
    return PacketClass.OTHER


def _parse_ipv4(data: bytes, where: str) -> tuple[Ipv4Info, bytes] | None:
    """Returns None when the octets are not an IPv4 header at all."""
    if not data or data[0] >> 4 != 4:
        return None
    ihl = (data[0] & 0x0F) * 4
    if ihl < 20:
        return None
    if len(data) < ihl:
        raise TruncatedFrame(f"{where} IPv4 header cut short: {len(data)} < {ihl} octets")
    src, dst = struct.unpack(">II", data[12:20])
    return Ipv4Info(src=src, dst=dst, protocol=data[9], header_len=ihl), data[ihl:]


def parse_stack(frame: bytes) -> ParsedHeaders:
    """Parse every recognized layer of a frame.

    Never reads past the input: unrecognized content stops the walk with the
    rest returned as ``payload``; recognized-but-truncated layers raise
    :class:`TruncatedFrame`.
    """
    if len(frame) < ETHERNET_HEADER_LEN:
        raise TruncatedFrame(f"frame shorter than an Ethernet header: {len(frame)} octets")
    eth = EthernetHeader(
        dst=frame[0:6], src=frame[6:12], ethertype=struct.unpack(">H", frame[12:14])[0]
    )
    rest = frame[ETHERNET_HEADER_LEN:]
    fields: dict = {"ethernet": eth}

    if eth.ethertype != ETHERTYPE_IPV4:
        return ParsedHeaders(**fields, payload=rest)

    parsed = _parse_ipv4(rest, "outer")
    if parsed is None:
        return ParsedHeaders(**fields, payload=rest)
    ipv4, rest = parsed
    fields["ipv4"] = ipv4

    if ipv4.protocol == IPPROTO_UDP:
        if len(rest) < 8:
            raise TruncatedFrame(f"UDP header cut short: {len(rest)} octets")
        udp = PortPair(*struct.unpack(">HH", rest[:4]))
        fields["udp"] = udp
        rest = rest[8:]
        if udp.src == GTP_UDP_SRC_PORT and rest:
            return _parse_gtp_branch(frame, fields, rest)
        return ParsedHeaders(**fields, payload=rest)

    if ipv4.protocol == IPPROTO_SCTP:
        if len(rest) < 12:
            raise TruncatedFrame(f"SCTP common header cut short: {len(rest)} octets")
        sctp = PortPair(*struct.unpack(">HH", rest[:4]))
        fields["sctp"] = sctp
        rest = rest[12:]
        if NGAP_SCTP_PORT in (sctp.src, sctp.dst):
            if (
                len(rest) >= INITIAL_UE_RECORD_LEN
                and rest[:4] == INITIAL_UE_MAGIC
            ):
                fields["ngap_ue_id"] = struct.unpack(">I", rest[4:8])[0]
        return ParsedHeaders(**fields, payload=rest)

    return ParsedHeaders(**fields, payload=rest)


def _parse_gtp_branch(frame: bytes, fields: dict, rest: bytes) -> ParsedHeaders:
    gtp_offset = len(frame) - len(rest)
    try:
        gtp, rest = decode_gtp(rest)
    except TruncatedHeader as exc:
        raise TruncatedFrame(str(exc)) from exc
    except (BadVersion, LengthMismatch):
        # tunnel port but no parseable tunnel header: stop, keep octets opaque
        return ParsedHeaders(**fields, payload=rest)
    fields["gtp"] = gtp
    fields["gtp_offset"] = gtp_offset

    parsed = _parse_ipv4(rest, "inner")
    if parsed is None:
        return ParsedHeaders(**fields, payload=rest)
    inner, rest = parsed
    fields["inner_ipv4"] = inner

    if inner.protocol == IPPROTO_UDP:
        if len(rest) < 8:
            raise TruncatedFrame(f"inner UDP header cut short: {len(rest)} octets")
        fields["inner_udp"] = PortPair(*struct.unpack(">HH", rest[:4]))
        rest = rest[8:]
    elif inner.protocol == IPPROTO_TCP:
        if len(rest) < 20:
            raise TruncatedFrame(f"inner TCP header cut short: {len(rest)} octets")
        tcp = PortPair(*struct.unpack(">HH", rest[:4]))
        data_off = (rest[12] >> 4) * 4
        if data_off < 20:
            return ParsedHeaders(**fields, payload=rest)
        if len(rest) < data_off:
            raise TruncatedFrame(f"inner TCP options cut short: {len(rest)} < {data_off}")
        fields["inner_tcp"] = tcp
        rest = rest[data_off:]
        if HTTP_PORT in (tcp.src, tcp.dst) and len(rest) == HEARTBEAT_LEN:
            fields["http_heartbeat"] = rest
    return ParsedHeaders(**fields, payload=rest)


# --- frame builders ------------------------------------------------------------
# Synthetic traffic for the simulator and tests; checksums are carried as
# zeros and never verified anywhere in the pipeline.

def build_ethernet(dst: bytes, src: bytes, ethertype: int, body: bytes) -> bytes:
    return dst + src + struct.pack(">H", ethertype) + body


def build_ipv4(src: int, dst: int, protocol: int, body: bytes, *, ttl: int = 64) -> bytes:
    header = struct.pack(
        ">BBHHHBBHII", 0x45, 0, 20 + len(body), 0, 0, ttl, protocol, 0, src, dst
    )
    return header + body


def build_udp(src_port: int, dst_port: int, body: bytes) -> bytes:
    return struct.pack(">HHHH", src_port, dst_port, 8 + len(body), 0) + body


def build_sctp(src_port: int, dst_port: int, body: bytes) -> bytes:
    return struct.pack(">HHII", src_port, dst_port, 0, 0) + body


def build_tcp(src_port: int, dst_port: int, body: bytes) -> bytes:
    header = struct.pack(">HHIIBBHHH", src_port, dst_port, 0, 0, 5 << 4, 0x18, 0xFFFF, 0, 0)
    return header + body


def build_gtp_user_frame(
    *,
    eth_dst: bytes,
    eth_src: bytes,
    outer_src: int,
    outer_dst: int,
    teid: int,
    sequence_number: int,
    inner: bytes,
) -> bytes:
    """Tunnel-encapsulated user packet as seen on the wire between fabric nodes."""
    gtp = encode_gtp(user_plane_header(teid, sequence_number, len(inner)), inner)
    udp = build_udp(GTP_UDP_SRC_PORT, GTP_UDP_SRC_PORT, gtp)
    ip = build_ipv4(outer_src, outer_dst, IPPROTO_UDP, udp)
    return build_ethernet(eth_dst, eth_src, ETHERTYPE_IPV4, ip)


def build_inner_tcp_packet(src: int, dst: int, src_port: int, dst_port: int, body: bytes) -> bytes:
    return build_ipv4(src, dst, IPPROTO_TCP, build_tcp(src_port, dst_port, body))


def build_inner_udp_packet(src: int, dst: int, src_port: int, dst_port: int, body: bytes) -> bytes:
    return build_ipv4(src, dst, IPPROTO_UDP, build_udp(src_port, dst_port, body))


def build_heartbeat_inner(src: int, dst: int, sensor_id: int, *, src_port: int = 49152) -> bytes:
    """Inner packet for one sensor heartbeat: 9 octets of payload on port 80."""
    body = struct.pack(">H", sensor_id) + b"hb-beat"
    assert len(body) == HEARTBEAT_LEN
    return build_inner_tcp_packet(src, dst, src_port, HTTP_PORT, body)


def build_initial_ue_frame(
    *, eth_dst: bytes, eth_src: bytes, outer_src: int, outer_dst: int, ue_id: int
) -> bytes:
    """Registration frame announcing one UE id toward the mobility function."""
    record = INITIAL_UE_MAGIC + struct.pack(">I", ue_id)
    sctp = build_sctp(NGAP_SCTP_PORT, NGAP_SCTP_PORT, record)
    ip = build_ipv4(outer_src, outer_dst, IPPROTO_SCTP, sctp)
    return build_ethernet(eth_dst, eth_src, ETHERTYPE_IPV4, ip)
