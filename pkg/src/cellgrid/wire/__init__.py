"""Byte-exact codecs for every frame the fabric exchanges."""

from .errors import (
    BadVersion,
    InvariantViolation,
    LengthMismatch,
    PayloadLengthMismatch,
    TruncatedFrame,
    TruncatedHeader,
    UnknownOpcode,
    WireError,
    WrongEthertype,
)
from .gtp import (
    GTP_VERSION,
    MSG_ECHO_REQUEST,
    MSG_ECHO_RESPONSE,
    MSG_USER_DATA,
    GtpHeader,
    decode_gtp,
    echo_header,
    encode_gtp,
    user_plane_header,
)
from .inet import ipv4_to_int, ipv4_to_str, mac_to_bytes, mac_to_str, prefix_mask, switch_mac
from .stack import (
    ETHERTYPE_IPV4,
    GTP_UDP_SRC_PORT,
    HEARTBEAT_LEN,
    HTTP_PORT,
    INITIAL_UE_MAGIC,
    IPPROTO_SCTP,
    IPPROTO_TCP,
    IPPROTO_UDP,
    NGAP_SCTP_PORT,
    EthernetHeader,
    Ipv4Info,
    PacketClass,
    ParsedHeaders,
    PortPair,
    build_ethernet,
    build_gtp_user_frame,
    build_heartbeat_inner,
    build_initial_ue_frame,
    build_inner_tcp_packet,
    build_inner_udp_packet,
    build_ipv4,
    build_sctp,
    build_tcp,
    build_udp,
    classify_frame,
    parse_stack,
)
from .ucp import (
    ETHERTYPE_UCP,
    Cmi,
    CountData,
    CounterSnapshotData,
    Ipv4ListData,
    Ipv4Payload,
    Opcode,
    OpType,
    ReplyPayload,
    RuleIndexPayload,
    RuleSpecData,
    RuleSpecPayload,
    SwitchPathPayload,
    SwitchRefData,
    TeidPayload,
    UcpMessage,
    UeIdPayload,
    cmi,
    decode_ucp,
    encode_ucp,
    message,
    reply,
    split_cmi,
)

__all__ = [name for name in dir() if not name.startswith("_")]
