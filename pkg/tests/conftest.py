import pytest

from cellgrid import wire

MAC_A = bytes.fromhex("0a0000000001")
MAC_B = bytes.fromhex("0a0000000002")

UE_ALPHA = wire.ipv4_to_int("10.45.0.2")
UE_BETA = wire.ipv4_to_int("10.45.0.3")
GNB_IP = wire.ipv4_to_int("192.168.1.10")
UPF_IP = wire.ipv4_to_int("192.168.1.1")
AMF_IP = wire.ipv4_to_int("192.168.1.2")


def gtp_frame(inner: bytes, *, teid: int = 0x100, seq: int = 1) -> bytes:
    return wire.build_gtp_user_frame(
        eth_dst=MAC_B,
        eth_src=MAC_A,
        outer_src=GNB_IP,
        outer_dst=UPF_IP,
        teid=teid,
        sequence_number=seq,
        inner=inner,
    )


def ngap_frame(ue_id: int) -> bytes:
    return wire.build_initial_ue_frame(
        eth_dst=MAC_B, eth_src=MAC_A, outer_src=GNB_IP, outer_dst=AMF_IP, ue_id=ue_id
    )


@pytest.fixture
def tcp_inner():
    return wire.build_inner_tcp_packet(UE_ALPHA, UE_BETA, 40000, 8080, b"payload")
