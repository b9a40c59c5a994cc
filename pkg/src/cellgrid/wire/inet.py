"""IPv4 and MAC address conversions used across the wire codecs.

Addresses travel as unsigned integers internally (fast mask arithmetic for
longest-prefix matching) and as dotted quads / colon-hex in JSON dumps.
"""

from __future__ import annotations

import ipaddress

BROADCAST_MAC = b"\xff\xff\xff\xff\xff\xff"


def ipv4_to_int(addr: str | int) -> int:
    """Accept a dotted quad or an already-converted integer."""
    if isinstance(addr, int):
        if not 0 <= addr <= 0xFFFFFFFF:
            raise ValueError(f"IPv4 out of range: {addr:#x}")
        return addr
    return int(ipaddress.IPv4Address(addr))


def ipv4_to_str(addr: int) -> str:
    return str(ipaddress.IPv4Address(addr))


def prefix_mask(prefix_len: int) -> int:
    """Network mask for a prefix length in [0, 32]."""
    if not 0 <= prefix_len <= 32:
        raise ValueError(f"prefix length out of range: {prefix_len}")
    return 0 if prefix_len == 0 else (0xFFFFFFFF << (32 - prefix_len)) & 0xFFFFFFFF


def mac_to_str(mac: bytes) -> str:
    return ":".join(f"{b:02x}" for b in mac)


def mac_to_bytes(mac: str | bytes) -> bytes:
    if isinstance(mac, bytes):
        if len(mac) != 6:
            raise ValueError(f"MAC must be 6 octets, got {len(mac)}")
        return mac
    parts = mac.split(":")
    if len(parts) != 6:
        raise ValueError(f"malformed MAC: {mac!r}")
    return bytes(int(p, 16) for p in parts)


def switch_mac(switch_id: int) -> bytes:
    """Locally-administered MAC derived from a switch id."""
    if not 0 <= switch_id <= 0xFF:
        raise ValueError(f"switch id out of range: {switch_id}")
    return bytes([0x02, 0x00, 0x00, 0x00, 0x00, switch_id])
