"""Per-switch packet pipeline.

Every frame produces exactly one verdict.  Control frames mutate the
switch tables and generate replies; registration frames populate the UE
registry and pass through toward the core; tunneled user traffic runs
security, then the intra-cellular lookup, then monitoring, and is either
turned around at the switch layer (TEID rewritten to the destination UE's
downstream tunnel) or delivered toward the core anchor; anything else is
plain learning L2 switching.

A SwitchState is owned by one execution context at a time.  Distinct
switches may run concurrently; nothing here is shared.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field

from .errors import CellgridError
from .wire import (
    CountData,
    CounterSnapshotData,
    GTP_UDP_SRC_PORT,
    Ipv4ListData,
    Ipv4Payload,
    Opcode,
    OpType,
    PacketClass,
    ParsedHeaders,
    ReplyPayload,
    RuleIndexPayload,
    RuleSpecData,
    RuleSpecPayload,
    SwitchPathPayload,
    SwitchRefData,
    TeidPayload,
    UcpMessage,
    UeIdPayload,
    WireError,
    classify_frame,
    decode_ucp,
    ipv4_to_int,
    ipv4_to_str,
    parse_stack,
    prefix_mask,
    reply as make_reply,
)

log = logging.getLogger(__name__)

BLACKLIST = "blacklist"
WHITELIST = "whitelist"


class StaleTeid(CellgridError):
    """A known tunnel id whose owner has no installed route."""


# --- match-action tables -------------------------------------------------------

@dataclass
class LpmTable:
    """Longest-prefix-match table over IPv4; one value per (prefix, length)."""

    _by_len: dict[int, dict[int, object]] = field(default_factory=dict)

    def add(self, prefix: int | str, prefix_len: int, value: object = True) -> None:
        """Insert or replace the entry for (prefix, prefix_len)."""
        mask = prefix_mask(prefix_len)
        self._by_len.setdefault(prefix_len, {})[ipv4_to_int(prefix) & mask] = value

    def remove(self, prefix: int | str, prefix_len: int) -> bool:
        bucket = self._by_len.get(prefix_len, {})
        return bucket.pop(ipv4_to_int(prefix) & prefix_mask(prefix_len), None) is not None

    def lookup(self, addr: int | str) -> tuple[int, int, object] | None:
        """Entry with the greatest prefix length matching ``addr``, if any."""
        a = ipv4_to_int(addr)
        for plen in sorted(self._by_len, reverse=True):
            key = a & prefix_mask(plen)
            bucket = self._by_len[plen]
            if key in bucket:
                return (key, plen, bucket[key])
        return None

    def entries(self) -> list[tuple[int, int, object]]:
        return sorted(
            (prefix, plen, value)
            for plen, bucket in self._by_len.items()
            for prefix, value in bucket.items()
        )

    def prefixes(self) -> tuple[int, ...]:
        return tuple(prefix for prefix, _, _ in self.entries())

    def __len__(self) -> int:
        return sum(len(b) for b in self._by_len.values())


def lpm_lookup(table: LpmTable, addr: int | str) -> tuple[int, int, object] | None:
    return table.lookup(addr)


@dataclass(frozen=True)
class MonitorRule:
    """Conjunctive match over the decapsulated user packet's headers."""

    src_prefix: tuple[int, int] | None = None  # (address, prefix length)
    dst_prefix: tuple[int, int] | None = None
    protocol: int | None = None
    port: int | None = None  # matches either L4 port

    def matches(self, headers: ParsedHeaders) -> bool:
        inner = headers.inner_ipv4
        if inner is None:
            return False
        if self.src_prefix is not None:
            addr, plen = self.src_prefix
            if inner.src & prefix_mask(plen) != addr & prefix_mask(plen):
                return False
        if self.dst_prefix is not None:
            addr, plen = self.dst_prefix
            if inner.dst & prefix_mask(plen) != addr & prefix_mask(plen):
                return False
        if self.protocol is not None and inner.protocol != self.protocol:
            return False
        if self.port is not None:
            ports = headers.inner_tcp or headers.inner_udp
            if ports is None or self.port not in (ports.src, ports.dst):
                return False
        return True

    # wire form: flags octet, then the fields the flags announce
    _F_SRC, _F_DST, _F_PROTO, _F_PORT = 1, 2, 4, 8

    def to_bytes(self) -> bytes:
        flags = 0
        body = b""
        if self.src_prefix is not None:
            flags |= self._F_SRC
            body += struct.pack(">IB", *self.src_prefix)
        if self.dst_prefix is not None:
            flags |= self._F_DST
            body += struct.pack(">IB", *self.dst_prefix)
        if self.protocol is not None:
            flags |= self._F_PROTO
            body += bytes([self.protocol])
        if self.port is not None:
            flags |= self._F_PORT
            body += struct.pack(">H", self.port)
        return bytes([flags]) + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "MonitorRule":
        if not blob:
            raise ValueError("empty rule spec")
        flags, off = blob[0], 1
        src = dst = None
        proto = port = None
        if flags & cls._F_SRC:
            src = struct.unpack_from(">IB", blob, off)
            off += 5
        if flags & cls._F_DST:
            dst = struct.unpack_from(">IB", blob, off)
            off += 5
        if flags & cls._F_PROTO:
            proto = blob[off]
            off += 1
        if flags & cls._F_PORT:
            (port,) = struct.unpack_from(">H", blob, off)
            off += 2
        if off != len(blob):
            raise ValueError(f"rule spec length mismatch: {len(blob)} octets, used {off}")
        return cls(src_prefix=src, dst_prefix=dst, protocol=proto, port=port)


@dataclass
class MonitorCounter:
    rule: MonitorRule
    count: int = 0


# --- tunnel locus ---------------------------------------------------------------

@dataclass(frozen=True)
class LocalGnb:
    """Tunnel terminates on a base station attached to this switch."""

    port: int


@dataclass(frozen=True)
class RemoteSwitch:
    """Tunnel terminates behind another switch (the announcing owner)."""

    switch_id: int


TeidLocus = LocalGnb | RemoteSwitch


# --- verdicts -------------------------------------------------------------------

@dataclass(frozen=True)
class Forward:
    """Send out one port; ``egress_port=None`` floods all ports except ingress."""

    egress_port: int | None
    frame: bytes


@dataclass(frozen=True)
class Drop:
    reason: str


@dataclass(frozen=True)
class Reply:
    message: UcpMessage


@dataclass(frozen=True)
class DeliverToCore:
    frame: bytes


PipelineVerdict = Forward | Drop | Reply | DeliverToCore


# --- switch state ---------------------------------------------------------------

@dataclass
class SwitchState:
    switch_id: int
    security_mode: str = BLACKLIST  # boot-time flag, not runtime-switchable
    mac_table: dict[bytes, int] = field(default_factory=dict)
    teids: dict[int, TeidLocus] = field(default_factory=dict)
    nexthop: dict[int, int] = field(default_factory=dict)
    ue_ids: set[int] = field(default_factory=set)
    ipv4_down_teid: dict[int, int] = field(default_factory=dict)
    ipv4_in_network: LpmTable = field(default_factory=LpmTable)
    ipv4_in_wlist: LpmTable = field(default_factory=LpmTable)
    ipv4_out_wlist: LpmTable = field(default_factory=LpmTable)
    ipv4_in_blist: LpmTable = field(default_factory=LpmTable)
    ipv4_out_blist: LpmTable = field(default_factory=LpmTable)
    tcp_in_wlist: set[int] = field(default_factory=set)
    tcp_out_wlist: set[int] = field(default_factory=set)
    tcp_in_blist: set[int] = field(default_factory=set)
    tcp_out_blist: set[int] = field(default_factory=set)
    udp_in_wlist: set[int] = field(default_factory=set)
    udp_out_wlist: set[int] = field(default_factory=set)
    udp_in_blist: set[int] = field(default_factory=set)
    udp_out_blist: set[int] = field(default_factory=set)
    http_sensor: dict[int, int] = field(default_factory=dict)
    monitor_counters: list[MonitorCounter] = field(default_factory=list)
    # local port map toward neighbor switches, needed to turn a next-hop
    # switch id into an egress port
    switch_ports: dict[int, int] = field(default_factory=dict)

    def ipv4_tables(self, direction: str, kind: str) -> LpmTable:
        return getattr(self, f"ipv4_{direction}_{kind}")

    def port_set(self, proto: str, direction: str, kind: str) -> set[int]:
        return getattr(self, f"{proto}_{direction}_{kind}")


def new_switch(switch_id: int, *, security_mode: str = BLACKLIST) -> SwitchState:
    if security_mode not in (BLACKLIST, WHITELIST):
        raise ValueError(f"unknown security mode: {security_mode}")
    return SwitchState(switch_id=switch_id, security_mode=security_mode)


def register_local_teid(state: SwitchState, teid: int, gnb_port: int) -> None:
    """A base station on ``gnb_port`` announced a new tunnel id."""
    state.teids[teid] = LocalGnb(gnb_port)


# --- pipeline stages ------------------------------------------------------------

def apply_security(state: SwitchState, headers: ParsedHeaders, direction: str = "in") -> bool:
    """True to allow the decapsulated user packet, False to deny it.

    Blacklist mode denies when any address or port of the packet matches the
    direction's blacklist tables.  Whitelist mode allows only when both inner
    addresses match the whitelist, and, if the direction's port whitelist for
    the packet's protocol is non-empty, at least one port is listed.
    """
    inner = headers.inner_ipv4
    if inner is None:
        return True
    ports = headers.inner_tcp or headers.inner_udp
    proto = "tcp" if headers.inner_tcp else "udp" if headers.inner_udp else None

    if state.security_mode == BLACKLIST:
        blist = state.ipv4_tables(direction, "blist")
        if blist.lookup(inner.src) is not None or blist.lookup(inner.dst) is not None:
            return False
        if proto and ports:
            pset = state.port_set(proto, direction, "blist")
            if ports.src in pset or ports.dst in pset:
                return False
        return True

    wlist = state.ipv4_tables(direction, "wlist")
    if wlist.lookup(inner.src) is None or wlist.lookup(inner.dst) is None:
        return False
    if proto and ports:
        pset = state.port_set(proto, direction, "wlist")
        if pset and ports.src not in pset and ports.dst not in pset:
            return False
    return True


def apply_monitoring(state: SwitchState, headers: ParsedHeaders) -> None:
    """Bump every matching rule counter; heartbeats bump their sensor counter."""
    for counter in state.monitor_counters:
        if counter.rule.matches(headers):
            counter.count += 1
    sensor = headers.heartbeat_sensor_id
    if sensor is not None:
        state.http_sensor[sensor] = state.http_sensor.get(sensor, 0) + 1


def intra_cellular_forward(
    state: SwitchState, headers: ParsedHeaders
) -> tuple[int, TeidLocus] | None:
    """Downstream TEID and egress locus when the destination UE is authorized.

    Misses (unauthorized destination, unknown tunnel, or a known tunnel whose
    owner has no route yet) return None and the packet continues toward the
    core, which keeps reachability during route convergence.
    """
    inner = headers.inner_ipv4
    if inner is None:
        return None
    if state.ipv4_in_network.lookup(inner.dst) is None:
        return None
    teid = state.ipv4_down_teid.get(inner.dst)
    if teid is None:
        return None
    locus = state.teids.get(teid)
    if locus is None:
        return None
    if isinstance(locus, RemoteSwitch):
        if locus.switch_id == state.switch_id:
            return None
        nhop = state.nexthop.get(locus.switch_id)
        if nhop is None:
            log.warning(
                "switch %d: TEID %#x owned by switch %d but no route installed",
                state.switch_id,
                teid,
                locus.switch_id,
            )
            return None
        return teid, RemoteSwitch(nhop)
    return teid, locus


def ngap_register(state: SwitchState, headers: ParsedHeaders) -> None:
    """Record the UE id of an initial registration; idempotent, never blocks."""
    if headers.ngap_ue_id is not None:
        state.ue_ids.add(headers.ngap_ue_id)


# --- control-message handling ---------------------------------------------------

def _reply(state: SwitchState, op: Opcode, orig, data=None) -> UcpMessage:
    return make_reply(op, state.switch_id, orig, data)


def _install_path(state: SwitchState, msg: UcpMessage) -> UcpMessage:
    payload = msg.payload
    assert isinstance(payload, SwitchPathPayload)
    dst, hops = payload.dst_switch, payload.hops
    if dst == state.switch_id:
        return _reply(state, Opcode.REPLY_NO_MODIFICATION, msg.cmi)
    if not hops or hops[-1] != dst or state.switch_id not in hops:
        return _reply(state, Opcode.REPLY_FAILED, msg.cmi)
    here = hops.index(state.switch_id)
    if here == len(hops) - 1:
        return _reply(state, Opcode.REPLY_FAILED, msg.cmi)
    nhop = hops[here + 1]
    if state.nexthop.get(dst) == nhop:
        return _reply(state, Opcode.REPLY_NO_MODIFICATION, msg.cmi)
    state.nexthop[dst] = nhop
    return _reply(state, Opcode.REPLY_NEXTHOP_UPDATED, msg.cmi, SwitchRefData(dst))


def handle_ucp(state: SwitchState, msg: UcpMessage) -> UcpMessage | None:
    """Execute one control message against the tables, returning the reply.

    Incoming reply-type messages are controller-bound, not for a switch:
    they return None (the pipeline drops them) so no reply loops can form.
    """
    op = Opcode(msg.cmi.raw)
    if msg.cmi.op_type == OpType.REPLY:
        return None

    if op is Opcode.GET_IPV4_WHITELIST or op is Opcode.GET_IPV4_BLACKLIST:
        kind = "wlist" if op is Opcode.GET_IPV4_WHITELIST else "blist"
        addrs = sorted(
            set(state.ipv4_tables("in", kind).prefixes())
            | set(state.ipv4_tables("out", kind).prefixes())
        )
        return _reply(state, Opcode.REPLY_NO_MODIFICATION, op, Ipv4ListData(tuple(addrs)))

    if op is Opcode.ADD_IPV4_WHITELIST or op is Opcode.ADD_IPV4_BLACKLIST:
        assert isinstance(msg.payload, Ipv4Payload)
        kind = "wlist" if op is Opcode.ADD_IPV4_WHITELIST else "blist"
        # one UCP add authorizes/blocks the host in both directions
        state.ipv4_tables("in", kind).add(msg.payload.addr, 32)
        state.ipv4_tables("out", kind).add(msg.payload.addr, 32)
        return _reply(state, Opcode.REPLY_MODIFIED, op)

    if op is Opcode.GET_MONITOR_STATS:
        snapshot = tuple((i, c.count) for i, c in enumerate(state.monitor_counters))
        return _reply(state, Opcode.REPLY_NO_MODIFICATION, op, CounterSnapshotData(snapshot))

    if op is Opcode.GET_MONITOR_RULE:
        assert isinstance(msg.payload, RuleIndexPayload)
        idx = msg.payload.index
        if idx >= len(state.monitor_counters):
            return _reply(state, Opcode.REPLY_FAILED, op)
        spec = state.monitor_counters[idx].rule.to_bytes()
        return _reply(state, Opcode.REPLY_NO_MODIFICATION, op, RuleSpecData(spec))

    if op is Opcode.GET_MONITOR_RULE_COUNT:
        return _reply(
            state, Opcode.REPLY_NO_MODIFICATION, op, CountData(len(state.monitor_counters))
        )

    if op is Opcode.ADD_MONITOR_RULE:
        assert isinstance(msg.payload, RuleSpecPayload)
        try:
            rule = MonitorRule.from_bytes(msg.payload.spec)
        except ValueError:
            return _reply(state, Opcode.REPLY_FAILED, op)
        state.monitor_counters.append(MonitorCounter(rule))
        return _reply(state, Opcode.REPLY_MODIFIED, op)

    if op is Opcode.GET_UE_COUNT:
        return _reply(state, Opcode.REPLY_NO_MODIFICATION, op, CountData(len(state.ue_ids)))

    if op is Opcode.DELETE_UE_ID:
        assert isinstance(msg.payload, UeIdPayload)
        if msg.payload.ue_id not in state.ue_ids:
            return _reply(state, Opcode.REPLY_FAILED, op)
        state.ue_ids.discard(msg.payload.ue_id)
        return _reply(state, Opcode.REPLY_MODIFIED, op)

    if op is Opcode.ADD_UE_IPV4:
        assert isinstance(msg.payload, Ipv4Payload)
        state.ipv4_in_network.add(msg.payload.addr, 32)
        return _reply(state, Opcode.REPLY_MODIFIED, op)

    if op is Opcode.NEW_TEID:
        assert isinstance(msg.payload, TeidPayload)
        if msg.switch_id == state.switch_id:
            return _reply(state, Opcode.REPLY_NO_MODIFICATION, op)
        state.teids[msg.payload.teid] = RemoteSwitch(msg.switch_id)
        return _reply(state, Opcode.REPLY_MODIFIED, op)

    if op is Opcode.REMOVE_TEID:
        assert isinstance(msg.payload, TeidPayload)
        if msg.payload.teid not in state.teids:
            return _reply(state, Opcode.REPLY_FAILED, op)
        del state.teids[msg.payload.teid]
        return _reply(state, Opcode.REPLY_MODIFIED, op)

    if op is Opcode.INSTALL_PATH:
        return _install_path(state, msg)

    raise AssertionError(f"unhandled opcode {op!r}")  # pragma: no cover


# --- the pipeline ----------------------------------------------------------------

def rewrite_gtp_teid(frame: bytes, gtp_offset: int, new_teid: int) -> bytes:
    """Splice a new TEID into a T=1 tunnel header, leaving every other octet."""
    if not frame[gtp_offset] & 0x08:
        raise StaleTeid("frame's tunnel header carries no TEID to rewrite")
    return (
        frame[: gtp_offset + 4] + struct.pack(">I", new_teid) + frame[gtp_offset + 8 :]
    )


def _l2_forward(state: SwitchState, frame: bytes) -> Forward:
    dst = frame[0:6]
    if dst[0] & 1:  # broadcast/multicast floods
        return Forward(egress_port=None, frame=frame)
    port = state.mac_table.get(dst)
    if port is None:
        return Forward(egress_port=None, frame=frame)
    return Forward(egress_port=port, frame=frame)


def process_packet(state: SwitchState, frame: bytes, ingress: int) -> PipelineVerdict:
    """Classify and run one frame through the pipeline, mutating tables."""
    try:
        cls = classify_frame(frame)
    except WireError:
        return Drop("parse")

    src = frame[6:12]
    if not src[0] & 1:
        state.mac_table[src] = ingress

    if cls is PacketClass.UCP:
        try:
            msg = decode_ucp(frame)
        except WireError:
            return Drop("bad-ucp")
        reply = handle_ucp(state, msg)
        if reply is None:
            return Drop("ucp-reply")
        return Reply(reply)

    if cls is PacketClass.NGAP:
        try:
            headers = parse_stack(frame)
        except WireError:
            # the switch is a transparent tap on the signaling path: a frame
            # it cannot parse is still delivered toward the core
            return DeliverToCore(frame)
        ngap_register(state, headers)
        return DeliverToCore(frame)

    if cls is PacketClass.GTP:
        try:
            headers = parse_stack(frame)
        except WireError:
            return Drop("parse")
        if headers.inner_ipv4 is None:
            return DeliverToCore(frame)
        if not apply_security(state, headers, "in"):
            return Drop("security")
        hit = intra_cellular_forward(state, headers)
        apply_monitoring(state, headers)
        if hit is None:
            return DeliverToCore(frame)
        teid, locus = hit
        assert headers.gtp_offset is not None
        rewritten = rewrite_gtp_teid(frame, headers.gtp_offset, teid)
        if isinstance(locus, LocalGnb):
            return Forward(egress_port=locus.port, frame=rewritten)
        port = state.switch_ports.get(locus.switch_id)
        if port is None:
            log.warning(
                "switch %d: no port toward neighbor switch %d", state.switch_id, locus.switch_id
            )
            return DeliverToCore(frame)
        return Forward(egress_port=port, frame=rewritten)

    return _l2_forward(state, frame)


# --- state dump/load and counter export -------------------------------------------

def _lpm_to_json(table: LpmTable) -> list[dict]:
    return [
        {"prefix": ipv4_to_str(p), "len": plen, "value": v if v is not True else True}
        for p, plen, v in table.entries()
    ]


def _lpm_from_json(rows: list[dict]) -> LpmTable:
    table = LpmTable()
    for row in rows:
        table.add(row["prefix"], row["len"], row.get("value", True))
    return table


def state_to_json_dict(state: SwitchState) -> dict:
    """JSON-ready dump of every table, counter and registry."""
    locus = {
        str(t): (
            {"gnb_port": l.port} if isinstance(l, LocalGnb) else {"switch": l.switch_id}
        )
        for t, l in sorted(state.teids.items())
    }
    out = {
        "switch_id": state.switch_id,
        "security_mode": state.security_mode,
        "mac_table": {mac.hex(): port for mac, port in sorted(state.mac_table.items())},
        "teids": locus,
        "nexthop": {str(k): v for k, v in sorted(state.nexthop.items())},
        "ue_ids": sorted(state.ue_ids),
        "ipv4_down_teid": {
            ipv4_to_str(addr): teid for addr, teid in sorted(state.ipv4_down_teid.items())
        },
        "ipv4_in_network": _lpm_to_json(state.ipv4_in_network),
        "http_sensor": {str(k): v for k, v in sorted(state.http_sensor.items())},
        "monitor_counters": [
            {"rule": c.rule.to_bytes().hex(), "count": c.count} for c in state.monitor_counters
        ],
        "switch_ports": {str(k): v for k, v in sorted(state.switch_ports.items())},
    }
    for direction in ("in", "out"):
        for kind in ("wlist", "blist"):
            out[f"ipv4_{direction}_{kind}"] = _lpm_to_json(state.ipv4_tables(direction, kind))
            for proto in ("tcp", "udp"):
                out[f"{proto}_{direction}_{kind}"] = sorted(
                    state.port_set(proto, direction, kind)
                )
    return out


def state_from_json_dict(doc: dict) -> SwitchState:
    state = new_switch(doc["switch_id"], security_mode=doc["security_mode"])
    state.mac_table = {bytes.fromhex(mac): port for mac, port in doc["mac_table"].items()}
    for teid, loc in doc["teids"].items():
        state.teids[int(teid)] = (
            LocalGnb(loc["gnb_port"]) if "gnb_port" in loc else RemoteSwitch(loc["switch"])
        )
    state.nexthop = {int(k): v for k, v in doc["nexthop"].items()}
    state.ue_ids = set(doc["ue_ids"])
    state.ipv4_down_teid = {ipv4_to_int(a): t for a, t in doc["ipv4_down_teid"].items()}
    state.ipv4_in_network = _lpm_from_json(doc["ipv4_in_network"])
    state.http_sensor = {int(k): v for k, v in doc["http_sensor"].items()}
    state.monitor_counters = [
        MonitorCounter(MonitorRule.from_bytes(bytes.fromhex(row["rule"])), row["count"])
        for row in doc["monitor_counters"]
    ]
    state.switch_ports = {int(k): v for k, v in doc["switch_ports"].items()}
    for direction in ("in", "out"):
        for kind in ("wlist", "blist"):
            setattr(
                state,
                f"ipv4_{direction}_{kind}",
                _lpm_from_json(doc[f"ipv4_{direction}_{kind}"]),
            )
            for proto in ("tcp", "udp"):
                setattr(
                    state, f"{proto}_{direction}_{kind}", set(doc[f"{proto}_{direction}_{kind}"])
                )
    return state


def counter_csv_rows(state: SwitchState) -> list[tuple[int, str, int]]:
    """Rows of (switch_id, counter_name, value) for the counters CSV export."""
    rows = [
        (state.switch_id, f"http_sensor_{sensor}", count)
        for sensor, count in sorted(state.http_sensor.items())
    ]
    rows += [
        (state.switch_id, f"monitor_rule_{i}", c.count)
        for i, c in enumerate(state.monitor_counters)
    ]
    return rows
