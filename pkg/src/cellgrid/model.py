"""Typed network graphs, random topology generation, and the latency model.

A network is a graph of UE, base-station (gNB), switch, core-anchor (UPF)
and mobility-function (AMF) nodes.  Every node carries a processing latency
and every link a propagation latency, both in integer microseconds; links
touching a UE always have latency zero.

Path latency between two switches x and y, written R(x, y), is the minimum
over switch-subgraph paths of: the sum of link latencies plus the
processing latency of every switch on the path, endpoints included
(R(x, x) is just x's processing).  The two end-to-end figures for a UE
pair i, j with base stations g_i, g_j on switches s_i, s_j are::

    conventional  l_p = proc(g_i) + proc(g_j)
                        + R(s_i, s_u) + R(s_u, s_j) - proc(s_u) + proc(upf)
    optimized     l_o = proc(g_i) + proc(g_j) + R(s_i, s_j)

where s_u is the switch the core anchor hangs off.  The anchor switch's
processing is counted once on the conventional detour.  Base-station and
anchor access links are not part of either figure, so they cancel out of
comparisons; l_o <= l_p always holds because concatenating the two detour
legs yields a switch path from s_i to s_j.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from enum import Enum

from .errors import CellgridError
from .paths import Adjacency, all_pairs_paths, connected_components, dijkstra

FORMAT_TOPOLOGY = "cellgrid-topology/1"

# generation caps, matching the evaluated scale; lift with enforce_caps=False
MAX_SWITCHES = 40
MAX_TOTAL_GNBS = 200
MAX_UE_PER_GNB = 10


class InfeasibleConfig(CellgridError):
    """Topology configuration that cannot produce a valid network."""


class InvalidNetwork(CellgridError):
    """Network violating a structural rule."""


class Unreachable(CellgridError):
    """No switch path between the requested endpoints."""


class ZeroBaseline(CellgridError):
    """Latency gain is undefined when the conventional path costs nothing."""


class NodeKind(Enum):
    UE = "ue"
    GNB = "gnb"
    SWITCH = "switch"
    UPF = "upf"
    AMF = "amf"


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    processing_us: int


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    latency_us: int


@dataclass
class Network:
    nodes: dict[int, Node] = field(default_factory=dict)
    links: list[Link] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add_node(self, node: Node) -> None:
        if node.id in self.nodes:
            raise InvalidNetwork(f"duplicate node id {node.id}")
        self.nodes[node.id] = node

    def add_link(self, a: int, b: int, latency_us: int) -> None:
        self.links.append(Link(min(a, b), max(a, b), latency_us))

    def neighbors(self, node_id: int) -> list[int]:
        out = []
        for link in self.links:
            if link.a == node_id:
                out.append(link.b)
            elif link.b == node_id:
                out.append(link.a)
        return sorted(out)

    def by_kind(self, kind: NodeKind) -> list[Node]:
        return sorted((n for n in self.nodes.values() if n.kind is kind), key=lambda n: n.id)

    def switch_adjacency(self) -> Adjacency:
        adj: Adjacency = {n.id: {} for n in self.by_kind(NodeKind.SWITCH)}
        for link in self.links:
            if link.a in adj and link.b in adj:
                adj[link.a][link.b] = link.latency_us
                adj[link.b][link.a] = link.latency_us
        return adj

    def upf(self) -> Node:
        upfs = self.by_kind(NodeKind.UPF)
        if len(upfs) != 1:
            raise InvalidNetwork(f"expected exactly one core anchor, found {len(upfs)}")
        return upfs[0]

    def switch_of(self, node_id: int) -> int:
        """The switch a node hangs off (a switch is its own answer)."""
        node = self.nodes.get(node_id)
        if node is None:
            raise InvalidNetwork(f"unknown node id {node_id}")
        if node.kind is NodeKind.SWITCH:
            return node.id
        if node.kind is NodeKind.UE:
            gnbs = [n for n in self.neighbors(node.id) if self.nodes[n].kind is NodeKind.GNB]
            if len(gnbs) != 1:
                raise InvalidNetwork(f"UE {node.id} must hang off exactly one gNB")
            return self.switch_of(gnbs[0])
        switches = [n for n in self.neighbors(node.id) if self.nodes[n].kind is NodeKind.SWITCH]
        if len(switches) != 1:
            raise InvalidNetwork(f"{node.kind.value} {node.id} must hang off exactly one switch")
        return switches[0]

    def gnb_of_ue(self, ue_id: int) -> int:
        gnbs = [n for n in self.neighbors(ue_id) if self.nodes[n].kind is NodeKind.GNB]
        if len(gnbs) != 1:
            raise InvalidNetwork(f"UE {ue_id} must hang off exactly one gNB")
        return gnbs[0]


# --- structural validation -------------------------------------------------------

def validate_network(net: Network) -> None:
    """Independent structural checker; raises InvalidNetwork with the reason."""
    kinds = {n.id: n.kind for n in net.nodes.values()}
    neighbor_kinds: dict[int, list[NodeKind]] = {nid: [] for nid in kinds}
    seen_pairs: set[tuple[int, int]] = set()
    for link in net.links:
        if link.a not in kinds or link.b not in kinds:
            raise InvalidNetwork(f"link ({link.a}, {link.b}) references unknown node")
        if link.a == link.b:
            raise InvalidNetwork(f"self-loop on node {link.a}")
        pair = (min(link.a, link.b), max(link.a, link.b))
        if pair in seen_pairs:
            raise InvalidNetwork(f"duplicate link {pair}")
        seen_pairs.add(pair)
        if link.latency_us < 0:
            raise InvalidNetwork(f"negative latency on link {pair}")
        if NodeKind.UE in (kinds[link.a], kinds[link.b]) and link.latency_us != 0:
            raise InvalidNetwork(f"UE link {pair} must have zero latency")
        neighbor_kinds[link.a].append(kinds[link.b])
        neighbor_kinds[link.b].append(kinds[link.a])

    for node in net.nodes.values():
        if node.processing_us < 0:
            raise InvalidNetwork(f"negative processing latency on node {node.id}")
        nbrs = neighbor_kinds[node.id]
        if node.kind is NodeKind.UE:
            if nbrs != [NodeKind.GNB]:
                raise InvalidNetwork(f"UE {node.id} must attach to exactly one gNB")
        elif node.kind is NodeKind.GNB:
            if nbrs.count(NodeKind.SWITCH) != 1 or any(
                k not in (NodeKind.SWITCH, NodeKind.UE) for k in nbrs
            ):
                raise InvalidNetwork(
                    f"gNB {node.id} must attach to exactly one switch and only UEs otherwise"
                )
        elif node.kind in (NodeKind.UPF, NodeKind.AMF):
            if nbrs != [NodeKind.SWITCH]:
                raise InvalidNetwork(
                    f"{node.kind.value} {node.id} must attach to exactly one switch"
                )
        elif node.kind is NodeKind.SWITCH:
            if NodeKind.UE in nbrs:
                raise InvalidNetwork(f"switch {node.id} may not attach directly to a UE")

    for kind in (NodeKind.UPF, NodeKind.AMF):
        if len(net.by_kind(kind)) != 1:
            raise InvalidNetwork(f"network must contain exactly one {kind.value}")

    adj = net.switch_adjacency()
    if adj and len(connected_components(adj)) != 1:
        raise InvalidNetwork("switch subgraph is not connected")


# --- topology generation -----------------------------------------------------------

@dataclass
class TopoConfig:
    """Knobs for the random generator; all latency ranges are inclusive."""

    num_switches: int
    gnb_per_switch: int
    max_ue_per_gnb: int
    seed: int = 0
    link_latency_us: tuple[int, int] = (100, 1000)
    switch_proc_us: tuple[int, int] = (10, 50)
    gnb_proc_us: tuple[int, int] = (500, 1200)
    upf_proc_us: tuple[int, int] = (300, 800)
    amf_proc_us: tuple[int, int] = (300, 800)
    enforce_caps: bool = True

    def validate(self) -> None:
        if self.num_switches < 2:
            raise InfeasibleConfig(
                f"need at least 2 switches (anchor and mobility attach points), "
                f"got {self.num_switches}"
            )
        if self.gnb_per_switch < 1 or self.max_ue_per_gnb < 1:
            raise InfeasibleConfig("need at least one gNB per switch and one UE per gNB")
        if self.enforce_caps:
            if self.num_switches > MAX_SWITCHES:
                raise InfeasibleConfig(f"switch count {self.num_switches} above {MAX_SWITCHES}")
            if self.num_switches * self.gnb_per_switch > MAX_TOTAL_GNBS:
                raise InfeasibleConfig(
                    f"{self.num_switches * self.gnb_per_switch} gNBs above {MAX_TOTAL_GNBS}"
                )
            if self.max_ue_per_gnb > MAX_UE_PER_GNB:
                raise InfeasibleConfig(f"UE per gNB {self.max_ue_per_gnb} above {MAX_UE_PER_GNB}")
        for lo, hi in (
            self.link_latency_us,
            self.switch_proc_us,
            self.gnb_proc_us,
            self.upf_proc_us,
            self.amf_proc_us,
        ):
            if lo < 0 or hi < lo:
                raise InfeasibleConfig(f"bad latency range ({lo}, {hi})")


def generate_topology(cfg: TopoConfig) -> Network:
    """Seed-deterministic random network.

    Switch ids are 1..S; the core anchor hangs off switch 1 and the mobility
    function off switch 2.  Every switch carries ``gnb_per_switch`` base
    stations, each with uniform(1, max_ue_per_gnb) UEs.  The inter-switch
    edge count is drawn uniform(ceil(S/2), S-1) over distinct pairs; if the
    drawn set leaves the switch graph disconnected, bridge edges are added
    (and recorded in the metadata) until it is connected.
    """
    cfg.validate()
    rng = random.Random(cfg.seed)
    s = cfg.num_switches
    net = Network(meta={"seed": cfg.seed, "config": _config_to_json(cfg)})

    for i in range(1, s + 1):
        net.add_node(Node(i, NodeKind.SWITCH, rng.randint(*cfg.switch_proc_us)))
    upf_id, amf_id = s + 1, s + 2
    net.add_node(Node(upf_id, NodeKind.UPF, rng.randint(*cfg.upf_proc_us)))
    net.add_node(Node(amf_id, NodeKind.AMF, rng.randint(*cfg.amf_proc_us)))
    net.add_link(1, upf_id, rng.randint(*cfg.link_latency_us))
    net.add_link(2, amf_id, rng.randint(*cfg.link_latency_us))

    next_id = s + 3
    for switch in range(1, s + 1):
        for _ in range(cfg.gnb_per_switch):
            gnb_id = next_id
            next_id += 1
            net.add_node(Node(gnb_id, NodeKind.GNB, rng.randint(*cfg.gnb_proc_us)))
            net.add_link(switch, gnb_id, rng.randint(*cfg.link_latency_us))
            for _ in range(rng.randint(1, cfg.max_ue_per_gnb)):
                ue_id = next_id
                next_id += 1
                net.add_node(Node(ue_id, NodeKind.UE, 0))
                net.add_link(gnb_id, ue_id, 0)

    edge_count = rng.randint((s + 1) // 2, s - 1)
    all_pairs = [(a, b) for a in range(1, s + 1) for b in range(a + 1, s + 1)]
    chosen = rng.sample(all_pairs, edge_count)
    adj: Adjacency = {i: {} for i in range(1, s + 1)}
    for a, b in chosen:
        w = rng.randint(*cfg.link_latency_us)
        net.add_link(a, b, w)
        adj[a][b] = w
        adj[b][a] = w

    repairs: list[list[int]] = []
    components = connected_components(adj)
    while len(components) > 1:
        base, extra = components[0], components[1]
        a = rng.choice(base)
        b = rng.choice(extra)
        w = rng.randint(*cfg.link_latency_us)
        net.add_link(a, b, w)
        adj[a][b] = w
        adj[b][a] = w
        repairs.append([min(a, b), max(a, b)])
        components = connected_components(adj)

    net.meta["drawn_edge_count"] = edge_count
    net.meta["repair_edges"] = repairs
    validate_network(net)
    return net


def _config_to_json(cfg: TopoConfig) -> dict:
    doc = asdict(cfg)
    for key, value in doc.items():
        if isinstance(value, tuple):
            doc[key] = list(value)
    return doc


# --- switch-path latency ------------------------------------------------------------

def _folded_adjacency(net: Network) -> Adjacency:
    """Directed weights link+proc(target), so path cost folds in node processing."""
    proc = {n.id: n.processing_us for n in net.by_kind(NodeKind.SWITCH)}
    out: Adjacency = {i: {} for i in proc}
    for a, nbrs in net.switch_adjacency().items():
        for b, w in nbrs.items():
            out[a][b] = w + proc[b]
    return out


@dataclass(frozen=True)
class PathResult:
    nodes: tuple[int, ...]
    total_latency_us: int


def shortest_switch_path(net: Network, a: int, b: int) -> PathResult:
    """Minimum-latency switch route between the switches serving a and b.

    The returned latency is R(x, y): link latencies plus the processing of
    every switch on the route, endpoints included.
    """
    sa, sb = net.switch_of(a), net.switch_of(b)
    proc = {n.id: n.processing_us for n in net.by_kind(NodeKind.SWITCH)}
    lo, hi = min(sa, sb), max(sa, sb)
    tree = dijkstra(_folded_adjacency(net), lo)
    if hi not in tree:
        raise Unreachable(f"no switch path between {sa} and {sb}")
    cost, path = tree[hi]
    total = cost + proc[lo]
    if sa != lo:
        path = tuple(reversed(path))
    return PathResult(nodes=path, total_latency_us=total)


class SwitchLatencyTable:
    """All-pairs R(x, y) over the switch subgraph, computed once per network."""

    def __init__(self, net: Network):
        self._proc = {n.id: n.processing_us for n in net.by_kind(NodeKind.SWITCH)}
        paths, costs, unreachable = all_pairs_paths(_folded_adjacency(net))
        self._paths = paths
        self._costs = costs
        self.unreachable = unreachable

    def r(self, a: int, b: int) -> int:
        if (a, b) in self.unreachable:
            raise Unreachable(f"no switch path between {a} and {b}")
        # stored costs fold in every switch's processing except the canonical
        # (lower-id) source's; adding it back yields the symmetric R(a, b)
        return self._costs[(a, b)] + self._proc[min(a, b)]

    def path(self, a: int, b: int) -> tuple[int, ...]:
        if (a, b) in self.unreachable:
            raise Unreachable(f"no switch path between {a} and {b}")
        return self._paths[(a, b)]


def _endpoint_context(net: Network, ue_i: int, ue_j: int):
    for ue in (ue_i, ue_j):
        node = net.nodes.get(ue)
        if node is None or node.kind is not NodeKind.UE:
            raise InvalidNetwork(f"node {ue} is not a UE")
    gi, gj = net.gnb_of_ue(ue_i), net.gnb_of_ue(ue_j)
    return (
        net.nodes[gi].processing_us,
        net.nodes[gj].processing_us,
        net.switch_of(gi),
        net.switch_of(gj),
    )


def latency_unoptimized(
    net: Network, ue_i: int, ue_j: int, table: SwitchLatencyTable | None = None
) -> int:
    """Conventional end-to-end latency l_p: both legs detour via the core anchor."""
    table = table or SwitchLatencyTable(net)
    gi_proc, gj_proc, si, sj = _endpoint_context(net, ue_i, ue_j)
    upf = net.upf()
    su = net.switch_of(upf.id)
    detour = table.r(si, su) + table.r(su, sj) - net.nodes[su].processing_us
    return gi_proc + gj_proc + detour + upf.processing_us


def latency_optimized(
    net: Network, ue_i: int, ue_j: int, table: SwitchLatencyTable | None = None
) -> int:
    """Optimized end-to-end latency l_o: direct switch route, no anchor involved."""
    table = table or SwitchLatencyTable(net)
    gi_proc, gj_proc, si, sj = _endpoint_context(net, ue_i, ue_j)
    return gi_proc + gj_proc + table.r(si, sj)


def latency_gain(
    net: Network, ue_i: int, ue_j: int, table: SwitchLatencyTable | None = None
) -> float:
    """(l_p - l_o) / l_p; raises ZeroBaseline when l_p is zero."""
    table = table or SwitchLatencyTable(net)
    l_p = latency_unoptimized(net, ue_i, ue_j, table)
    if l_p == 0:
        raise ZeroBaseline("conventional path latency is zero")
    l_o = latency_optimized(net, ue_i, ue_j, table)
    return (l_p - l_o) / l_p


# --- hand-built topologies -----------------------------------------------------------

def line_network(
    num_switches: int,
    *,
    link_latency_us: int | list[int] = 300,
    switch_proc_us: int = 20,
    gnb_proc_us: int = 300,
    upf_proc_us: int = 300,
) -> Network:
    """Line of switches, one gNB with one UE per switch; anchor on 1, mobility on 2.

    ``link_latency_us`` may be a list of per-hop latencies of length S-1.
    """
    if num_switches < 2:
        raise InfeasibleConfig("line needs at least 2 switches")
    hops = (
        list(link_latency_us)
        if isinstance(link_latency_us, list)
        else [link_latency_us] * (num_switches - 1)
    )
    if len(hops) != num_switches - 1:
        raise InfeasibleConfig(f"need {num_switches - 1} hop latencies, got {len(hops)}")
    net = Network(meta={"shape": "line"})
    for i in range(1, num_switches + 1):
        net.add_node(Node(i, NodeKind.SWITCH, switch_proc_us))
    upf_id, amf_id = num_switches + 1, num_switches + 2
    net.add_node(Node(upf_id, NodeKind.UPF, upf_proc_us))
    net.add_node(Node(amf_id, NodeKind.AMF, upf_proc_us))
    net.add_link(1, upf_id, 100)
    net.add_link(2, amf_id, 100)
    next_id = num_switches + 3
    for i in range(1, num_switches + 1):
        gnb = next_id
        ue = next_id + 1
        next_id += 2
        net.add_node(Node(gnb, NodeKind.GNB, gnb_proc_us))
        net.add_node(Node(ue, NodeKind.UE, 0))
        net.add_link(i, gnb, 100)
        net.add_link(gnb, ue, 0)
    for i, w in enumerate(hops, start=1):
        net.add_link(i, i + 1, w)
    validate_network(net)
    return net


def two_gnb_network(
    *,
    gnb_proc_us: int = 300,
    switch_proc_us: int = 20,
    upf_proc_us: int = 300,
    upf_on_remote_switch: bool = False,
    inter_switch_latency_us: int = 300,
) -> Network:
    """Two base stations on one serving switch; mirrors the smallest deployment.

    With ``upf_on_remote_switch`` the anchor hangs off a second switch so the
    conventional path detours over an inter-switch link.
    """
    net = Network(meta={"shape": "two-gnb"})
    net.add_node(Node(1, NodeKind.SWITCH, switch_proc_us))
    net.add_node(Node(2, NodeKind.SWITCH, switch_proc_us))
    net.add_link(1, 2, inter_switch_latency_us)
    upf_switch = 2 if upf_on_remote_switch else 1
    net.add_node(Node(3, NodeKind.UPF, upf_proc_us))
    net.add_node(Node(4, NodeKind.AMF, upf_proc_us))
    net.add_link(upf_switch, 3, 100)
    net.add_link(2, 4, 100)
    for offset in (0, 2):
        gnb, ue = 5 + offset, 6 + offset
        net.add_node(Node(gnb, NodeKind.GNB, gnb_proc_us))
        net.add_node(Node(ue, NodeKind.UE, 0))
        net.add_link(1, gnb, 100)
        net.add_link(gnb, ue, 0)
    validate_network(net)
    return net


# --- JSON round trip ------------------------------------------------------------------

def network_to_json_str(net: Network) -> str:
    doc = {
        "format": FORMAT_TOPOLOGY,
        "meta": net.meta,
        "nodes": [
            {"id": n.id, "kind": n.kind.value, "processing_us": n.processing_us}
            for n in sorted(net.nodes.values(), key=lambda n: n.id)
        ],
        "links": [
            {"a": l.a, "b": l.b, "latency_us": l.latency_us}
            for l in sorted(net.links, key=lambda l: (l.a, l.b))
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def network_from_json_str(text: str) -> Network:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_TOPOLOGY:
        raise InvalidNetwork(f"unknown topology format: {doc.get('format')!r}")
    net = Network(meta=doc.get("meta", {}))
    for row in doc["nodes"]:
        net.add_node(Node(row["id"], NodeKind(row["kind"]), row["processing_us"]))
    for row in doc["links"]:
        net.add_link(row["a"], row["b"], row["latency_us"])
    return net
