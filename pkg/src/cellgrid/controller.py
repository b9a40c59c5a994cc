"""Centralized control plane for the switch fabric.

The controller keeps the inter-switch graph, computes all-pairs shortest
paths (edge weights are link latencies), and on every topology change
unicasts one path-install message per (source, destination) pair whose
path changed.  Each switch along a route receives its own message for the
same destination, so the whole next-hop chain converges.  Acknowledgments
are tracked for observability only; links are lossless so nothing is
retransmitted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from .errors import CellgridError
from .paths import DisconnectedGraph, Graph, all_pairs_paths
from .wire import (
    Opcode,
    OpType,
    ReplyPayload,
    SwitchPathPayload,
    SwitchRefData,
    UcpMessage,
    encode_ucp,
    message,
)

log = logging.getLogger(__name__)


class NotAReply(CellgridError):
    """A frame without reply op type was handed to the reply handler."""


class UpdateStatus(Enum):
    PENDING = "pending"
    ACKED = "acked"


@dataclass
class ControllerState:
    graph: Graph
    path_cache: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    updates: dict[tuple[int, int], UpdateStatus] = field(default_factory=dict)
    reply_log: list[UcpMessage] = field(default_factory=list)
    unreachable: set[tuple[int, int]] = field(default_factory=set)


def new_controller(graph: Graph | None = None) -> ControllerState:
    return ControllerState(graph=graph if graph is not None else Graph())


def compute_all_paths(graph: Graph) -> dict[tuple[int, int], tuple[int, ...]]:
    """Minimum-latency path for every ordered switch pair.

    Raises DisconnectedGraph when any pair is unreachable; equal-cost ties
    resolve to the lexicographically smallest id sequence (see paths module
    for the exact orientation rule).
    """
    paths, _, unreachable = all_pairs_paths(graph.adj)
    if unreachable:
        pairs = sorted(unreachable)[:4]
        raise DisconnectedGraph(f"unreachable switch pairs, e.g. {pairs}")
    return paths


def path_cost(graph: Graph, path: tuple[int, ...]) -> int:
    return sum(graph.adj[a][b] for a, b in zip(path, path[1:]))


def on_topology_change(state: ControllerState, new_graph: Graph) -> list[UcpMessage]:
    """Recompute paths and emit one install message per changed pair.

    Unreachable pairs are flagged on the state and produce no messages.
    Re-applying an identical graph therefore emits nothing.
    """
    paths, _, unreachable = all_pairs_paths(new_graph.adj)
    messages: list[UcpMessage] = []
    for (src, dst), path in sorted(paths.items()):
        if src == dst:
            continue
        if state.path_cache.get((src, dst)) == path:
            continue
        messages.append(
            message(Opcode.INSTALL_PATH, src, SwitchPathPayload(dst_switch=dst, hops=path))
        )
        state.updates[(src, dst)] = UpdateStatus.PENDING
    if unreachable:
        log.warning("topology change left %d unreachable pairs", len(unreachable))
    state.graph = new_graph
    state.path_cache = paths
    state.unreachable = {(a, b) for a, b in unreachable if a != b}
    return messages


def handle_reply(state: ControllerState, msg: UcpMessage) -> None:
    """Store a reply; a nexthop-updated reply acknowledges its (switch, dst) install."""
    if msg.cmi.op_type != OpType.REPLY:
        raise NotAReply(f"op type {msg.cmi.op_type:03b} is not a reply")
    state.reply_log.append(msg)
    if msg.cmi.raw == Opcode.REPLY_NEXTHOP_UPDATED and isinstance(msg.payload, ReplyPayload):
        data = msg.payload.data
        if isinstance(data, SwitchRefData):
            key = (msg.switch_id, data.switch)
            if state.updates.get(key) is UpdateStatus.PENDING:
                state.updates[key] = UpdateStatus.ACKED


def switch_graph_from_network(net) -> Graph:
    """Project a full node-typed network onto its switch subgraph."""
    from .model import NodeKind  # local import to keep module load acyclic

    g = Graph()
    for node in net.nodes.values():
        if node.kind is NodeKind.SWITCH:
            g.add_node(node.id)
    for link in net.links:
        if (
            net.nodes[link.a].kind is NodeKind.SWITCH
            and net.nodes[link.b].kind is NodeKind.SWITCH
        ):
            g.add_edge(link.a, link.b, link.latency_us)
    return g


def dump_messages_hex(messages: list[UcpMessage]) -> list[str]:
    """One frame per line, the golden-vector format."""
    return [encode_ucp(m).hex() for m in messages]
