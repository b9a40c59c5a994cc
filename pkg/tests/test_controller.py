import random

import pytest

from cellgrid import dataplane as dp
from cellgrid.controller import (
    NotAReply,
    UpdateStatus,
    compute_all_paths,
    dump_messages_hex,
    handle_reply,
    new_controller,
    on_topology_change,
    path_cost,
    switch_graph_from_network,
)
from cellgrid.paths import DisconnectedGraph, Graph
from cellgrid.wire import Opcode, SwitchPathPayload, decode_ucp, message, reply

from oracles import bellman_ford_all_pairs, brute_shortest


def triangle():
    return Graph.from_edges([1, 2, 3], [(1, 2, 1), (2, 3, 1), (1, 3, 3)])


def random_graph(rng, max_nodes=12):
    n = rng.randint(1, max_nodes)
    nodes = list(range(1, n + 1))
    g = Graph.from_edges(nodes, [])
    # random spanning tree keeps it connected, then extra edges
    for i in range(2, n + 1):
        g.add_edge(i, rng.randint(1, i - 1), rng.randint(1, 500))
    extra = rng.randint(0, n)
    for _ in range(extra):
        a, b = rng.sample(nodes, 2) if n > 1 else (1, 1)
        if n > 1 and b not in g.adj[a]:
            g.add_edge(a, b, rng.randint(1, 500))
    return g


def test_triangle_prefers_two_hop():
    paths = compute_all_paths(triangle())
    assert paths[(1, 3)] == (1, 2, 3)
    assert path_cost(triangle(), paths[(1, 3)]) == 2


def test_single_switch_identity_path():
    paths = compute_all_paths(Graph.from_edges([1], []))
    assert paths[(1, 1)] == (1,)


def test_equal_cost_tie_breaks_lexicographically():
    g = Graph.from_edges([1, 2, 3, 4], [(1, 2, 1), (2, 4, 1), (1, 3, 1), (3, 4, 1)])
    assert compute_all_paths(g)[(1, 4)] == (1, 2, 4)


def test_paths_reverse_symmetrically():
    rng = random.Random(5)
    for _ in range(50):
        g = random_graph(rng)
        paths = compute_all_paths(g)
        for (a, b), path in paths.items():
            assert paths[(b, a)] == tuple(reversed(path))


def test_costs_match_relaxation_oracle():
    rng = random.Random(17)
    for _ in range(60):
        g = random_graph(rng)
        paths = compute_all_paths(g)
        oracle = bellman_ford_all_pairs(g.adj)
        for (a, b), path in paths.items():
            assert path_cost(g, path) == oracle[a][b]


def test_paths_match_brute_enumeration_on_small_graphs():
    rng = random.Random(23)
    for _ in range(40):
        g = random_graph(rng, max_nodes=6)
        paths = compute_all_paths(g)
        for (a, b), path in paths.items():
            if a >= b:
                continue
            cost, lex_path = brute_shortest(g.adj, a, b)
            assert path_cost(g, path) == cost
            assert path == lex_path


def test_disconnected_graph_raises():
    g = Graph.from_edges([1, 2, 3], [(1, 2, 1)])
    with pytest.raises(DisconnectedGraph):
        compute_all_paths(g)


def test_topology_change_emits_install_messages():
    state = new_controller()
    msgs = on_topology_change(state, triangle())
    keyed = {(m.switch_id, m.payload.dst_switch): m.payload.hops for m in msgs}
    assert keyed[(1, 3)] == (1, 2, 3)
    assert all(m.cmi.raw == Opcode.INSTALL_PATH for m in msgs)
    assert state.updates[(1, 3)] is UpdateStatus.PENDING


def test_topology_change_quiescent_on_same_graph():
    state = new_controller()
    assert on_topology_change(state, triangle()) != []
    assert on_topology_change(state, triangle()) == []


def test_topology_change_after_edge_removal():
    state = new_controller()
    on_topology_change(state, triangle())
    without_23 = Graph.from_edges([1, 2, 3], [(1, 2, 1), (1, 3, 3)])
    msgs = on_topology_change(state, without_23)
    to_one = [m for m in msgs if m.switch_id == 1 and m.payload.dst_switch == 3]
    assert to_one and to_one[0].payload.hops == (1, 3)


def test_topology_change_flags_unreachable():
    state = new_controller()
    on_topology_change(state, triangle())
    split = Graph.from_edges([1, 2, 3], [(1, 2, 1)])
    msgs = on_topology_change(state, split)
    assert (1, 3) in state.unreachable
    assert all(m.payload.dst_switch != 3 for m in msgs)


def test_topology_change_with_new_switch():
    state = new_controller()
    on_topology_change(state, triangle())
    bigger = triangle()
    bigger.add_edge(3, 4, 1)
    msgs = on_topology_change(state, bigger)
    pairs = {(m.switch_id, m.payload.dst_switch) for m in msgs}
    assert (1, 4) in pairs and (4, 1) in pairs
    # previously optimal pairs stay quiet
    assert (1, 3) not in pairs


def test_handle_reply_acks_and_logs():
    state = new_controller()
    on_topology_change(state, triangle())
    ack = decode_ucp(
        bytes.fromhex(dump_messages_hex([_nexthop_reply(1, 3)])[0])
    )
    handle_reply(state, ack)
    assert state.updates[(1, 3)] is UpdateStatus.ACKED
    assert len(state.reply_log) == 1
    # duplicates log but do not change ack state
    handle_reply(state, ack)
    assert state.updates[(1, 3)] is UpdateStatus.ACKED
    assert len(state.reply_log) == 2


def test_handle_reply_failed_stays_pending():
    state = new_controller()
    on_topology_change(state, triangle())
    handle_reply(state, reply(Opcode.REPLY_FAILED, 1, Opcode.INSTALL_PATH))
    assert state.updates[(1, 3)] is UpdateStatus.PENDING


def test_handle_reply_rejects_requests():
    state = new_controller()
    with pytest.raises(NotAReply):
        handle_reply(state, message(Opcode.GET_UE_COUNT, 1))


def _nexthop_reply(switch_id, dst):
    from cellgrid.wire import SwitchRefData

    return reply(Opcode.REPLY_NEXTHOP_UPDATED, switch_id, Opcode.INSTALL_PATH, SwitchRefData(dst))


def test_install_convergence_on_dataplane_fleet():
    """Applying the controller's messages to switch states yields loop-free chains."""
    rng = random.Random(71)
    for _ in range(25):
        g = random_graph(rng)
        nodes = g.nodes
        if len(nodes) < 2:
            continue
        states = {sw: dp.new_switch(sw) for sw in nodes}
        state = new_controller()
        for msg in on_topology_change(state, g):
            out = dp.handle_ucp(states[msg.switch_id], msg)
            assert out.cmi.raw in (Opcode.REPLY_NEXTHOP_UPDATED, Opcode.REPLY_NO_MODIFICATION)
        for a in nodes:
            for b in nodes:
                if a == b:
                    continue
                here, hops = a, 0
                while here != b:
                    here = states[here].nexthop[b]
                    hops += 1
                    assert hops <= len(nodes), f"chain {a}->{b} looped"


def test_switch_graph_projection():
    from cellgrid import model

    net = model.line_network(3, link_latency_us=[5, 7])
    g = switch_graph_from_network(net)
    assert g.nodes == [1, 2, 3]
    assert g.edges() == [(1, 2, 5), (2, 3, 7)]


def test_message_hex_dump_round_trips():
    msgs = [message(Opcode.INSTALL_PATH, 1, SwitchPathPayload(3, (1, 2, 3)))]
    lines = dump_messages_hex(msgs)
    assert decode_ucp(bytes.fromhex(lines[0])) == msgs[0]
