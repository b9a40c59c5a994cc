import random

import pytest

from cellgrid import model, sim
from cellgrid.controller import compute_all_paths, switch_graph_from_network
from cellgrid.model import NodeKind, TopoConfig, generate_topology, line_network
from cellgrid.paths import Graph
from cellgrid.sim import NonConvergence, SweepConfig, TeidBirth


def single_switch_network():
    net = model.Network(meta={"shape": "single"})
    net.add_node(model.Node(1, NodeKind.SWITCH, 20))
    net.add_node(model.Node(2, NodeKind.UPF, 300))
    net.add_node(model.Node(3, NodeKind.AMF, 300))
    net.add_node(model.Node(4, NodeKind.GNB, 300))
    net.add_node(model.Node(5, NodeKind.UE, 0))
    net.add_link(1, 2, 100)
    net.add_link(1, 3, 100)
    net.add_link(1, 4, 100)
    net.add_link(4, 5, 0)
    model.validate_network(net)
    return net


# --- link-state routing ---------------------------------------------------------------


def test_lsr_two_switches_converge_in_one_exchange():
    net = line_network(2, link_latency_us=50)
    result = sim.run_lsr(net)
    assert result.convergence_time_us == 50
    assert result.tables[1][2] == (1, 2)
    assert result.tables[2][1] == (2, 1)


def test_lsr_matches_controller_on_seeded_topology():
    net = generate_topology(TopoConfig(num_switches=10, gnb_per_switch=1, max_ue_per_gnb=1, seed=4))
    graph = switch_graph_from_network(net)
    result = sim.run_lsr(graph)
    central = compute_all_paths(graph)
    for sw in graph.nodes:
        for dst in graph.nodes:
            assert result.tables[sw][dst] == central[(sw, dst)]
            assert result.costs[sw][dst] == sum(
                graph.adj[a][b] for a, b in zip(central[(sw, dst)], central[(sw, dst)][1:])
            )


def test_lsr_quiescence_and_message_conservation():
    net = generate_topology(TopoConfig(num_switches=8, gnb_per_switch=1, max_ue_per_gnb=1, seed=2))
    result = sim.run_lsr(net)
    assert result.messages_sent == result.messages_delivered


def test_lsr_duplicate_announcement_is_suppressed():
    # re-flooding the same-sequence advertisement must not generate messages:
    # deliver every frame twice by doubling each link's event
    graph = Graph.from_edges([1, 2], [(1, 2, 10)])
    first = sim.run_lsr(graph)
    again = sim.run_lsr(graph)
    assert first.messages_delivered == again.messages_delivered  # deterministic fixpoint


def test_lsr_event_budget_raises():
    net = generate_topology(TopoConfig(num_switches=12, gnb_per_switch=1, max_ue_per_gnb=1, seed=3))
    with pytest.raises(NonConvergence):
        sim.run_lsr(net, event_budget=3)


# --- tunnel announcements ----------------------------------------------------------


def test_single_switch_advertisement_duration_zero():
    net = single_switch_network()
    gnb = net.by_kind(NodeKind.GNB)[0].id
    report = sim.run_teid_announcement(net, [TeidBirth(0, 0x10, gnb)])
    assert report.advertisement_us[0x10] == 0
    assert report.retrievals == []


def test_line_advertisement_duration_is_path_time():
    net = line_network(3, link_latency_us=[5, 7])
    gnb_on_3 = next(
        g.id for g in net.by_kind(NodeKind.GNB) if net.switch_of(g.id) == 3
    )
    report = sim.run_teid_announcement(net, [TeidBirth(0, 0x77, gnb_on_3)])
    assert report.advertisement_us[0x77] == 12
    assert report.owners[0x77] == 3


def test_retrieval_is_round_trip_time():
    net = line_network(3, link_latency_us=[5, 7])
    gnb_on_1 = next(g.id for g in net.by_kind(NodeKind.GNB) if net.switch_of(g.id) == 1)
    report = sim.run_teid_announcement(
        net, [TeidBirth(0, 0x5, gnb_on_1)], queries_per_teid=8, seed=3
    )
    expected = {2: 10, 3: 24}  # out and back along the line
    assert report.retrievals
    for r in report.retrievals:
        assert r.duration_us == expected[r.querying_switch]


def test_every_switch_learns_and_chains_reach_owner():
    net = generate_topology(TopoConfig(num_switches=9, gnb_per_switch=2, max_ue_per_gnb=1, seed=6))
    gnbs = [g.id for g in net.by_kind(NodeKind.GNB)]
    rng = random.Random(1)
    births = [TeidBirth(0, 0x100 + i, rng.choice(gnbs)) for i in range(6)]
    report = sim.run_teid_announcement(net, births, seed=9)
    switches = report.fleet.graph.nodes
    for birth in births:
        for sw in switches:
            visited = sim.chain_walk(report.fleet, sw, birth.teid)
            assert visited[-1] == report.owners[birth.teid]
            assert len(visited) <= len(switches)
            assert len(set(visited)) == len(visited)


def test_unknown_gnb_rejected():
    net = line_network(2)
    with pytest.raises(sim.UnknownGnb):
        sim.run_teid_announcement(net, [TeidBirth(0, 1, 9999)])


def test_teid_determinism():
    net = generate_topology(TopoConfig(num_switches=6, gnb_per_switch=2, max_ue_per_gnb=1, seed=8))
    gnbs = [g.id for g in net.by_kind(NodeKind.GNB)]
    births = [TeidBirth(i * 10, 0x200 + i, gnbs[i % len(gnbs)]) for i in range(4)]
    a = sim.run_teid_announcement(net, births, seed=5)
    b = sim.run_teid_announcement(net, births, seed=5)
    assert a.advertisement_us == b.advertisement_us
    assert a.retrievals == b.retrievals
    assert a.messages_sent == b.messages_sent == a.messages_delivered


def test_advertisement_monotone_on_lines():
    means = []
    for size in (2, 4, 8, 12):
        net = line_network(size, link_latency_us=300)
        gnbs = [g.id for g in net.by_kind(NodeKind.GNB)]
        rng = random.Random(size)
        births = [TeidBirth(0, 0x300 + i, rng.choice(gnbs)) for i in range(8)]
        report = sim.run_teid_announcement(net, births, queries_per_teid=0)
        values = list(report.advertisement_us.values())
        means.append(sum(values) / len(values))
    assert all(a <= b for a, b in zip(means, means[1:])), means


# --- latency experiment ---------------------------------------------------------------


def small_sweep():
    return SweepConfig(
        gnb_counts=[6, 12],
        ratios=[2, 3],
        pairs_per_topology=8,
        topologies_per_cell=2,
    )


def test_latency_experiment_is_deterministic():
    a = sim.run_latency_experiment(small_sweep())
    b = sim.run_latency_experiment(small_sweep())
    assert a.samples == b.samples
    assert a.grand_mean_gain == b.grand_mean_gain


def test_latency_samples_are_cross_gnb_and_sound():
    report = sim.run_latency_experiment(small_sweep())
    assert len(report.samples) == 2 * 2 * 2 * 8
    for s in report.samples:
        assert s.l_o_us <= s.l_p_us
        assert 0.0 <= s.gain < 1.0
    for cell in report.cells:
        assert cell.pairs == 2 * 8
        assert cell.p10_gain <= cell.p50_gain <= cell.p90_gain


def test_latency_cells_merge_independently():
    sweep = small_sweep()
    full = sim.run_latency_experiment(sweep)
    cells = [
        sim.run_latency_cell(sweep, gnbs, ratio)
        for gnbs in sweep.gnb_counts
        for ratio in sweep.ratios
    ]
    merged = sim.summarize_cells(sweep, [s for cell in cells for s in cell])
    assert merged.samples == full.samples
    assert merged.grand_mean_gain == full.grand_mean_gain


def test_derive_seed_is_stable():
    assert sim.derive_seed(1, "x") == sim.derive_seed(1, "x")
    assert sim.derive_seed(1, "x") != sim.derive_seed(2, "x")
    assert sim.derive_seed(1, "x", 2) != sim.derive_seed(1, "x", 3)
