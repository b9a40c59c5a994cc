"""Deterministic discrete-event engine for switch fleets.

Virtual time is integer microseconds of simulated link latency; nothing
here reads a wall clock.  Events at equal times are processed in insertion
order, so identical configurations and seeds replay identically regardless
of host or process layout.  Links are lossless: every message sent is
delivered exactly once, and the engine counts both sides to prove it.

Three runnables build on the engine: link-state flooding until the fleet's
routing tables are quiescent, tunnel-id announcement/retrieval timing, and
the closed-form latency experiment over generated topologies.
"""

from __future__ import annotations

import hashlib
import heapq
import random
import statistics
from dataclasses import dataclass, field

from . import dataplane, model
from .controller import compute_all_paths
from .errors import CellgridError
from .paths import Graph, all_pairs_paths
from .wire import Opcode, TeidPayload, decode_ucp, encode_ucp, message

DEFAULT_EVENT_BUDGET = 1_000_000


class NonConvergence(CellgridError):
    """Event budget exhausted; indicates a bug, not a tolerable outcome."""


class UnknownGnb(CellgridError):
    """A tunnel birth references a base station the network does not contain."""


class RoutingLoop(CellgridError):
    """A forwarded message revisited a switch; the tables are inconsistent."""


def derive_seed(base: int, *parts) -> int:
    """Stable 64-bit sub-seed; never relies on Python's salted hash()."""
    text = ":".join([str(base), *map(str, parts)])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


@dataclass(order=True)
class _Event:
    time: int
    seq: int
    payload: object = field(compare=False)


class EventQueue:
    """Time-ordered queue, FIFO among equal times, with a hard event budget."""

    def __init__(self, budget: int = DEFAULT_EVENT_BUDGET):
        self._heap: list[_Event] = []
        self._seq = 0
        self._budget = budget
        self.processed = 0
        self.now = 0

    def push(self, time: int, payload: object) -> None:
        heapq.heappush(self._heap, _Event(time, self._seq, payload))
        self._seq += 1

    def pop(self) -> object:
        event = heapq.heappop(self._heap)
        self.processed += 1
        if self.processed > self._budget:
            raise NonConvergence(f"event budget {self._budget} exceeded")
        self.now = event.time
        return event.payload

    def __bool__(self) -> bool:
        return bool(self._heap)


# --- fleet --------------------------------------------------------------------------

class Fleet:
    """Per-switch pipeline states plus the link map that connects them."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self.states: dict[int, dataplane.SwitchState] = {}
        self.gnb_ports: dict[int, tuple[int, int]] = {}  # gnb id -> (switch, port)
        self.messages_sent = 0
        self.messages_delivered = 0
        for sw in graph.nodes:
            self.states[sw] = dataplane.new_switch(sw)
        for sw in graph.nodes:
            port = 1
            for nbr in sorted(graph.adj[sw]):
                self.states[sw].switch_ports[nbr] = port
                port += 1

    @classmethod
    def from_network(cls, net: model.Network) -> "Fleet":
        from .controller import switch_graph_from_network

        fleet = cls(switch_graph_from_network(net))
        for gnb in net.by_kind(model.NodeKind.GNB):
            sw = net.switch_of(gnb.id)
            state = fleet.states[sw]
            port = 100 + len([g for g, (s, _) in fleet.gnb_ports.items() if s == sw])
            fleet.gnb_ports[gnb.id] = (sw, port)
        return fleet

    def link_latency(self, a: int, b: int) -> int:
        return self.graph.adj[a][b]

    def install_nexthops(self, tables: dict[int, dict[int, tuple[int, ...]]]) -> None:
        for sw, table in tables.items():
            for dst, path in table.items():
                if dst != sw and len(path) > 1:
                    self.states[sw].nexthop[dst] = path[1]


# --- link-state routing ---------------------------------------------------------------

@dataclass(frozen=True)
class _Lsa:
    origin: int
    seq_no: int
    neighbors: tuple[tuple[int, int], ...]  # (neighbor, cost)


@dataclass
class LsrResult:
    tables: dict[int, dict[int, tuple[int, ...]]]  # switch -> dst -> path
    costs: dict[int, dict[int, int]]
    convergence_time_us: int
    messages_sent: int
    messages_delivered: int


def run_lsr(
    net: "model.Network | Graph | Fleet", *, event_budget: int = DEFAULT_EVENT_BUDGET
) -> LsrResult:
    """Flood every switch's adjacency until quiescent, then build route tables.

    Each switch floods its own link-state advertisement at time zero;
    re-floods happen only for advertisements that are news (per-origin
    sequence numbers), so a static topology quiesces after one wave and a
    re-announcement of known state generates no further messages.
    """
    fleet = net if isinstance(net, Fleet) else Fleet(
        net if isinstance(net, Graph) else _graph_of(net)
    )
    graph = fleet.graph
    queue = EventQueue(event_budget)
    lsdb: dict[int, dict[int, _Lsa]] = {sw: {} for sw in graph.nodes}

    def flood(sw: int, lsa: _Lsa, except_nbr: int | None) -> None:
        for nbr in sorted(graph.adj[sw]):
            if nbr == except_nbr:
                continue
            fleet.messages_sent += 1
            queue.push(queue.now + graph.adj[sw][nbr], ("lsa", nbr, sw, lsa))

    for sw in graph.nodes:
        own = _Lsa(sw, 1, tuple(sorted(graph.adj[sw].items())))
        lsdb[sw][sw] = own
        flood(sw, own, None)

    convergence = 0
    while queue:
        kind, sw, sender, lsa = queue.pop()
        fleet.messages_delivered += 1
        known = lsdb[sw].get(lsa.origin)
        if known is None or lsa.seq_no > known.seq_no:
            lsdb[sw][lsa.origin] = lsa
            convergence = queue.now
            flood(sw, lsa, sender)

    tables: dict[int, dict[int, tuple[int, ...]]] = {}
    costs: dict[int, dict[int, int]] = {}
    for sw in graph.nodes:
        local = Graph()
        for origin, lsa in lsdb[sw].items():
            local.add_node(origin)
            for nbr, cost in lsa.neighbors:
                local.add_node(nbr)
                local.add_edge(origin, nbr, cost)
        paths, pair_costs, _ = all_pairs_paths(local.adj)
        tables[sw] = {dst: paths[(sw, dst)] for dst in local.nodes if (sw, dst) in paths}
        costs[sw] = {dst: pair_costs[(sw, dst)] for dst in local.nodes if (sw, dst) in pair_costs}
    return LsrResult(
        tables=tables,
        costs=costs,
        convergence_time_us=convergence,
        messages_sent=fleet.messages_sent,
        messages_delivered=fleet.messages_delivered,
    )


def _graph_of(net: model.Network) -> Graph:
    from .controller import switch_graph_from_network

    return switch_graph_from_network(net)


def lsr_matches_controller(net: model.Network | Graph) -> bool:
    """Quiescent flooded tables equal the centralized computation's output."""
    graph = net if isinstance(net, Graph) else _graph_of(net)
    result = run_lsr(graph)
    central = compute_all_paths(graph)
    for sw in graph.nodes:
        for dst in graph.nodes:
            if result.tables[sw].get(dst) != central[(sw, dst)]:
                return False
    return True


# --- tunnel-id announcement ----------------------------------------------------------

@dataclass(frozen=True)
class TeidBirth:
    time_us: int
    teid: int
    gnb_id: int


@dataclass
class Retrieval:
    teid: int
    querying_switch: int
    duration_us: int


@dataclass
class TeidReport:
    owners: dict[int, int]  # teid -> owning switch
    advertisement_us: dict[int, int]  # teid -> birth-to-last-learn duration
    retrievals: list[Retrieval]
    convergence_time_us: int
    messages_sent: int
    messages_delivered: int
    routing: LsrResult
    fleet: "Fleet"  # post-quiescence switch states, for reachability checks


def run_teid_announcement(
    net: model.Network,
    births: list[TeidBirth],
    *,
    queries_per_teid: int = 2,
    seed: int = 0,
    event_budget: int = DEFAULT_EVENT_BUDGET,
) -> TeidReport:
    """Flood tunnel-id announcements over a routed fleet and time them.

    Routing is converged first (link-state flooding).  Each birth installs
    the tunnel at its owning switch and floods an announcement frame
    hop-by-hop with duplicate suppression per (origin, teid); the
    advertisement duration runs from birth until the last switch learns it.
    Retrieval queries start at uniformly drawn non-owner switches and are
    answered by the owner, both legs forwarded along next-hop chains; their
    duration is the full question-to-answer round trip.
    """
    fleet = Fleet.from_network(net)
    routing = run_lsr(fleet, event_budget=event_budget)
    fleet.install_nexthops(routing.tables)
    switches = fleet.graph.nodes
    num_switches = len(switches)

    for birth in births:
        if birth.gnb_id not in fleet.gnb_ports:
            raise UnknownGnb(f"no such base station: {birth.gnb_id}")

    queue = EventQueue(event_budget)
    seen: dict[int, set[tuple[int, int]]] = {sw: set() for sw in switches}
    learn_time: dict[tuple[int, int], int] = {}
    owners: dict[int, int] = {}

    def flood_frame(sw: int, frame: bytes, except_nbr: int | None) -> None:
        for nbr in sorted(fleet.graph.adj[sw]):
            if nbr == except_nbr:
                continue
            fleet.messages_sent += 1
            queue.push(queue.now + fleet.link_latency(sw, nbr), ("teid", nbr, sw, frame))

    for birth in births:
        queue.push(birth.time_us, ("birth", birth))

    while queue:
        event = queue.pop()
        if event[0] == "birth":
            birth = event[1]
            sw, port = fleet.gnb_ports[birth.gnb_id]
            owners[birth.teid] = sw
            dataplane.register_local_teid(fleet.states[sw], birth.teid, port)
            seen[sw].add((sw, birth.teid))
            learn_time[(sw, birth.teid)] = queue.now
            frame = encode_ucp(message(Opcode.NEW_TEID, sw, TeidPayload(birth.teid)))
            flood_frame(sw, frame, None)
            continue
        _, sw, sender, frame = event
        fleet.messages_delivered += 1
        msg = decode_ucp(frame)
        assert isinstance(msg.payload, TeidPayload)
        key = (msg.switch_id, msg.payload.teid)
        if key in seen[sw]:
            continue
        seen[sw].add(key)
        ingress = fleet.states[sw].switch_ports[sender]
        dataplane.process_packet(fleet.states[sw], frame, ingress)
        learn_time[(sw, msg.payload.teid)] = queue.now
        flood_frame(sw, frame, sender)

    convergence = queue.now
    advertisement = {
        birth.teid: max(
            learn_time[(sw, birth.teid)] for sw in switches
        )
        - birth.time_us
        for birth in births
    }

    rng = random.Random(derive_seed(seed, "teid-queries"))
    retrievals: list[Retrieval] = []
    for birth in sorted(births, key=lambda b: (b.time_us, b.teid)):
        owner = owners[birth.teid]
        candidates = [sw for sw in switches if sw != owner]
        for _ in range(min(queries_per_teid, len(candidates))):
            querier = rng.choice(candidates)
            out = _chain_time(fleet, querier, owner, num_switches)
            back = _chain_time(fleet, owner, querier, num_switches)
            retrievals.append(Retrieval(birth.teid, querier, out + back))

    return TeidReport(
        owners=owners,
        advertisement_us=advertisement,
        retrievals=retrievals,
        convergence_time_us=convergence,
        messages_sent=fleet.messages_sent,
        messages_delivered=fleet.messages_delivered,
        routing=routing,
        fleet=fleet,
    )


def _chain_time(fleet: Fleet, src: int, dst: int, hop_budget: int) -> int:
    """Link-latency time along the installed next-hop chain from src to dst."""
    total = 0
    here = src
    hops = 0
    while here != dst:
        nhop = fleet.states[here].nexthop.get(dst)
        if nhop is None:
            raise RoutingLoop(f"switch {here} has no route toward {dst}")
        total += fleet.link_latency(here, nhop)
        here = nhop
        hops += 1
        if hops > hop_budget:
            raise RoutingLoop(f"route from {src} to {dst} exceeded {hop_budget} hops")
    return total


def chain_walk(fleet: Fleet, src: int, teid: int) -> list[int]:
    """Switches visited forwarding a tunneled frame from src to the teid's owner.

    Raises RoutingLoop on a revisit or a missing route; used to prove
    loop-free reachability after announcements have quiesced.
    """
    state = fleet.states[src]
    locus = state.teids.get(teid)
    if locus is None:
        raise RoutingLoop(f"switch {src} never learned teid {teid:#x}")
    visited = [src]
    here = src
    while True:
        locus = fleet.states[here].teids.get(teid)
        if locus is None:
            raise RoutingLoop(f"switch {here} never learned teid {teid:#x}")
        if isinstance(locus, dataplane.LocalGnb):
            return visited
        owner = locus.switch_id
        nhop = fleet.states[here].nexthop.get(owner)
        if nhop is None:
            raise RoutingLoop(f"switch {here} has no route toward owner {owner}")
        if nhop in visited:
            raise RoutingLoop(f"loop at switch {nhop}: {visited}")
        visited.append(nhop)
        here = nhop


# --- latency experiment ---------------------------------------------------------------

@dataclass
class SweepConfig:
    """Grid of (total gNB count, gNBs-per-switch ratio) cells to evaluate."""

    gnb_counts: list[int] = field(default_factory=lambda: [20, 60, 100, 140, 200])
    ratios: list[int] = field(default_factory=lambda: [2, 3, 4, 5])
    pairs_per_topology: int = 25
    topologies_per_cell: int = 5
    max_ue_per_gnb: int = 3
    seed: int = 1
    link_latency_us: tuple[int, int] = (100, 1000)
    switch_proc_us: tuple[int, int] = (10, 50)
    gnb_proc_us: tuple[int, int] = (500, 1200)
    upf_proc_us: tuple[int, int] = (300, 800)


@dataclass(frozen=True)
class PairSample:
    topology_seed: int
    gnbs: int
    ratio: int
    l_p_us: int
    l_o_us: int
    gain: float


@dataclass
class CellSummary:
    gnbs: int
    ratio: int
    pairs: int
    mean_gain: float
    p10_gain: float
    p50_gain: float
    p90_gain: float
    mean_l_p_us: float
    mean_l_o_us: float


@dataclass
class SimReport:
    samples: list[PairSample]
    cells: list[CellSummary]
    grand_mean_gain: float


def _percentile(sorted_values: list[float], fraction: float) -> float:
    if not sorted_values:
        raise ValueError("no values")
    if len(sorted_values) == 1:
        return sorted_values[0]
    pos = fraction * (len(sorted_values) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * (pos - lo)


def _topo_config(sweep: SweepConfig, num_switches: int, ratio: int, seed: int) -> model.TopoConfig:
    return model.TopoConfig(
        num_switches=num_switches,
        gnb_per_switch=ratio,
        max_ue_per_gnb=sweep.max_ue_per_gnb,
        seed=seed,
        link_latency_us=sweep.link_latency_us,
        switch_proc_us=sweep.switch_proc_us,
        gnb_proc_us=sweep.gnb_proc_us,
        upf_proc_us=sweep.upf_proc_us,
        # the sweep grid deliberately spans beyond the single-run caps
        enforce_caps=False,
    )


def run_latency_cell(sweep: SweepConfig, gnbs: int, ratio: int) -> list[PairSample]:
    """Samples for one grid cell; pure function of (sweep, cell) for fan-out."""
    num_switches = max(2, round(gnbs / ratio))
    samples: list[PairSample] = []
    for rep in range(sweep.topologies_per_cell):
        topo_seed = derive_seed(sweep.seed, "topology", gnbs, ratio, rep)
        net = model.generate_topology(_topo_config(sweep, num_switches, ratio, topo_seed))
        table = model.SwitchLatencyTable(net)
        ues = [n.id for n in net.by_kind(model.NodeKind.UE)]
        gnb_of = {ue: net.gnb_of_ue(ue) for ue in ues}
        rng = random.Random(derive_seed(sweep.seed, "pairs", gnbs, ratio, rep))
        drawn = 0
        while drawn < sweep.pairs_per_topology:
            ue_i, ue_j = rng.sample(ues, 2)
            if gnb_of[ue_i] == gnb_of[ue_j]:
                continue
            drawn += 1
            l_p = model.latency_unoptimized(net, ue_i, ue_j, table)
            l_o = model.latency_optimized(net, ue_i, ue_j, table)
            samples.append(
                PairSample(
                    topology_seed=topo_seed,
                    gnbs=gnbs,
                    ratio=ratio,
                    l_p_us=l_p,
                    l_o_us=l_o,
                    gain=(l_p - l_o) / l_p,
                )
            )
    return samples


def summarize_cells(sweep: SweepConfig, samples: list[PairSample]) -> SimReport:
    cells: list[CellSummary] = []
    for gnbs in sweep.gnb_counts:
        for ratio in sweep.ratios:
            cell = [s for s in samples if s.gnbs == gnbs and s.ratio == ratio]
            gains = sorted(s.gain for s in cell)
            cells.append(
                CellSummary(
                    gnbs=gnbs,
                    ratio=ratio,
                    pairs=len(cell),
                    mean_gain=statistics.fmean(gains),
                    p10_gain=_percentile(gains, 0.10),
                    p50_gain=_percentile(gains, 0.50),
                    p90_gain=_percentile(gains, 0.90),
                    mean_l_p_us=statistics.fmean(s.l_p_us for s in cell),
                    mean_l_o_us=statistics.fmean(s.l_o_us for s in cell),
                )
            )
    grand = statistics.fmean(c.mean_gain for c in cells)
    return SimReport(samples=samples, cells=cells, grand_mean_gain=grand)


def run_latency_experiment(sweep: SweepConfig) -> SimReport:
    """Evaluate the whole grid; deterministic for a given sweep config."""
    samples: list[PairSample] = []
    for gnbs in sweep.gnb_counts:
        for ratio in sweep.ratios:
            samples.extend(run_latency_cell(sweep, gnbs, ratio))
    return summarize_cells(sweep, samples)
