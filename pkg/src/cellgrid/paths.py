"""Weighted shortest paths with a deterministic tie-break.

Ties between equal-cost paths are broken by the lexicographically smallest
node-id sequence, evaluated from the lower-numbered endpoint; the path for
the opposite direction is the reversal.  This makes the all-pairs table
symmetric and reproducible, which the routing tests rely on.

Edge weights must be non-negative.  The lexicographic guarantee assumes
strictly positive weights (zero-weight edges can make the lex-minimal path
non-prefix-closed); every generator in this package draws positive ones.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import CellgridError

Adjacency = dict[int, dict[int, int]]


class DisconnectedGraph(CellgridError):
    """Raised when an all-pairs computation is asked for unreachable pairs."""


@dataclass
class Graph:
    """Undirected weighted graph over integer node ids."""

    adj: Adjacency = field(default_factory=dict)

    @classmethod
    def from_edges(cls, nodes: list[int], edges: list[tuple[int, int, int]]) -> "Graph":
        g = cls({n: {} for n in nodes})
        for a, b, w in edges:
            g.add_edge(a, b, w)
        return g

    def add_node(self, n: int) -> None:
        self.adj.setdefault(n, {})

    def add_edge(self, a: int, b: int, weight: int) -> None:
        if weight < 0:
            raise ValueError(f"negative edge weight on ({a}, {b}): {weight}")
        if a == b:
            raise ValueError(f"self-loop on node {a}")
        self.adj.setdefault(a, {})[b] = weight
        self.adj.setdefault(b, {})[a] = weight

    @property
    def nodes(self) -> list[int]:
        return sorted(self.adj)

    def edges(self) -> list[tuple[int, int, int]]:
        return sorted((a, b, w) for a, nbrs in self.adj.items() for b, w in nbrs.items() if a < b)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.adj == other.adj


def dijkstra(adj: Adjacency, src: int) -> dict[int, tuple[int, tuple[int, ...]]]:
    """Single-source costs and lex-minimal paths over a (possibly directed) adjacency."""
    if src not in adj:
        raise KeyError(f"unknown node {src}")
    settled: dict[int, tuple[int, tuple[int, ...]]] = {}
    heap: list[tuple[int, tuple[int, ...]]] = [(0, (src,))]
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled[node] = (cost, path)
        for nbr, w in adj[node].items():
            if nbr not in settled:
                heapq.heappush(heap, (cost + w, path + (nbr,)))
    return settled


def all_pairs_paths(
    adj: Adjacency,
) -> tuple[dict[tuple[int, int], tuple[int, ...]], dict[tuple[int, int], int], set[tuple[int, int]]]:
    """All-pairs paths and costs; the third result lists unreachable pairs.

    Costs must be direction-symmetric (undirected graphs, or directed
    weights whose path totals coincide, as with folded node costs).
    """
    nodes = sorted(adj)
    paths: dict[tuple[int, int], tuple[int, ...]] = {}
    costs: dict[tuple[int, int], int] = {}
    unreachable: set[tuple[int, int]] = set()
    for src in nodes:
        tree = dijkstra(adj, src)
        for dst in nodes:
            if dst < src:
                continue
            if dst not in tree:
                unreachable.add((src, dst))
                unreachable.add((dst, src))
                continue
            cost, path = tree[dst]
            paths[(src, dst)] = path
            costs[(src, dst)] = cost
            paths[(dst, src)] = tuple(reversed(path))
            costs[(dst, src)] = cost
    return paths, costs, unreachable


def connected_components(adj: Adjacency) -> list[list[int]]:
    """Components as sorted node lists, ordered by their smallest node."""
    seen: set[int] = set()
    components: list[list[int]] = []
    for start in sorted(adj):
        if start in seen:
            continue
        stack, comp = [start], []
        seen.add(start)
        while stack:
            node = stack.pop()
            comp.append(node)
            for nbr in adj[node]:
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        components.append(sorted(comp))
    return components
