"""Independent reference implementations the real code is checked against.

Everything here is deliberately naive: linear scans, exhaustive path
enumeration, and edge relaxation, sharing no code with the package's
bucketed LPM, Dijkstra, or cached latency tables.
"""

from cellgrid.wire import prefix_mask


def lpm_scan(entries, addr):
    """Linear scan over (prefix, plen, value) rows, returning the most specific."""
    best = None
    for prefix, plen, value in entries:
        mask = prefix_mask(plen)
        if addr & mask == prefix & mask and (best is None or plen > best[1]):
            best = (prefix & mask, plen, value)
    return best


def simple_paths(adj, src, dst):
    """Every simple path from src to dst, by depth-first enumeration."""
    stack = [(src, (src,))]
    while stack:
        node, path = stack.pop()
        if node == dst:
            yield path
            continue
        for nbr in adj[node]:
            if nbr not in path:
                stack.append((nbr, path + (nbr,)))


def path_link_cost(adj, path):
    return sum(adj[a][b] for a, b in zip(path, path[1:]))


def brute_shortest(adj, src, dst):
    """Minimum (cost, lexicographic path) over all simple paths, or None."""
    best = None
    for path in simple_paths(adj, src, dst):
        key = (path_link_cost(adj, path), path)
        if best is None or key < best:
            best = key
    return best


def bellman_ford_all_pairs(adj):
    """All-pairs costs by repeated edge relaxation; no priority queue anywhere."""
    nodes = sorted(adj)
    edges = [(a, b, w) for a in nodes for b, w in adj[a].items()]
    inf = float("inf")
    dist = {}
    for src in nodes:
        d = {n: inf for n in nodes}
        d[src] = 0
        for _ in range(len(nodes) - 1):
            changed = False
            for a, b, w in edges:
                if d[a] + w < d[b]:
                    d[b] = d[a] + w
                    changed = True
            if not changed:
                break
        dist[src] = d
    return dist


def raw_switch_cost(net, path):
    """Links plus the processing of every switch on the path, endpoints included."""
    latency = {}
    for link in net.links:
        latency[(link.a, link.b)] = link.latency_us
        latency[(link.b, link.a)] = link.latency_us
    total = sum(latency[(a, b)] for a, b in zip(path, path[1:]))
    return total + sum(net.nodes[sw].processing_us for sw in path)


def brute_switch_latency(net, sw_a, sw_b):
    """Minimum raw switch-path latency by exhaustive simple-path enumeration."""
    adj = net.switch_adjacency()
    if sw_a == sw_b:
        return net.nodes[sw_a].processing_us
    best = None
    for path in simple_paths(adj, sw_a, sw_b):
        cost = raw_switch_cost(net, path)
        if best is None or cost < best:
            best = cost
    return best


def _ue_context(net, ue):
    from cellgrid.model import NodeKind

    (gnb,) = [n for n in net.neighbors(ue) if net.nodes[n].kind is NodeKind.GNB]
    (switch,) = [n for n in net.neighbors(gnb) if net.nodes[n].kind is NodeKind.SWITCH]
    return gnb, switch


def term_latency_unoptimized(net, ue_i, ue_j):
    """Literal term-by-term sum for the conventional (via-anchor) figure."""
    from cellgrid.model import NodeKind

    gnb_i, sw_i = _ue_context(net, ue_i)
    gnb_j, sw_j = _ue_context(net, ue_j)
    (upf,) = [n.id for n in net.nodes.values() if n.kind is NodeKind.UPF]
    (sw_u,) = [n for n in net.neighbors(upf) if net.nodes[n].kind is NodeKind.SWITCH]
    return (
        net.nodes[gnb_i].processing_us
        + net.nodes[gnb_j].processing_us
        + brute_switch_latency(net, sw_i, sw_u)
        + brute_switch_latency(net, sw_u, sw_j)
        - net.nodes[sw_u].processing_us
        + net.nodes[upf].processing_us
    )


def term_latency_optimized(net, ue_i, ue_j):
    """Literal term-by-term sum for the switch-only figure."""
    gnb_i, sw_i = _ue_context(net, ue_i)
    gnb_j, sw_j = _ue_context(net, ue_j)
    return (
        net.nodes[gnb_i].processing_us
        + net.nodes[gnb_j].processing_us
        + brute_switch_latency(net, sw_i, sw_j)
    )
