"""Slow, obviously-correct reference computations shared by the tests."""
import itertools
import math

import networkx as nx


def components(n, edges, bits):
    """Connected components of the selected edges by repeated relabelling."""
    label = list(range(n + 1))
    changed = True
    while changed:
        changed = False
        for (u, v, _), b in zip(edges, bits):
            if b and label[u] != label[v]:
                lo = min(label[u], label[v])
                label[u] = label[v] = lo
                changed = True
    return len({label[v] for v in range(1, n + 1)})


def selected_weight(edges, bits):
    return sum(w for (_, _, w), b in zip(edges, bits) if b)


def brute_mst_weight(n, edges):
    best = math.inf
    for combo in itertools.combinations(range(len(edges)), n - 1):
        bits = [0] * len(edges)
        for i in combo:
            bits[i] = 1
        if components(n, edges, bits) == 1:
            best = min(best, selected_weight(edges, bits))
    return best


def nx_mst_weight(n, edges):
    g = nx.Graph()
    g.add_nodes_from(range(1, n + 1))
    for u, v, w in edges:
        if not g.has_edge(u, v) or g[u][v]["weight"] > w:
            g.add_edge(u, v, weight=w)
    return sum(d["weight"] for _, _, d in nx.minimum_spanning_tree(g).edges(data=True))


def chain_walk(pred, W, n):
    """Distance of every node 2..n along its pointer chain, inf when it never reaches 1."""
    out = []
    for v in range(2, n + 1):
        d, cur, seen = 0.0, v, set()
        while cur != 1:
            p = pred[cur - 2]
            if cur in seen or p == cur or W[cur][p] == math.inf:
                d = math.inf
                break
            seen.add(cur)
            d += W[cur][p]
            cur = p
        out.append(d)
    return out


def nx_distances(n, edges):
    g = nx.Graph()
    g.add_nodes_from(range(1, n + 1))
    g.add_weighted_edges_from(edges)
    d = nx.single_source_dijkstra_path_length(g, 1)
    return [d.get(v, math.inf) for v in range(2, n + 1)]


def brute_distances(n, edges):
    """Shortest distances by enumerating every simple path from the source."""
    W = {}
    for u, v, w in edges:
        W[u, v] = W[v, u] = min(w, W.get((u, v), math.inf))
    best = {v: math.inf for v in range(2, n + 1)}

    def walk(u, d, seen):
        for v in range(2, n + 1):
            if v not in seen and (u, v) in W:
                nd = d + W[u, v]
                best[v] = min(best[v], nd)
                walk(v, nd, seen | {v})

    walk(1, 0.0, {1})
    return [best[v] for v in range(2, n + 1)]


class Recorder:
    """Wraps an oracle and remembers every queried point."""

    def __init__(self, oracle):
        self.oracle = oracle
        self.points = []

    def __call__(self, x):
        self.points.append(x.copy())
        return self.oracle(x)


def is_spanning_tree(n, edges):
    """n - 1 edges that join all n nodes, checked with a plain union-find."""
    if len(edges) != n - 1:
        return False
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True
