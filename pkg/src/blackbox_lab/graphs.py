"""Weighted graph instances, random generators and DIMACS-style text I/O."""
from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass

import networkx as nx
import numpy as np


@dataclass(frozen=True)
class WeightMode:
    kind: str = "distinct"  # "distinct" | "unit" | "reals"
    low: float = 1.0
    high: float = 10.0

    def draw(self, m: int, rng) -> np.ndarray:
        if self.kind == "distinct":
            return (rng.permutation(m) + 1).astype(float)
        if self.kind == "unit":
            return np.ones(m)
        if self.kind == "reals":
            return rng.uniform(self.low, self.high, size=m)
        raise ValueError(f"unknown weight mode {self.kind!r}")


DistinctUniform = WeightMode("distinct")
UnitWeights = WeightMode("unit")


def RandomReals(low: float = 1.0, high: float = 10.0) -> WeightMode:
    return WeightMode("reals", low, high)


@dataclass(frozen=True)
class GraphInstance:
    """Undirected graph on nodes 1..n. Edge i of ``edges`` is bit i of a search point."""

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        a = self._table
        u, v, w = a[:, 0], a[:, 1], a[:, 2]
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        if np.any((u < 1) | (u > self.n) | (v < 1) | (v > self.n)):
            raise ValueError("edge endpoint out of range")
        if not np.all(w > 0):
            raise ValueError("weights must be positive")

    @functools.cached_property
    def _table(self) -> np.ndarray:
        a = np.array(self.edges, dtype=float).reshape(-1, 3)
        a.flags.writeable = False
        return a

    @property
    def m(self) -> int:
        return len(self.edges)

    def arrays(self):
        a = self._table
        return a[:, 0].astype(np.int64) - 1, a[:, 1].astype(np.int64) - 1, a[:, 2].copy()

    def weight_matrix(self) -> np.ndarray:
        W = np.full((self.n + 1, self.n + 1), np.inf)
        eu, ev, w = self.arrays()
        W[eu + 1, ev + 1] = W[ev + 1, eu + 1] = w
        return W

    def is_connected(self) -> bool:
        g = nx.Graph()
        g.add_nodes_from(range(1, self.n + 1))
        g.add_edges_from((u, v) for u, v, _ in self.edges)
        return nx.is_connected(g)

    def is_complete(self) -> bool:
        return self.m == self.n * (self.n - 1) // 2

    @property
    def w_max(self) -> float:
        return float(self._table[:, 2].max())

    def to_dimacs(self, source: int | None = None, extra: dict | None = None) -> str:
        lines = []
        if source is not None:
            lines.append(f"c source {source}")
        for k, v in (extra or {}).items():
            lines.append(f"c {k} {v!r}")
        lines.append(f"p edge {self.n} {self.m}")
        lines.extend(f"e {u} {v} {w!r}" for u, v, w in self.edges)
        return "\n".join(lines) + "\n"

    @functools.cached_property
    def instance_id(self) -> str:
        h = hashlib.sha256(str(self.n).encode())
        h.update(self._table.tobytes())
        return h.hexdigest()[:16]


def parse_dimacs(text: str) -> tuple[GraphInstance, dict]:
    """Read ``p edge n m`` / ``e u v w`` text; ``c key value`` lines come back as a dict."""
    n = m = None
    edges, comments = [], {}
    for raw in text.splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "c" and len(parts) >= 3:
            comments[parts[1]] = " ".join(parts[2:])
        elif parts[0] == "p":
            if len(parts) != 4 or parts[1] != "edge":
                raise ValueError(f"bad problem line: {raw!r}")
            n, m = int(parts[2]), int(parts[3])
        elif parts[0] == "e":
            edges.append((int(parts[1]), int(parts[2]), float(parts[3])))
    if n is None:
        raise ValueError("missing 'p edge n m' line")
    if len(edges) != m:
        raise ValueError(f"header promises {m} edges, found {len(edges)}")
    return GraphInstance(n, tuple(edges)), comments


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _tree_edges(n: int, rng) -> list[tuple[int, int]]:
    """Uniform random labelled spanning tree of K_n via a random Pruefer sequence."""
    if n == 1:
        return []
    if n == 2:
        return [(1, 2)]
    seq = [int(v) for v in rng.integers(0, n, size=n - 2)]
    t = nx.from_prufer_sequence(seq)
    return [(min(u, v) + 1, max(u, v) + 1) for u, v in t.edges()]


def gen_path(m: int, weights=None) -> GraphInstance:
    if m < 1:
        raise ValueError("path needs m >= 1")
    ws = [1.0] * m if weights is None else [float(w) for w in weights]
    return GraphInstance(m + 1, tuple((i, i + 1, ws[i - 1]) for i in range(1, m + 1)))


def gen_star(m: int) -> GraphInstance:
    return GraphInstance(m + 1, tuple((1, i, float(i - 1)) for i in range(2, m + 2)))


def gen_complete_hidden_tree(n: int, seed) -> GraphInstance:
    """K_n where a uniformly random spanning tree has weight 1 and every other edge weight 2."""
    rng = _rng(seed)
    cheap = set(_tree_edges(n, rng))
    edges = tuple((u, v, 1.0 if (u, v) in cheap else 2.0)
                  for u in range(1, n + 1) for v in range(u + 1, n + 1))
    return GraphInstance(n, edges)


def gen_random_connected(n: int, m: int, mode: WeightMode = DistinctUniform, seed=0) -> GraphInstance:
    """Random spanning tree plus m-(n-1) distinct extra edges, in shuffled bit order."""
    if not (n - 1 <= m <= n * (n - 1) // 2):
        raise ValueError(f"m={m} infeasible for n={n}")
    rng = _rng(seed)
    tree = _tree_edges(n, rng)
    chosen = set(tree)
    extra = m - (n - 1)
    if 2 * extra <= n * (n - 1) // 2 - (n - 1):
        # sparse: rejection sampling draws a uniform subset of the non-tree pairs
        while len(chosen) < m:
            for u, v in rng.integers(1, n + 1, size=(2 * (m - len(chosen)), 2)).tolist():
                if u != v and len(chosen) < m:
                    chosen.add((min(u, v), max(u, v)))
    else:
        others = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)
                  if (u, v) not in chosen]
        pick = rng.choice(len(others), size=extra, replace=False)
        chosen.update(others[i] for i in pick)
    pairs = sorted(chosen)
    order = rng.permutation(len(pairs))
    ws = mode.draw(m, rng)
    return GraphInstance(n, tuple((pairs[j][0], pairs[j][1], float(ws[i])) for i, j in enumerate(order)))
