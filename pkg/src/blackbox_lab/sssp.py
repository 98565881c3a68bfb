"""Single-source shortest paths over predecessor vectors.

A search point is an int64 array ``x`` of length n-1 where ``x[i - 2]`` is
the claimed predecessor of node i; node 1 is the source.  Two objectives are
offered: the tuple of all n-1 distances (``multi_oracle``) and their sum with
a penalty ``C`` for every node whose chain does not reach the source
(``single_oracle``).
"""
from __future__ import annotations

import functools
import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .core import (REDIRECTING, STRUCTURE, Problem, RankingUnrestricted, Session, UnbiasedK,
                   Unrestricted, algorithm)
from .graphs import DistinctUniform, GraphInstance, gen_random_connected, parse_dimacs
from .operators import (address_in, subtree_codes, agree, all_to_one, all_to_same, attach, attach_any,
                        attach_unmarked, extend_path, graft, keep_marked, mark_union,
                        one_to_source, redirect_one, self_loops, uniform_preds)

INF = math.inf


class NotCompleteGraph(Exception):
    pass


@dataclass(frozen=True)
class SSSPInstance:
    graph: GraphInstance
    C: float = 0.0
    _W: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.C:
            object.__setattr__(self, "C", self.graph.n * self.graph.w_max)
        object.__setattr__(self, "_W", self.graph.weight_matrix())

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def weights(self) -> np.ndarray:
        return self._W

    @property
    def instance_id(self) -> str:
        return self.graph.instance_id

    def to_dimacs(self) -> str:
        return self.graph.to_dimacs(source=1, extra={"C": self.C})

    @classmethod
    def from_dimacs(cls, text: str) -> "SSSPInstance":
        g, comments = parse_dimacs(text)
        if comments.get("source", "1") != "1":
            raise ValueError("only source 1 is supported")
        return cls(g, float(comments["C"]) if "C" in comments else 0.0)


# --------------------------------------------------------------------------
# oracles and reference solutions


def _as_preds(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (n - 1,) or (n > 1 and (x.min() < 1 or x.max() > n)):
        raise ValueError(f"not a predecessor vector for n={n}")
    return x


def multi_oracle(inst: SSSPInstance):
    W, n = inst.weights, inst.n

    def f(x) -> tuple:
        return tuple(K.chain_dists(_as_preds(x, n), W).tolist())
    return f


def single_oracle(inst: SSSPInstance):
    W, n, C = inst.weights, inst.n, float(inst.C)

    def f(x) -> float:
        return float(K.chain_sum(_as_preds(x, n), W, C))
    return f


class ShortestPaths(NamedTuple):
    distances: tuple         # node 2..n
    preds: np.ndarray        # a shortest path tree as a predecessor vector
    height: int              # smallest height of any shortest path tree


def _dijkstra(W: np.ndarray, n: int):
    """Lexicographic (distance, hops) Dijkstra; equal keys prefer the smaller predecessor."""
    dist, hops, pred = K.dense_dijkstra(np.ascontiguousarray(W, dtype=float), n)
    return dist.tolist(), hops.tolist(), pred.tolist()


def dijkstra_ref(inst: SSSPInstance) -> ShortestPaths:
    dist, hops, pred = _dijkstra(inst.weights, inst.n)
    if any(d == INF for d in dist[1:]):
        raise ValueError("graph is not connected")
    return ShortestPaths(tuple(dist[2:]), np.array(pred[2:], dtype=np.int64), max(hops[1:]))


def _optimal_sum(inst: SSSPInstance) -> float:
    return float(sum(dijkstra_ref(inst).distances))


def multi_problem(inst: SSSPInstance) -> Problem:
    best = dijkstra_ref(inst).distances

    def is_optimal(v: tuple) -> bool:
        return all(math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9) for a, b in zip(v, best))

    return Problem(multi_oracle(inst), "preds", inst.n - 1,
                   {"n": inst.n, "m": inst.m}, is_optimal)


def single_problem(inst: SSSPInstance) -> Problem:
    best = _optimal_sum(inst)

    def is_optimal(v: float) -> bool:
        return math.isclose(v, best, rel_tol=1e-12, abs_tol=1e-9)

    return Problem(single_oracle(inst), "preds", inst.n - 1,
                   {"n": inst.n, "m": inst.m, "C": float(inst.C)}, is_optimal)


# --------------------------------------------------------------------------
# instance generators


def _complete_with(n: int, cheap: dict[tuple[int, int], float], other: float) -> GraphInstance:
    return GraphInstance(n, tuple((u, v, cheap.get((u, v), other))
                                  for u in range(1, n + 1) for v in range(u + 1, n + 1)))


def gen_hidden_path(n: int, seed, complete: bool = False) -> SSSPInstance:
    """A uniformly random Hamiltonian path starting at the source, weight 1 per edge.

    With ``complete`` every other pair gets weight n, otherwise it is absent.
    """
    if n < 2:
        raise ValueError("n >= 2 required")
    order = [1] + [int(v) for v in np.random.default_rng(seed).permutation(np.arange(2, n + 1))]
    path = {(min(a, b), max(a, b)): 1.0 for a, b in zip(order, order[1:])}
    if complete:
        return SSSPInstance(_complete_with(n, path, float(n)))
    return SSSPInstance(GraphInstance(n, tuple((u, v, w) for (u, v), w in path.items())))


def gen_complete_cheap_pred(n: int, seed) -> SSSPInstance:
    """K_n in which every node i > 1 has one weight-1 edge to a uniform smaller label."""
    if n < 2:
        raise ValueError("n >= 2 required")
    rng = np.random.default_rng(seed)
    cheap = {(1 + int(rng.integers(0, i - 1)), i): 1.0 for i in range(2, n + 1)}
    return SSSPInstance(_complete_with(n, cheap, float(n)))


def gen_random_complete(n: int, seed, low: int = 1, high: int = 100) -> SSSPInstance:
    """K_n with independent integer weights in [low, high]."""
    rng = np.random.default_rng(seed)
    ws = rng.integers(low, high + 1, size=n * (n - 1) // 2)
    pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    return SSSPInstance(GraphInstance(n, tuple((u, v, float(w)) for (u, v), w in zip(pairs, ws))))


def gen_random_sparse(n: int, m: int, seed) -> SSSPInstance:
    return SSSPInstance(gen_random_connected(n, m, DistinctUniform, seed))


# --------------------------------------------------------------------------
# trees


def decompose_Kn(n: int) -> list[list[tuple[int, int]]]:
    """floor((n+1)/2) spanning trees of K_n whose union is every edge."""
    if n < 2:
        raise ValueError("n >= 2 required")
    if n % 2 == 1:
        # a star at n, plus the even decomposition of the rest with n hung on node 1
        trees = [sorted(t + [(1, n)]) for t in decompose_Kn(n - 1)]
        trees.append([(v, n) for v in range(1, n)])
        return trees
    trees = []
    for i in range(n // 2):
        # zig-zag Hamiltonian path i, i+1, i-1, i+2, i-2, ... around Z_n
        seq = [i]
        for step in range(1, n):
            off = (step + 1) // 2
            seq.append((i + off) % n if step % 2 else (i - off) % n)
        trees.append(sorted((a + 1, b + 1) if a < b else (b + 1, a + 1)
                            for a, b in zip(seq, seq[1:])))
    return trees


@functools.lru_cache(maxsize=None)
def _decomposition_preds(n: int) -> tuple:
    out = []
    for edges in decompose_Kn(n):
        p = tree_to_preds(edges, n)
        p.flags.writeable = False
        out.append(p)
    return tuple(out)


def tree_to_preds(edges, n: int, root: int = 1) -> np.ndarray:
    """Orient a spanning tree towards ``root`` (breadth-first)."""
    adj: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    pred = np.arange(2, n + 1, dtype=np.int64)
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                pred[v - 2] = u
                queue.append(v)
    if len(seen) != n:
        raise ValueError("edges do not span all nodes")
    return pred


def lengths_sequence(kids: dict, v) -> tuple[int, ...]:
    """Depths of all leaves of the subtree below v, largest first."""
    out = []
    stack = [(v, 0)]
    while stack:
        u, d = stack.pop()
        cs = kids.get(u, ())
        if not cs:
            out.append(d)
        stack.extend((c, d + 1) for c in cs)
    return tuple(sorted(out, reverse=True))


def _subtree_sizes(kids: dict, root) -> dict:
    size = {}
    order, stack = [], [root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(kids.get(u, ()))
    for u in reversed(order):
        size[u] = 1 + sum(size[c] for c in kids.get(u, ()))
    return size


def canonical_order(kids: dict, root=0) -> dict:
    """Children lists re-sorted into the depth-first visiting order.

    Longer length sequences come first; size and the canonical subtree code
    break the remaining ties, so equal keys mean isomorphic subtrees.
    """
    codes = subtree_codes(kids, root)
    sizes = _subtree_sizes(kids, root)
    key = {u: (lengths_sequence(kids, u), sizes[u], codes[u]) for u in sizes}
    return {u: sorted(cs, key=lambda c: key[c], reverse=True) for u, cs in kids.items()}


def canonical_steps(kids: dict, root=0):
    """Yield ``(built, up, active, child)`` for every attachment of a depth-first rebuild.

    ``built`` (child lists) and ``up`` (parent map) describe the partial tree
    just before ``child`` is hung below ``active``; both are updated in place
    after each yield.
    """
    kids = canonical_order(kids, root)
    built: dict = {root: []}
    up: dict = {}
    pending = {u: list(cs) for u, cs in kids.items()}
    active = root
    while True:
        while active is not None and not pending[active]:
            active = up.get(active)
        if active is None:
            return
        c = pending[active].pop(0)
        yield built, up, active, c
        built[active].append(c)
        built[c] = []
        up[c] = active
        active = c


# --------------------------------------------------------------------------
# learning the penalty constant


def learn_C(session: Session) -> float:
    """One unrestricted query: every node points at node 2."""
    n = session.meta["n"]
    return session.value(session.query(np.full(n - 1, 2, dtype=np.int64))) / (n - 1)


def learn_C_structure(session: Session) -> float:
    """One structure-preserving query: every node points at one non-source node."""
    n = session.meta["n"]
    return session.value(session.apply(all_to_one, dim=n - 1)) / (n - 1)


def learn_C_redirecting(session: Session) -> float:
    """Two draws of "everyone points at one uniform node"; only the source target misleads."""
    n = session.meta["n"]
    a = session.value(session.apply(all_to_same, dim=n - 1))
    b = session.value(session.apply(all_to_same, dim=n - 1))
    return max(a, b) / (n - 1)


# --------------------------------------------------------------------------
# multi-criteria, unrestricted


@algorithm("sssp_multi", Unrestricted())
def alg_sssp_multi(session: Session) -> None:
    n = session.meta["n"]
    if n == 1:
        return
    first = np.ones(n - 1, dtype=np.int64)
    d = session.value(session.query(first))
    best = {u: (d[u - 2], 1) for u in range(2, n + 1)}
    tree = np.arange(2, n + 1, dtype=np.int64)
    free = set(range(2, n + 1))
    last = first
    while free:
        v = min(free, key=lambda u: (best[u][0], u))
        dv, tree[v - 2] = best[v][0], best[v][1]
        free.discard(v)
        if not free:
            break
        if len(free) == 1:
            u = next(iter(free))
            if dv >= best[u][0]:
                continue        # v cannot improve the last node: skip its probe
        probe = tree.copy()
        for u in free:
            probe[u - 2] = v
        d = session.value(session.query(probe))
        last = probe
        for u in free:
            if d[u - 2] <= best[u][0] and d[u - 2] < INF:
                best[u] = (d[u - 2], v)
    if not np.array_equal(last, tree):
        session.query(tree)


def learn_complete_weights(session: Session) -> np.ndarray:
    """Every edge weight of K_n from one query per decomposition tree."""
    n = session.meta["n"]
    W = np.full((n + 1, n + 1), INF)
    child = np.arange(2, n + 1)
    for pred in _decomposition_preds(n):
        d = np.concatenate(([0.0, 0.0], session.value(session.query(pred))))
        if np.isinf(d).any():
            c = int(np.flatnonzero(np.isinf(d))[0])
            raise NotCompleteGraph(f"edge ({pred[c - 2]}, {c}) is missing")
        W[pred, child] = W[child, pred] = d[child] - d[pred]
    return W


@algorithm("sssp_multi_complete", Unrestricted())
def alg_sssp_multi_complete(session: Session) -> None:
    n = session.meta["n"]
    _, _, pred = _dijkstra(learn_complete_weights(session), n)
    session.query(np.array(pred[2:], dtype=np.int64))


# --------------------------------------------------------------------------
# single-criterion, unrestricted and ranking-based


@algorithm("sssp_single_unrestricted", Unrestricted())
def alg_sssp_single_unrestricted(session: Session) -> None:
    n, C = session.meta["n"], session.meta["C"]
    x = np.arange(2, n + 1, dtype=np.int64)
    fx = (n - 1) * C                        # value of x, known without a query
    dist = {u: C for u in range(2, n + 1)}  # C stands for "not reached yet"
    free = set(range(2, n + 1))
    v = 1
    while free:
        for u in sorted(free):
            z = x.copy()
            z[u - 2] = v
            fz = session.value(session.query(z))
            if fz < fx:
                # every free node hangs directly off the tree, so only u moved
                dist[u] += fz - fx
                x, fx = z, fz
        v = min(free, key=lambda u: (dist[u], u))
        free.discard(v)


@algorithm("sssp_single_ranking", RankingUnrestricted())
def alg_sssp_single_ranking(session: Session) -> None:
    n = session.meta["n"]
    base = np.arange(2, n + 1, dtype=np.int64)
    free = set(range(2, n + 1))
    fixed = [1]
    by_cost: dict[int, list[int]] = {}     # settled node -> free nodes, cheapest edge first

    def attach_one(u: int, a: int):
        z = base.copy()
        z[u - 2] = a
        return session.query(z), u, z

    while free:
        latest = fixed[-1]
        tried = [attach_one(u, latest) for u in sorted(free)]
        by_cost[latest] = [u for _, u, _ in sorted(tried, key=lambda t: (session.rank(t[0]), t[1]))]
        for a in fixed[:-1]:
            u = next((c for c in by_cost[a] if c in free), None)
            if u is not None:
                tried.append(attach_one(u, a))
        _, u, base = min(tried, key=lambda t: (session.rank(t[0]), t[1]))
        free.discard(u)
        fixed.append(u)


# --------------------------------------------------------------------------
# structure-preserving unbiased


def _phase_draws(k: int, n: int) -> int:
    if k == 1:
        return max(1, math.ceil(3 * n * math.log(n)))
    a = k * (n - k)
    return max(1, math.ceil(3 * a * math.log(a)))


def struct_unary_attempt(session: Session):
    """One pass of the tree-growing sampler; returns the final tree handle."""
    n = session.meta["n"]
    x = None
    for k in range(1, n):
        best, fb = None, INF
        for _ in range(_phase_draws(k, n)):
            z = session.apply(one_to_source, dim=n - 1) if k == 1 else session.apply(attach_any, x)
            fz = session.value(z)
            if fz < fb:
                best, fb = z, fz
        x = best
    return x


@algorithm("struct_unary", UnbiasedK(1, STRUCTURE))
def alg_struct_unary(session: Session) -> None:
    if session.meta["n"] == 1:
        return
    while not session.solved:
        struct_unary_attempt(session)


class _Frontier:
    """Candidate attachments ordered by value gain, grouped by (phase, gain)."""

    def __init__(self):
        self.heap: list = []
        self.groups: dict = {}
        self.tick = 0

    def push(self, gain: float, phase: int, h) -> None:
        key = (gain, phase)
        if key not in self.groups:
            self.groups[key] = deque()
            heapq.heappush(self.heap, (gain, phase))
        self.groups[key].append(h)

    def pop(self):
        """Next (gain, phase, handle) in order; None when exhausted."""
        while self.heap:
            key = self.heap[0]
            group = self.groups[key]
            if group:
                return key[0], key[1], group.popleft()
            heapq.heappop(self.heap)
            del self.groups[key]
        return None


def struct_binary_attempt(session: Session):
    n = session.meta["n"]
    C = session.meta["C"]
    val = session.value
    draws = max(1, math.ceil(3 * n * math.log(n)))

    # search phase: path points P[k] to the k-th settled node, parent[k] in T
    P = [session.apply(self_loops, dim=n - 1)]
    fP = [val(P[0])]
    D = [0.0]
    parent = [None]
    marks = P[0]
    frontier = _Frontier()
    while len(P) < n:
        k = len(P) - 1
        for _ in range(draws):
            z = session.apply(extend_path, P[k])
            gain = val(z) - fP[k]
            if gain < 0:
                frontier.push(gain, k, z)
        while True:
            item = frontier.pop()
            if item is None:
                return None         # a needed attachment was never sampled
            gain, j, z = item
            if val(session.apply(keep_marked, marks, z)) != val(z):
                break               # z attaches a node that is still free
        P.append(z)
        fP.append(val(z))
        D.append(gain + C)
        parent.append(j)
        marks = session.apply(mark_union, marks, z)

    # construction phase: rebuild T depth first with structurally addressed attach
    kids: dict[int, list[int]] = {i: [] for i in range(n)}
    for i in range(1, n):
        kids[parent[i]].append(i)
    y, fy = P[0], fP[0]
    for built, up, active, c in canonical_steps(kids, 0):
        address = address_in(built, up, active, root=0)
        target = D[c] - C
        while True:
            z = session.apply(attach, y, address=address)
            fz = val(z)
            if math.isclose(fz - fy, target, rel_tol=1e-12, abs_tol=1e-9) \
                    and val(session.apply(agree, z, P[c])) == fP[c]:
                break
        y, fy = z, fz
    return y


@algorithm("struct_binary", UnbiasedK(2, STRUCTURE))
def alg_struct_binary(session: Session) -> None:
    if session.meta["n"] == 1:
        return
    while not session.solved:
        struct_binary_attempt(session)


def struct_3ary_attempt(session: Session):
    n = session.meta["n"]
    val = session.value
    x = session.apply(self_loops, dim=n - 1)
    P = [x]
    fP = [val(x)]
    frontier = _Frontier()
    while len(P) < n:
        k = len(P) - 1
        free = n - 1 - k
        mask = x
        for t in range(free):
            z = session.apply(attach_unmarked, P[k], mask)
            gain = val(z) - fP[k]
            if gain < 0:
                frontier.push(gain, k, z)
            if t < free - 1:
                mask = session.apply(graft, mask, z, P[k])
        while True:
            item = frontier.pop()
            if item is None:
                return None
            gain, j, z = item
            if val(session.apply(keep_marked, x, z)) != val(z):
                break
        x = session.apply(graft, x, z, P[j])
        P.append(z)
        fP.append(val(z))
    return x


@algorithm("struct_3ary", UnbiasedK(3, STRUCTURE))
def alg_struct_3ary(session: Session) -> None:
    if session.meta["n"] == 1:
        return
    while not session.solved:
        struct_3ary_attempt(session)


# --------------------------------------------------------------------------
# redirecting baseline


@algorithm("redirect_rls", UnbiasedK(1, REDIRECTING))
def baseline_redirect_rls(session: Session) -> None:
    n = session.meta["n"]
    x = session.apply(uniform_preds, dim=n - 1)
    fx = session.value(x)
    while not session.solved:
        y = session.apply(redirect_one, x)
        fy = session.value(y)
        if fy < fx:
            x, fx = y, fy
