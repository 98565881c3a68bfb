"""Minimum spanning trees as a bi-criteria black-box problem.

A search point is a bit string over the edges; its objective is the pair
(number of connected components, total weight).  All algorithms below work
through a :class:`~blackbox_lab.core.Session` and never touch the instance.
"""
from __future__ import annotations

import math
from bisect import bisect_left

import numpy as np

from . import _kernels as K
from .core import (HYPERCUBE, BiCriteria, Problem, RankingUnbiasedK, Session, UnbiasedK,
                   Unrestricted, algorithm)
from .graphs import (DistinctUniform, GraphInstance, RandomReals, UnitWeights, WeightMode,
                     gen_complete_hidden_tree, gen_path, gen_random_connected, gen_star,
                     parse_dimacs)
from .operators import (complement, distance_probe, rls, rls2, rls_k, standard_bit_mutation,
                        test_op, uniform_bits, update)

__all__ = [
    "GraphInstance", "WeightMode", "DistinctUniform", "UnitWeights", "RandomReals",
    "gen_path", "gen_star", "gen_complete_hidden_tree", "gen_random_connected", "parse_dimacs",
    "mst_oracle", "mst_problem", "kruskal", "has_duplicate_weights", "DuplicateWeights",
    "hamming_probe", "alg_mst_unrestricted", "alg_mst_unary", "alg_mst_rb_unary",
    "alg_mst_binary", "alg_mst_3ary", "baseline_rls_mst", "baseline_ea_mst",
]


class DuplicateWeights(Exception):
    """The weight-learning unary algorithm needs pairwise distinct weights."""


_U8 = np.dtype(np.uint8)
_bicriteria = tuple.__new__


def mst_oracle(g: GraphInstance):
    eu, ev, w = g.arrays()
    n, shape, kernel = g.n, (g.m,), K.mst_eval

    def f(x) -> BiCriteria:
        if type(x) is not np.ndarray or x.dtype is not _U8:
            x = np.asarray(x, dtype=np.uint8)
        if x.shape != shape:
            raise ValueError(f"expected {shape[0]} bits, got shape {x.shape}")
        return _bicriteria(BiCriteria, kernel(x, eu, ev, w, n))
    return f


def kruskal(g: GraphInstance) -> tuple[float, frozenset[int]]:
    """Optimal weight and the bit indices of one minimum spanning tree."""
    parent = list(range(g.n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    total, chosen = 0.0, []
    for i in sorted(range(g.m), key=lambda i: (g.edges[i][2], i)):
        u, v, w = g.edges[i]
        a, b = find(u), find(v)
        if a != b:
            parent[a] = b
            total += w
            chosen.append(i)
    return total, frozenset(chosen)


def mst_problem(g: GraphInstance) -> Problem:
    best, _ = kruskal(g)

    def is_optimal(v: BiCriteria) -> bool:
        return v.components == 1 and math.isclose(v.weight, best, rel_tol=1e-9, abs_tol=1e-9)

    return Problem(mst_oracle(g), "bits", g.m, {"n": g.n, "m": g.m}, is_optimal)


def has_duplicate_weights(g: GraphInstance) -> bool:
    ws = sorted(w for _, _, w in g.edges)
    return any(math.isclose(a, b, rel_tol=1e-9) for a, b in zip(ws, ws[1:]))


def _phase_length(m: int) -> int:
    return max(1, math.ceil(3 * m * math.log(m)))


# --------------------------------------------------------------------------
# unrestricted


@algorithm("mst_unrestricted", Unrestricted())
def alg_mst_unrestricted(session: Session) -> None:
    m = session.meta["m"]
    empty = np.zeros(m, dtype=np.uint8)
    comps = session.value(session.query(empty)).components
    weights = []
    e = empty.copy()          # query() copies, so one scratch vector is enough
    for i in range(m):
        e[i] = 1
        weights.append(session.value(session.query(e)).weight)
        e[i] = 0
    x = empty
    for i in sorted(range(m), key=lambda i: (weights[i], i)):
        if comps == 1:
            break
        y = x.copy()
        y[i] = 1
        c = session.value(session.query(y)).components
        if c < comps:
            x, comps = y, c


# --------------------------------------------------------------------------
# unary unbiased


def _descend_by_value(session: Session, m: int):
    x = session.apply(uniform_bits, dim=m)
    wx = session.value(x).weight
    while wx > 0:
        y = session.apply(rls, x)
        wy = session.value(y).weight
        if wy < wx:
            x, wx = y, wy
    return x


@algorithm("mst_unary", UnbiasedK(1, HYPERCUBE))
def alg_mst_unary(session: Session) -> None:
    m = session.meta["m"]
    val = session.value
    x0 = _descend_by_value(session, m)

    # climb back to the full graph, reading off each weight as a difference
    learned, cur = [], x0
    while len(learned) < m:
        z = session.apply(rls, cur)
        gain = val(z).weight - val(cur).weight
        if gain > 0:
            learned.append(gain)
            cur = z
    ws = sorted(learned)
    scale = max(1.0, ws[-1])
    if any(b - a <= 1e-9 * scale for a, b in zip(ws, ws[1:])):
        raise DuplicateWeights("learned edge weights are not pairwise distinct")

    def which(gain: float) -> int:
        j = bisect_left(ws, gain)
        if j == m or (j > 0 and gain - ws[j - 1] < ws[j] - gain):
            j -= 1
        return j

    y, comps = x0, val(x0).components
    nxt = 0                 # next edge in weight order still undecided
    seen: dict = {}         # edge rank -> handle of y+e, or None if e closes a cycle
    cap = _phase_length(m)
    draws = 0
    while comps > 1 and nxt < m:
        if nxt in seen:
            h = seen.pop(nxt)
            nxt += 1
            if h is not None:
                y, comps, draws = h, val(h).components, 0
                # rejections never expire, stored inclusions refer to the old y
                seen = {k: v for k, v in seen.items() if v is None}
            continue
        z = session.apply(rls, y)
        draws += 1
        gain = val(z).weight - val(y).weight
        if gain > 0:
            j = which(gain)
            if j >= nxt and j not in seen:
                seen[j] = z if val(z).components < comps else None
        if draws >= cap:
            # the phase overran: drop what it collected and start it afresh
            seen = {k: v for k, v in seen.items() if v is None}
            draws = 0


# --------------------------------------------------------------------------
# ranking-based unary unbiased


def _c_less(session: Session, a, b) -> bool:
    return session.less(a, b, part=0)


def _w_less(session: Session, a, b) -> bool:
    return session.less(a, b, part=1)


@algorithm("mst_rb_unary", RankingUnbiasedK(1, HYPERCUBE))
def alg_mst_rb_unary(session: Session) -> None:
    n, m = session.meta["n"], session.meta["m"]
    phase = _phase_length(m)
    while not session.solved:
        # without raw values emptiness is never certain: stop once a long run
        # of neighbours all failed to lower the weight
        x = session.apply(uniform_bits, dim=m)
        misses = 0
        while misses < phase:
            y = session.apply(rls, x)
            if _w_less(session, y, x):
                x, misses = y, 0
            else:
                misses += 1

        y = x
        for _ in range(n - 1):
            best = None
            for _ in range(4):
                for _ in range(phase):
                    z = session.apply(rls, y)
                    if _c_less(session, z, y) and (
                            best is None or _w_less(session, z, best)):
                        best = z
                if best is not None:
                    break
            if best is None:
                break       # y cannot be extended, so the descent missed an edge
            y = best


# --------------------------------------------------------------------------
# binary unbiased


def hamming_probe(session: Session, x, y, k: int) -> bool:
    """True iff x and y differ in exactly k positions, at the price of one query."""
    return session.same(session.apply(distance_probe, x, y, k=k), x)


def _empty_by_race(session: Session, m: int):
    """Walk x and its complement toward fewer edges until m removals happened."""
    x = session.apply(uniform_bits, dim=m)
    y = session.apply(complement, x)
    removed = 0
    while removed < m:
        if session.rng.random() < 0.5:
            x, y = y, x
        z = session.apply(rls_k, x, y, k=1)
        if _w_less(session, z, x):
            x = z
            removed += 1
    # one of the two walkers is now the empty graph, the other the full one
    return x if _w_less(session, x, y) else y


def _isolate(session: Session, start, other, size: int, x0, d: int):
    """Halve the distance between start and other while keeping start's extra edge.

    ``start`` holds one extra edge plus ``size - (d - 1)`` edges of ``other``;
    the two differ in ``d`` positions.  Returns the point with all of
    ``other`` plus the extra edge.
    """
    p = start
    while d > 1:
        k = d // 2
        t = session.apply(rls_k, p, other, k=k)
        if hamming_probe(session, t, x0, size - d + 2 + k):
            p = t
            d -= k
    return p


class _WeightClass:
    __slots__ = ("rep", "store", "edges")

    def __init__(self, e):
        self.rep = e
        self.store = e
        self.edges = [e]


@algorithm("mst_binary", RankingUnbiasedK(2, HYPERCUBE))
def alg_mst_binary(session: Session) -> None:
    n, m = session.meta["n"], session.meta["m"]
    x0 = _empty_by_race(session, m)

    classes: list[_WeightClass] = []   # ascending weight
    found = 0
    while found < m:
        e = session.apply(rls, x0)
        lo, hi = 0, len(classes)
        while lo < hi:
            mid = (lo + hi) // 2
            if _w_less(session, classes[mid].rep, e):
                lo = mid + 1
            else:
                hi = mid
        if lo == len(classes) or not session.same(classes[lo].rep, e, part=1):
            classes.insert(lo, _WeightClass(e))
            found += 1
            continue
        cls = classes[lo]
        size = len(cls.edges)
        if hamming_probe(session, e, cls.store, size - 1):
            continue
        cls.store = _isolate(session, e, cls.store, size, x0, size + 1)
        cls.edges.append(e)
        found += 1

    x, size = x0, 0
    for cls in classes:
        for e in cls.edges:
            z = _isolate(session, e, x, size, x0, size + 1)
            if _c_less(session, z, x):
                x, size = z, size + 1
                if size == n - 1:
                    return


# --------------------------------------------------------------------------
# 3-ary unbiased


@algorithm("mst_3ary", RankingUnbiasedK(3, HYPERCUBE))
def alg_mst_3ary(session: Session) -> None:
    n, m = session.meta["n"], session.meta["m"]
    x0 = _empty_by_race(session, m)
    y = session.apply(complement, x0)
    singles = []
    for t in range(m):
        z = session.apply(rls_k, x0, y, k=1)
        singles.append(z)
        if t < m - 1:
            y = session.apply(update, y, z, x0)
    ranks = [session.rank(z)[1] for z in singles]
    x, size = x0, 0
    for i in sorted(range(m), key=lambda i: (ranks[i], i)):
        z = session.apply(test_op, x, x0, singles[i])
        if _c_less(session, z, x):
            x, size = z, size + 1
            if size == n - 1:
                return


# --------------------------------------------------------------------------
# heuristic baselines


def _elitist(session: Session, pick) -> None:
    m = session.meta["m"]
    x = session.apply(uniform_bits, dim=m)
    while not session.solved:
        y = session.apply(pick(), x)
        if session.value(y) < session.value(x):
            x = y


@algorithm("mst_rls", UnbiasedK(1, HYPERCUBE))
def baseline_rls_mst(session: Session) -> None:
    _elitist(session, lambda: rls if session.rng.random() < 0.5 else rls2)


@algorithm("mst_ea", UnbiasedK(1, HYPERCUBE))
def baseline_ea_mst(session: Session) -> None:
    _elitist(session, lambda: standard_bit_mutation)
