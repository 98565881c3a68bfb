"""Variation operators on bit strings and predecessor vectors, plus a
statistical check that an operator respects a symmetry group.

Predecessor vectors are int64 arrays of length n-1 whose entry ``i - 2``
holds the predecessor label of node ``i`` (labels run 1..n, node 1 is the
source).  Every sampler returns a fresh array and never mutates a parent.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from .core import HYPERCUBE, REDIRECTING, STRUCTURE

# How often an operator saw a parent outside its precondition and fell back
# to returning the parent unchanged.
malformed: Counter = Counter()


@dataclass(frozen=True)
class VariationOp:
    name: str
    arity: int
    domain: str
    notion: str | None
    sampler: Callable
    unbiased: bool = True

    def __call__(self, parents, rng, **params) -> np.ndarray:
        if len(parents) != self.arity:
            raise ValueError(f"{self.name} takes {self.arity} parents, got {len(parents)}")
        return self.sampler(*parents, rng=rng, **params)

    def __repr__(self) -> str:
        return f"<op {self.name}/{self.arity}>"


def _below(rng, n: int) -> int:
    # much cheaper than rng.integers for scalar draws
    return int(rng.random() * n)


def _flag(name: str, x: np.ndarray) -> np.ndarray:
    malformed[name] += 1
    return x.copy()


def bit_op(name, arity, notion=HYPERCUBE, unbiased=True):
    return lambda fn: VariationOp(name, arity, "bits", notion, fn, unbiased)


def pred_op(name, arity, notion=STRUCTURE, unbiased=True):
    return lambda fn: VariationOp(name, arity, "preds", notion, fn, unbiased)


# --------------------------------------------------------------------------
# bit strings


@bit_op("uniform_bits", 0)
def uniform_bits(*, rng, dim):
    return rng.integers(0, 2, size=dim, dtype=np.uint8)


@bit_op("rls", 1)
def rls(x, *, rng):
    y = x.copy()
    y[_below(rng, len(x))] ^= 1
    return y


@bit_op("rls2", 1)
def rls2(x, *, rng):
    """Flip two distinct uniformly chosen positions (one position when m = 1)."""
    y = x.copy()
    m = len(x)
    i = _below(rng, m)
    y[i] ^= 1
    if m > 1:
        j = _below(rng, m - 1)
        y[j + (j >= i)] ^= 1
    return y


@bit_op("standard_bit_mutation", 1)
def standard_bit_mutation(x, *, rng):
    return x ^ (rng.random(len(x)) < 1.0 / len(x)).astype(np.uint8)


@bit_op("complement", 1)
def complement(x, *, rng=None):
    return x ^ np.uint8(1)


@bit_op("rls_k", 2)
def rls_k(x, y, *, rng, k):
    diff = np.flatnonzero(x != y)
    if k <= 0 or len(diff) < k:
        return x.copy()
    out = x.copy()
    if k == 1:
        out[diff[_below(rng, len(diff))]] ^= 1
    else:
        out[diff[rng.permutation(len(diff))[:k]]] ^= 1
    return out


@bit_op("update", 3)
def update(a, b, c, *, rng=None):
    return np.where(a == b, c, a)


@bit_op("test", 3)
def test_op(a, b, c, *, rng=None):
    return np.where(b == c, a, a ^ np.uint8(1))


@bit_op("distance_probe", 2)
def distance_probe(x, y, *, rng, k):
    """x itself when x and y differ in exactly k positions, else a random neighbour of x."""
    if int(np.count_nonzero(x != y)) == k:
        return x.copy()
    return rls.sampler(x, rng=rng)


@bit_op("flip_first_bit", 1, unbiased=False)
def flip_first_bit(x, *, rng=None):
    """Deliberately biased control: always flips position 0."""
    y = x.copy()
    y[0] ^= 1
    return y


# --------------------------------------------------------------------------
# predecessor vectors: 0-ary


@pred_op("self_loops", 0)
def self_loops(*, rng=None, dim):
    return np.arange(2, dim + 2, dtype=np.int64)


@pred_op("uniform_preds", 0, notion=REDIRECTING)
def uniform_preds(*, rng, dim):
    return rng.integers(1, dim + 2, size=dim).astype(np.int64)


@pred_op("one_to_source", 0)
def one_to_source(*, rng, dim):
    x = np.arange(2, dim + 2, dtype=np.int64)
    x[_below(rng, dim)] = 1
    return x


@pred_op("all_to_one", 0)
def all_to_one(*, rng, dim):
    """Every node points at one uniformly chosen non-source node."""
    return np.full(dim, 2 + _below(rng, dim), dtype=np.int64)


@pred_op("all_to_same", 0, notion=None, unbiased=False)
def all_to_same(*, rng, dim):
    """Every node points at one uniformly chosen node, the source included."""
    return np.full(dim, 1 + _below(rng, dim + 1), dtype=np.int64)


# --------------------------------------------------------------------------
# predecessor vectors: unary


@pred_op("redirect_one", 1, notion=REDIRECTING)
def redirect_one(x, *, rng):
    n = len(x) + 1
    y = x.copy()
    i = _below(rng, n - 1)
    v = 1 + _below(rng, n - 1)
    y[i] = v + (v >= x[i])
    return y


@pred_op("extend_path", 1)
def extend_path(x, *, rng):
    """Point one uniformly chosen off-path node at the end of the source path."""
    end = K.path_endpoint(x)
    if end < 0:
        return _flag("extend_path", x)
    off = np.flatnonzero(~K.reach_mask(x)[2:]) + 2
    if len(off) == 0:
        return _flag("extend_path", x)
    y = x.copy()
    y[off[_below(rng, len(off))] - 2] = end
    return y


@pred_op("attach_any", 1)
def attach_any(x, *, rng):
    """Point one uniform unconnected node at one uniform connected node (source included)."""
    if not K.tree_shape_ok(x):
        return _flag("attach_any", x)
    mask = K.reach_mask(x)
    off = np.flatnonzero(~mask[2:]) + 2
    if len(off) == 0:
        return _flag("attach_any", x)
    on = np.flatnonzero(mask)
    y = x.copy()
    y[off[_below(rng, len(off))] - 2] = on[_below(rng, len(on))]
    return y


@pred_op("attach", 1)
def attach(x, *, rng, address):
    """Point one uniform unconnected node at the node reached by a structural address.

    ``address`` lists canonical subtree codes along the path from the source;
    it only names a node when each step is unambiguous, which is exactly when
    every source-fixing automorphism of x keeps that node in place.
    """
    if not K.tree_shape_ok(x):
        return _flag("attach", x)
    target = resolve_address(x, address)
    off = np.flatnonzero(~K.reach_mask(x)[2:]) + 2
    if target is None or len(off) == 0:
        return _flag("attach", x)
    y = x.copy()
    y[off[_below(rng, len(off))] - 2] = target
    return y


# --------------------------------------------------------------------------
# predecessor vectors: binary and ternary


@pred_op("mark_union", 2)
def mark_union(marks, x, *, rng=None):
    """Nodes marked in either parent (entry differs from the node) point to the source."""
    idx = np.arange(2, len(x) + 2)
    return np.where((marks != idx) | (x != idx), 1, idx).astype(np.int64)


@pred_op("keep_marked", 2)
def keep_marked(marks, z, *, rng=None):
    """z restricted to nodes marked in ``marks``; every other node self-loops."""
    idx = np.arange(2, len(z) + 2)
    return np.where(marks != idx, z, idx).astype(np.int64)


@pred_op("agree", 2)
def agree(z, x, *, rng=None):
    """Entries on which both parents agree; every other node self-loops."""
    idx = np.arange(2, len(z) + 2)
    return np.where(z == x, z, idx).astype(np.int64)


@pred_op("attach_unmarked", 2)
def attach_unmarked(x, marks, *, rng):
    """Like extend_path, but only over off-path nodes that self-loop in ``marks``."""
    end = K.path_endpoint(x)
    if end < 0:
        return _flag("attach_unmarked", x)
    idx = np.arange(2, len(x) + 2)
    free = np.flatnonzero(~K.reach_mask(x)[2:] & (marks == idx)) + 2
    if len(free) == 0:
        return _flag("attach_unmarked", x)
    y = x.copy()
    y[free[_below(rng, len(free))] - 2] = end
    return y


@pred_op("graft", 3)
def graft(a, b, c, *, rng=None):
    """a, overwritten by b wherever b differs from c."""
    return np.where(b != c, b, a).astype(np.int64)


# --------------------------------------------------------------------------
# canonical tree codes (shared with the construction phase)


def children_of(pred) -> dict[int, list[int]]:
    """Child lists of the part of the pointer graph that reaches the source."""
    mask = K.reach_mask(np.asarray(pred, dtype=np.int64))
    kids: dict[int, list[int]] = {1: []}
    for i, p in enumerate(pred):
        v = i + 2
        if mask[v]:
            kids.setdefault(int(p), []).append(v)
            kids.setdefault(v, [])
    return kids


def subtree_codes(kids: dict[int, list[int]], root: int = 1) -> dict[int, str]:
    """AHU-style canonical code of every rooted subtree."""
    codes: dict[int, str] = {}
    order, stack = [], [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(kids.get(v, ()))
    for v in reversed(order):
        codes[v] = "(" + "".join(sorted(codes[c] for c in kids.get(v, ()))) + ")"
    return codes


def resolve_address(pred, address) -> int | None:
    kids = children_of(pred)
    codes = subtree_codes(kids)
    v = 1
    for code in address:
        hits = [c for c in kids.get(v, ()) if codes[c] == code]
        if len(hits) != 1:
            return None
        v = hits[0]
    return v


def address_in(kids: dict[int, list[int]], parent: dict[int, int], w: int,
               root: int = 1) -> tuple[str, ...]:
    """Structural address of w: canonical codes along the root-to-w path."""
    codes = subtree_codes(kids, root)
    path = []
    while w != root:
        path.append(codes[w])
        w = parent[w]
    return tuple(reversed(path))


# --------------------------------------------------------------------------
# symmetry groups and the statistical check


class DimensionTooLarge(ValueError):
    pass


def random_symmetry(notion: str, dim: int, rng) -> Callable[[np.ndarray], np.ndarray]:
    """A random group element acting on points of the given notion.

    ``dim`` is m for bit strings and n for predecessor vectors.
    """
    if notion == HYPERCUBE:
        perm = rng.permutation(dim)
        flip = rng.integers(0, 2, size=dim, dtype=np.uint8)
        return lambda x: x[perm] ^ flip
    if notion == STRUCTURE:
        sigma = np.concatenate(([0, 1], 2 + rng.permutation(dim - 1))).astype(np.int64)
        target = sigma[2:] - 2

        def relabel(x):
            out = np.empty_like(x)
            out[target] = sigma[x]
            return out
        return relabel
    if notion == REDIRECTING:
        tables = np.stack([np.concatenate(([0], 1 + rng.permutation(dim))) for _ in range(dim - 1)])
        rows = np.arange(dim - 1)
        return lambda x: tables[rows, x].astype(np.int64)
    raise ValueError(f"unknown notion {notion!r}")


def _sample_counts(op, parents, rng, trials, params) -> Counter:
    draw = op.sampler

    def batch(k):
        return Counter([draw(*parents, rng=rng, **params).tobytes() for _ in range(k)])

    # a point mass shows itself quickly; skip the remaining draws when the
    # first 2000 samples never moved
    probe = min(trials, 2000)
    counts = batch(probe)
    if len(counts) == 1 and probe < trials:
        return Counter({next(iter(counts)): trials})
    counts.update(batch(trials - probe))
    return counts


def _tv(p: Counter, q: Counter, total: int) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys) / total


def verify_unbiased(op: VariationOp, notion: str, dim: int, trials: int = 100_000,
                    parents: list[tuple] | None = None, symmetries: int = 10,
                    threshold: float = 0.05, seed: int = 0, params: dict | None = None) -> dict:
    """Compare op on transformed parents with the transformed output of op.

    ``parents`` is a panel of parent tuples; by default uniform random ones.
    Returns the report as a dict with keys operator, notion, dim, trials,
    max_tv, threshold, pass.
    """
    if (op.domain == "bits" and dim > 8) or (op.domain == "preds" and dim > 6):
        raise DimensionTooLarge(f"{op.domain} dimension {dim} cannot be enumerated")
    rng = np.random.default_rng(seed)
    params = dict(params or {})
    if op.arity == 0:
        params.setdefault("dim", dim if op.domain == "bits" else dim - 1)
    if parents is None:
        if op.domain == "bits":
            parents = [tuple(rng.integers(0, 2, size=dim, dtype=np.uint8) for _ in range(op.arity))
                       for _ in range(2)]
        else:
            parents = [tuple(rng.integers(1, dim + 1, size=dim - 1).astype(np.int64)
                             for _ in range(op.arity)) for _ in range(2)]
    width = dim if op.domain == "bits" else dim - 1
    dtype = np.uint8 if op.domain == "bits" else np.int64
    worst = 0.0
    for panel in parents:
        base = _sample_counts(op, panel, rng, trials, params)
        # parents that a symmetry leaves unchanged (always, for 0-ary operators)
        # share one independent comparison sample
        seen: dict = {}
        for _ in range(symmetries):
            g = random_symmetry(notion, dim, rng)
            moved_parents = tuple(g(p) for p in panel)
            key = b"|".join(p.tobytes() for p in moved_parents)
            if key not in seen:
                seen[key] = _sample_counts(op, moved_parents, rng, trials, params)
            moved = seen[key]
            mapped: Counter = Counter()
            for key, c in base.items():
                mapped[g(np.frombuffer(key, dtype=dtype, count=width)).tobytes()] += c
            worst = max(worst, _tv(moved, mapped, trials))
    return {"operator": op.name, "notion": notion, "dim": dim, "trials": trials,
            "max_tv": worst, "threshold": threshold, "pass": worst <= threshold}


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=False)
