"""Query sessions, capability models, rankings and run records.

Algorithms never call an oracle directly. They receive a :class:`Session`
that counts every evaluation, hides whatever the declared model forbids,
and latches the query index at which an optimum was first evaluated.
"""
from __future__ import annotations

import csv
import io
import math
import time
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np
from sortedcontainers import SortedList

INF = math.inf
STAR = math.inf


# --------------------------------------------------------------------------
# objective values


class BiCriteria(NamedTuple):
    components: int
    weight: float


Objective = Any  # BiCriteria | tuple[float, ...] | float


def objective_parts(value: Objective) -> tuple:
    """Split an objective into the components that get ranked separately."""
    if isinstance(value, BiCriteria):
        return (value.components, value.weight)
    if isinstance(value, tuple):
        raise TypeError("distance tuples have no ranking view")
    return (value,)


def rank_of(values: Sequence) -> list[int]:
    """rank(c) = 1 + number of values strictly smaller than c."""
    if len(values) == 0:
        raise ValueError("rank_of needs a nonempty sequence")
    ordered = sorted(values)
    return [bisect_left(ordered, v) + 1 for v in values]


# --------------------------------------------------------------------------
# capabilities


HYPERCUBE = "hypercube"
STRUCTURE = "structure-preserving"
REDIRECTING = "redirecting"


@dataclass(frozen=True)
class Capability:
    unbiased: bool = False
    ranking: bool = False
    arity: float = STAR
    notion: str | None = None

    def __str__(self) -> str:
        if not self.unbiased:
            return "ranking-unrestricted" if self.ranking else "unrestricted"
        k = "*" if self.arity == STAR else str(int(self.arity))
        base = f"{'ranking-' if self.ranking else ''}unbiased-{k}"
        return f"{base}/{self.notion}" if self.notion else base


def Unrestricted() -> Capability:
    return Capability()


def RankingUnrestricted() -> Capability:
    return Capability(ranking=True)


def UnbiasedK(k: float = STAR, notion: str | None = None) -> Capability:
    if k != STAR and k < 1:
        raise ValueError("arity must be >= 1 or STAR")
    return Capability(unbiased=True, arity=k, notion=notion)


def RankingUnbiasedK(k: float = STAR, notion: str | None = None) -> Capability:
    if k != STAR and k < 1:
        raise ValueError("arity must be >= 1 or STAR")
    return Capability(unbiased=True, ranking=True, arity=k, notion=notion)


def parse_capability(text: str) -> Capability:
    """Inverse of ``str(Capability)``."""
    text = text.strip()
    if text == "unrestricted":
        return Unrestricted()
    if text == "ranking-unrestricted":
        return RankingUnrestricted()
    head, _, notion = text.partition("/")
    ranking = head.startswith("ranking-")
    if ranking:
        head = head[len("ranking-"):]
    if not head.startswith("unbiased-"):
        raise ValueError(f"unknown model {text!r}")
    k_text = head[len("unbiased-"):]
    k = STAR if k_text == "*" else int(k_text)
    return Capability(unbiased=True, ranking=ranking, arity=k, notion=notion or None)


class CapabilityError(Exception):
    pass


class ArityViolation(CapabilityError):
    pass


class LiteralPointInjection(CapabilityError):
    pass


class CapabilityMismatch(CapabilityError):
    pass


class BudgetExhausted(Exception):
    pass


class OptimumReached(Exception):
    """Raised inside a session the moment an optimal point is evaluated."""


class _AttemptOver(Exception):
    pass


def check_permits(session_cap: Capability, needed: Capability) -> None:
    """Raise unless an algorithm declaring ``needed`` may run under ``session_cap``."""
    if not session_cap.unbiased and not session_cap.ranking:
        return
    if session_cap.ranking and not needed.ranking:
        raise CapabilityMismatch(f"{needed} needs raw values, session is {session_cap}")
    if session_cap.unbiased:
        if not needed.unbiased:
            raise CapabilityMismatch(f"{needed} needs point access, session is {session_cap}")
        if session_cap.notion and needed.notion and session_cap.notion != needed.notion:
            raise CapabilityMismatch(f"notion {needed.notion} vs {session_cap.notion}")
        if needed.arity > session_cap.arity:
            raise ArityViolation(f"{needed} needs arity {needed.arity}, session allows {session_cap.arity}")


# --------------------------------------------------------------------------
# problems and sessions


@dataclass
class Problem:
    """An oracle plus the public facts an algorithm may know about it."""

    oracle: Callable[[np.ndarray], Objective]
    domain: str  # "bits" or "preds"
    dim: int
    meta: dict = field(default_factory=dict)
    is_optimal: Callable[[Objective], bool] | None = None


class Handle:
    """Opaque reference to an evaluated point."""

    __slots__ = ("index", "_point")

    def __init__(self, index: int, point: np.ndarray | None):
        self.index = index
        self._point = point

    def __repr__(self) -> str:
        return f"Handle({self.index})"

    def __reduce__(self):
        return (Handle, (self.index, None))


class Session:
    def __init__(self, problem: Problem, capability: Capability, budget: int | None = None,
                 seed: int = 0, stop_at_optimum: bool = True):
        self.problem = problem
        self.capability = capability
        self.budget = budget
        self.rng = np.random.default_rng(seed)
        self.stop_at_optimum = stop_at_optimum
        self.meta = problem.meta
        self.count = 0
        self.queries_to_optimum: int | None = None
        self._values: list = []
        self._sorted: list[SortedList] | None = None
        self._indexed = 0       # history prefix already inside self._sorted
        self._attempt_end: int | None = None

    # -- evaluation -------------------------------------------------------

    def _evaluate(self, point: np.ndarray) -> Handle:
        count = self.count
        if self.budget is not None and count >= self.budget:
            raise BudgetExhausted(f"budget {self.budget} exhausted")
        if self._attempt_end is not None and count >= self._attempt_end:
            raise _AttemptOver()
        problem = self.problem
        value = problem.oracle(point)
        self.count = count + 1
        self._values.append(value)
        if self.queries_to_optimum is None and problem.is_optimal is not None \
                and problem.is_optimal(value):
            self.queries_to_optimum = count + 1
            if self.stop_at_optimum:
                raise OptimumReached()
        return Handle(count, point)

    def query(self, point) -> Handle:
        """Evaluate a literal point (unrestricted models only)."""
        if self.capability.unbiased:
            raise LiteralPointInjection("unbiased sessions only accept operator applications")
        x = point.copy() if isinstance(point, np.ndarray) else np.array(point)
        x.setflags(write=False)
        return self._evaluate(x)

    def apply(self, op, *parents: Handle, **params) -> Handle:
        """Sample a point from a variation operator and evaluate it."""
        cap = self.capability
        if cap.unbiased:
            arity = getattr(op, "arity", None)
            if arity is None or not getattr(op, "unbiased", False):
                raise LiteralPointInjection(f"{op!r} is not a declared unbiased operator")
            if arity > cap.arity or len(parents) > cap.arity:
                raise ArityViolation(f"{op.name} has arity {arity}, session allows {cap.arity}")
            if cap.notion and op.notion != cap.notion:
                raise CapabilityMismatch(f"{op.name} is {op.notion}, session needs {cap.notion}")
        point = op(tuple(h._point for h in parents), self.rng, **params)
        point.flags.writeable = False
        return self._evaluate(point)

    # -- views ------------------------------------------------------------

    def value(self, h: Handle) -> Objective:
        if self.capability.ranking:
            raise CapabilityError("raw objective values are hidden under ranking models")
        return self._values[h.index]

    def point(self, h: Handle) -> np.ndarray:
        if self.capability.unbiased:
            raise CapabilityError("points are opaque under unbiased models")
        return h._point

    def rank(self, h: Handle):
        """Current rank of h among all evaluated points, per objective component."""
        parts = objective_parts(self._values[h.index])
        if self._sorted is None:
            self._sorted = [SortedList() for _ in parts]
        for v in self._values[self._indexed:]:
            for bucket, part in zip(self._sorted, objective_parts(v)):
                bucket.add(part)
        self._indexed = len(self._values)
        ranks = tuple(b.bisect_left(p) + 1 for b, p in zip(self._sorted, parts))
        return ranks if len(ranks) > 1 else ranks[0]

    def ranking(self) -> list:
        """Ranks of the whole history, recomputed from scratch for checking."""
        parts = [objective_parts(v) for v in self._values]
        cols = [rank_of([p[i] for p in parts]) for i in range(len(parts[0]))]
        return cols[0] if len(cols) == 1 else [tuple(r) for r in zip(*cols)]

    def _order_key(self, h: Handle, part: int | None):
        v = self._values[h.index]
        if self.capability.ranking:
            parts = objective_parts(v)
            return parts if part is None else parts[part]
        return v if part is None else objective_parts(v)[part]

    def same(self, a: Handle, b: Handle, part: int | None = None) -> bool:
        """Equal objective, or equal in one component when ``part`` is given.

        Under ranking models this is exactly equality of ranks, which is
        equality of the underlying values, so no rank is materialised.
        """
        return self._order_key(a, part) == self._order_key(b, part)

    def less(self, a: Handle, b: Handle, part: int | None = None) -> bool:
        """Strictly better objective (lexicographic for bi-criteria)."""
        return self._order_key(a, part) < self._order_key(b, part)

    @property
    def solved(self) -> bool:
        return self.queries_to_optimum is not None


# --------------------------------------------------------------------------
# algorithms, runs and restarts


def algorithm(name: str, requires: Capability):
    def mark(fn):
        fn.name = name
        fn.requires = requires
        return fn
    return mark


def restart(alg, s: int):
    """Run independent attempts of at most s queries each until the optimum is hit."""
    if s < 1:
        raise ValueError("attempt length must be >= 1")

    def wrapped(session: Session):
        while not session.solved:
            start = session.count
            session._attempt_end = start + s
            try:
                alg(session)
            except _AttemptOver:
                pass
            finally:
                session._attempt_end = None
            if session.count == start:
                return

    wrapped.name = f"restart({alg.name},{s})"
    wrapped.requires = alg.requires
    return wrapped


RUN_FIELDS = ["instance_id", "algorithm", "model", "n", "m", "seed",
              "queries_to_optimum", "budget", "success", "wall_ms"]


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    algorithm: str
    model: str
    n: int
    m: int
    seed: int
    queries_to_optimum: int | None
    budget: int | None
    success: bool
    wall_ms: float | None = None

    def to_row(self) -> list[str]:
        return [self.instance_id, self.algorithm, self.model, str(self.n), str(self.m),
                str(self.seed),
                "" if self.queries_to_optimum is None else str(self.queries_to_optimum),
                "INF" if self.budget is None else str(self.budget),
                "true" if self.success else "false",
                "" if self.wall_ms is None else repr(self.wall_ms)]

    @classmethod
    def from_row(cls, row: Sequence[str]) -> "RunRecord":
        d = dict(zip(RUN_FIELDS, row))
        return cls(d["instance_id"], d["algorithm"], d["model"], int(d["n"]), int(d["m"]),
                   int(d["seed"]),
                   None if d["queries_to_optimum"] == "" else int(d["queries_to_optimum"]),
                   None if d["budget"] == "INF" else int(d["budget"]),
                   d["success"] == "true",
                   None if d["wall_ms"] == "" else float(d["wall_ms"]))


def records_to_csv(records: Sequence[RunRecord], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(RUN_FIELDS)
    for r in records:
        w.writerow(r.to_row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[RunRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if rows and rows[0] == RUN_FIELDS:
        rows = rows[1:]
    return [RunRecord.from_row(r) for r in rows if r]


def run(alg, problem: Problem, capability: Capability, budget: int | None, seed: int,
        instance_id: str = "", stop_at_optimum: bool = True, timed: bool = False) -> RunRecord:
    """Execute one algorithm run and report when it first evaluated an optimum."""
    check_permits(capability, alg.requires)
    session = Session(problem, alg.requires, budget=budget, seed=seed,
                      stop_at_optimum=stop_at_optimum)
    t0 = time.perf_counter()
    try:
        alg(session)
    except (OptimumReached, BudgetExhausted):
        pass
    wall = (time.perf_counter() - t0) * 1e3 if timed else None
    q = session.queries_to_optimum
    return RunRecord(instance_id, alg.name, str(capability), int(problem.meta.get("n", 0)),
                     int(problem.meta.get("m", 0)), seed, q, budget, q is not None, wall)


def run_session(alg, problem: Problem, capability: Capability | None = None, budget: int | None = None,
                seed: int = 0, stop_at_optimum: bool = True) -> Session:
    """Like :func:`run` but hands back the finished session for inspection."""
    if capability is not None:
        check_permits(capability, alg.requires)
    session = Session(problem, alg.requires, budget=budget, seed=seed,
                      stop_at_optimum=stop_at_optimum)
    try:
        alg(session)
    except (OptimumReached, BudgetExhausted):
        pass
    return session
