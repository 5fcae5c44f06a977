"""Coprime bipartite graphs between APs, maximum matchings with Hall
violators, the threshold f(n), and the adjacent-interval sweep.

A violator (S, T) has S on the left, T on the right, no edge between them
and |S| + |T| > |left|; then N(S) misses all of T, so |N(S)| < |S|.
"""

from __future__ import annotations

import enum
import json
import math
import os
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import BudgetExceeded, InvalidArgument
from .numcore import ArithProg, odd_part
from ._pool import pmap


class Relation(enum.Enum):
    COPRIME = "coprime"
    TWO_COPRIME = "two_coprime"

    def holds(self, a: int, b: int) -> bool:
        if self is Relation.COPRIME:
            return math.gcd(a, b) == 1
        return math.gcd(odd_part(a), odd_part(b)) == 1


@dataclass(frozen=True)
class CoprimeBipartiteGraph:
    left: ArithProg
    right: ArithProg
    relation: Relation
    adjacency: tuple[tuple[int, ...], ...]  # right indices per left index

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.right and self.right.index(b) in self.adjacency[self.left.index(a)]


def build_coprime_graph(
    A: ArithProg,
    B: ArithProg,
    relation: Relation = Relation.COPRIME,
    allow_overlap: bool = False,
) -> CoprimeBipartiteGraph:
    if len(A) != len(B):
        raise InvalidArgument(f"unequal sizes {len(A)} and {len(B)}")
    if not allow_overlap and not A.isdisjoint(B):
        raise InvalidArgument("left and right must be disjoint")
    right = list(B)
    holds = relation.holds
    adjacency = tuple(
        tuple(j for j, b in enumerate(right) if holds(a, b)) for a in A
    )
    return CoprimeBipartiteGraph(A, B, relation, adjacency)


@dataclass(frozen=True)
class MatchingOutcome:
    """Either a perfect ``mapping`` (value pairs, ascending in the left
    value) or a Hall ``violator`` (S, T) as sorted value tuples."""

    mapping: tuple[tuple[int, int], ...] | None = None
    violator: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    @property
    def ok(self) -> bool:
        return self.mapping is not None

    def to_json(self) -> dict:
        if self.ok:
            return {"mapping": [list(p) for p in self.mapping]}
        S, T = self.violator
        return {"violator": {"S": list(S), "T": list(T)}}

    @classmethod
    def from_json(cls, d: dict) -> "MatchingOutcome":
        if "mapping" in d:
            return cls(mapping=tuple(tuple(p) for p in d["mapping"]))
        v = d["violator"]
        return cls(violator=(tuple(v["S"]), tuple(v["T"])))


def validate_outcome(
    A: Sequence[int], B: Sequence[int], outcome: MatchingOutcome, relation: Relation
) -> bool:
    """Re-check a matching outcome from scratch against the raw values."""
    A, B = list(A), list(B)
    if outcome.ok:
        pairs = outcome.mapping
        return (
            sorted(a for a, _ in pairs) == sorted(A)
            and sorted(b for _, b in pairs) == sorted(B)
            and all(relation.holds(a, b) for a, b in pairs)
        )
    S, T = outcome.violator
    return (
        set(S) <= set(A)
        and set(T) <= set(B)
        and len(set(S)) + len(set(T)) > len(A)
        and not any(relation.holds(s, t) for s in S for t in T)
    )


def _hopcroft_karp(n_left: int, n_right: int, adj: Sequence[Sequence[int]]):
    INF = n_left + n_right + 1
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    dist = [0] * n_left

    def bfs() -> bool:
        q = deque()
        for u in range(n_left):
            if match_l[u] < 0:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = INF
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w < 0:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w < 0 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = INF
        return False

    while bfs():
        for u in range(n_left):
            if match_l[u] < 0:
                dfs(u)
    return match_l, match_r


def _hall_violator(adj, match_l, match_r, n_right):
    # alternating reachability from free left vertices (Konig cut)
    seen_l = [False] * len(adj)
    seen_r = [False] * n_right
    q = deque(u for u in range(len(adj)) if match_l[u] < 0)
    for u in q:
        seen_l[u] = True
    while q:
        u = q.popleft()
        for v in adj[u]:
            if not seen_r[v]:
                seen_r[v] = True
                w = match_r[v]
                if w >= 0 and not seen_l[w]:
                    seen_l[w] = True
                    q.append(w)
    S = [u for u, s in enumerate(seen_l) if s]
    T = [v for v, s in enumerate(seen_r) if not s]
    return S, T


def maximum_matching(G: CoprimeBipartiteGraph) -> MatchingOutcome:
    left, right = list(G.left), list(G.right)
    match_l, match_r = _hopcroft_karp(len(left), len(right), G.adjacency)
    if all(v >= 0 for v in match_l):
        return MatchingOutcome(
            mapping=tuple((left[u], right[v]) for u, v in enumerate(match_l))
        )
    S, T = _hall_violator(G.adjacency, match_l, match_r, len(right))
    return MatchingOutcome(
        violator=(tuple(left[u] for u in S), tuple(right[v] for v in T))
    )


def matching_size(G: CoprimeBipartiteGraph) -> int:
    match_l, _ = _hopcroft_karp(len(G.left), len(G.right), G.adjacency)
    return sum(v >= 0 for v in match_l)


def find_coprime_mapping(
    A: ArithProg, B: ArithProg, allow_overlap: bool = False
) -> MatchingOutcome:
    return maximum_matching(build_coprime_graph(A, B, Relation.COPRIME, allow_overlap))


# -- adjacent intervals -----------------------------------------------------


@dataclass(frozen=True)
class ParityMappingResult:
    k: int
    ell: int
    outcome: MatchingOutcome
    failed_side: str | None = None  # "even->odd" or "odd->even"


def adjacent_parity_mapping(k: int, ell: int) -> ParityMappingResult:
    """Coprime mapping {ell+1..ell+k} -> {ell+k+1..ell+2k} via two 2-coprime
    matchings: evens of A to odds of B, odds of A to evens of B.

    Every coprime mapping between consecutive intervals must have this
    shape, so a failing side lifts to a violator for the whole problem: the
    other parity class of A (or B) is added to S (or T), which has no coprime
    partner there anyway.
    """
    if k < 1 or not 0 <= ell < k:
        raise InvalidArgument(f"need 0 <= ell < k, got k={k}, ell={ell}")
    A = ArithProg.interval(ell + 1, ell + k)
    B = ArithProg.interval(ell + k + 1, ell + 2 * k)
    A0, A1, B0, B1 = A.evens(), A.odds(), B.evens(), B.odds()
    assert len(A0) == len(B1) and len(A1) == len(B0)

    even_side = maximum_matching(build_coprime_graph(A0, B1, Relation.TWO_COPRIME))
    odd_side = maximum_matching(build_coprime_graph(A1, B0, Relation.TWO_COPRIME))
    if even_side.ok and odd_side.ok:
        mapping = tuple(sorted(even_side.mapping + odd_side.mapping))
        return ParityMappingResult(k, ell, MatchingOutcome(mapping=mapping))
    if not even_side.ok:
        S, T = even_side.violator
        violator = (S, tuple(sorted(T + tuple(B0))))
        side = "even->odd"
    else:
        S, T = odd_side.violator
        violator = (tuple(sorted(S + tuple(A0))), T)
        side = "odd->even"
    return ParityMappingResult(k, ell, MatchingOutcome(violator=violator), side)


@dataclass
class AdjacentReport:
    k_min: int
    k_max: int
    cases: int
    failures: list[ParityMappingResult]
    entries: list[ParityMappingResult] = field(repr=False, default_factory=list)
    elapsed: float = 0.0


def _adjacent_case(args):
    return adjacent_parity_mapping(*args)


def verify_adjacent_range(
    k_min: int, k_max: int, allow_small: bool = False, threads: int = 1
) -> AdjacentReport:
    if k_min > k_max or k_min < 1 or (k_min < 4 and not allow_small):
        raise InvalidArgument(f"need 4 <= k_min <= k_max, got {k_min}..{k_max}")
    t0 = time.perf_counter()
    cases = [(k, ell) for k in range(k_min, k_max + 1) for ell in range(k)]
    entries = list(pmap(_adjacent_case, cases, threads))
    failures = [e for e in entries if not e.outcome.ok]
    return AdjacentReport(
        k_min, k_max, len(entries), failures, entries, time.perf_counter() - t0
    )


# -- f(n) -------------------------------------------------------------------


def interval_pairs(n: int, size: int, include_overlapping: bool = False):
    """Unordered pairs (A.start, B.start) of length-``size`` intervals in [n]."""
    top = n - size + 1
    for a in range(1, top + 1):
        b0 = a if include_overlapping else a + size
        for b in range(b0, top + 1):
            yield a, b


@dataclass
class FailureRecord:
    two_m: int
    a_start: int
    b_start: int
    violator: tuple[tuple[int, ...], tuple[int, ...]]

    @property
    def A(self) -> ArithProg:
        return ArithProg(self.a_start, 1, self.two_m)

    @property
    def B(self) -> ArithProg:
        return ArithProg(self.b_start, 1, self.two_m)


@dataclass
class FResult:
    n: int
    f_value: int
    failures: list[FailureRecord]
    pairs_checked: int
    include_overlapping: bool = False


def _pair_outcome(args) -> MatchingOutcome:
    a, b, size, overlap = args
    return find_coprime_mapping(
        ArithProg(a, 1, size), ArithProg(b, 1, size), allow_overlap=overlap
    )


class Checkpoint:
    """Append-only JSONL log of per-pair outcomes.

    Each line: {"n", "two_m", "a_start", "b_start", "outcome"} where
    outcome is {"mapping": true} or {"violator": {"S": [...], "T": [...]}}.
    Resuming replays the file and skips every pair already present; a torn
    final line left by a crash is cut off before appending.
    """

    def __init__(self, path: str | os.PathLike | None):
        self.path = path
        self.done: dict[tuple[int, int, int, int], dict] = {}
        self.fresh = 0
        self._fh = None
        if path is not None and os.path.exists(path):
            good = 0
            with open(path, "rb") as fh:
                for raw in fh:
                    if not raw.endswith(b"\n"):
                        break  # torn final line from an interrupted write
                    if raw.strip():
                        rec = json.loads(raw)
                        key = (rec["n"], rec["two_m"], rec["a_start"], rec["b_start"])
                        self.done[key] = rec["outcome"]
                    good += len(raw)
            if good != os.path.getsize(path):
                os.truncate(path, good)

    def record(self, n, two_m, a, b, outcome: MatchingOutcome) -> None:
        payload = {"mapping": True} if outcome.ok else outcome.to_json()
        self.done[(n, two_m, a, b)] = payload
        self.fresh += 1
        if self.path is None:
            return
        if self._fh is None:
            self._fh = open(self.path, "a")
        rec = {"n": n, "two_m": two_m, "a_start": a, "b_start": b, "outcome": payload}
        self._fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def sync(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self.sync()
            self._fh.close()
            self._fh = None


def compute_f(
    n: int,
    *,
    include_overlapping: bool = False,
    checkpoint: Checkpoint | None = None,
    budget_secs: float | None = None,
    max_pairs: int | None = None,
    threads: int = 1,
) -> FResult:
    """Smallest even f with a coprime mapping between every pair of
    length-2m intervals in [n] for all 2m >= f; also every failing pair.

    ``max_pairs`` caps the number of freshly computed pairs (a deterministic
    budget); on exhaustion BudgetExceeded carries the partial FResult.
    """
    if n < 2:
        raise InvalidArgument(f"n must be >= 2, got {n}")
    ck = checkpoint or Checkpoint(None)
    t0 = time.perf_counter()
    fresh = 0
    failures: list[FailureRecord] = []
    checked = 0
    try:
        for size in range(2, 2 * (n // 2) + 1, 2):
            pairs = list(interval_pairs(n, size, include_overlapping))
            todo = [(a, b) for a, b in pairs if (n, size, a, b) not in ck.done]
            if max_pairs is not None and fresh + len(todo) > max_pairs:
                todo = todo[: max(0, max_pairs - fresh)]
                over = True
            else:
                over = False
            args = [(a, b, size, include_overlapping) for a, b in todo]
            for (a, b), out in zip(todo, pmap(_pair_outcome, args, threads)):
                ck.record(n, size, a, b, out)
                fresh += 1
                if budget_secs is not None and time.perf_counter() - t0 > budget_secs:
                    over = True
                    break
            ck.sync()
            if over:
                raise BudgetExceeded(f"budget exhausted at n={n}, 2m={size}")
            for a, b in pairs:
                rec = ck.done[(n, size, a, b)]
                checked += 1
                if "violator" in rec:
                    v = rec["violator"]
                    failures.append(FailureRecord(size, a, b, (tuple(v["S"]), tuple(v["T"]))))
    except BudgetExceeded as exc:
        exc.partial = FResult(n, _threshold(failures), failures, checked, include_overlapping)
        raise
    return FResult(n, _threshold(failures), failures, checked, include_overlapping)


def _threshold(failures: Iterable[FailureRecord]) -> int:
    return max((f.two_m for f in failures), default=0) + 2
