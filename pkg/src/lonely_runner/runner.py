"""Lonely-runner instances: exact tight/loose/counterexample classification
and construction of certified loose witnesses for speed sets with
n < v_n <= 2n - 2k.

Every witness returned here has been re-verified in exact arithmetic.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .central import find_coprime_pair
from .errors import Inapplicable, InvalidArgument, ResourceLimit, SearchFailed
from .numcore import ArithProg, mod_inverse


@dataclass(frozen=True)
class SpeedSet:
    speeds: tuple[int, ...]

    def __post_init__(self):
        sp = self.speeds
        if not sp:
            raise InvalidArgument("speed set must be nonempty")
        if sp[0] < 1 or any(a >= b for a, b in zip(sp, sp[1:])):
            raise InvalidArgument("speeds must be strictly increasing positive integers")

    @classmethod
    def of(cls, speeds: Iterable[int]) -> "SpeedSet":
        return cls(tuple(speeds))

    @property
    def n(self) -> int:
        return len(self.speeds)

    def __iter__(self):
        return iter(self.speeds)

    def __contains__(self, v) -> bool:
        return v in set(self.speeds)


def _as_speedset(V) -> SpeedSet:
    return V if isinstance(V, SpeedSet) else SpeedSet.of(V)


def fractional_part(v: int, t) -> Fraction:
    x = v * Fraction(t)
    return x - math.floor(x)


def verify_loose_witness(V, t) -> bool:
    """Exact check that 1/(n+1) < {v t} < n/(n+1) for every speed."""
    V = _as_speedset(V)
    n = V.n
    t = Fraction(t)
    lo, hi = Fraction(1, n + 1), Fraction(n, n + 1)
    return all(lo < fractional_part(v, t) < hi for v in V)


def satisfies_closed(V, t) -> bool:
    V = _as_speedset(V)
    n = V.n
    t = Fraction(t)
    lo, hi = Fraction(1, n + 1), Fraction(n, n + 1)
    return all(lo <= fractional_part(v, t) <= hi for v in V)


# -- classification -----------------------------------------------------------


class InstanceKind(enum.Enum):
    LOOSE = "loose"
    TIGHT = "tight"
    COUNTEREXAMPLE = "counterexample"


@dataclass(frozen=True)
class InstanceClass:
    kind: InstanceKind
    witness: Fraction | None = None  # a loose time, when LOOSE
    witness_points: tuple[Fraction, ...] = ()  # times in [0,1) meeting the closed bound, when TIGHT


def classify_instance(V, max_sum: int = 10**6) -> InstanceClass:
    """Classify a speed set by sweeping t over one period.

    Time is scaled by N = (n+1) * lcm(V) so every boundary is an integer.
    Speed v is "bad" near each a/v: within distance 1/((n+1)v) it leaves
    [1/(n+1), n/(n+1)].  The instance is loose iff the closed bad intervals
    fail to cover the circle, and tight iff they cover it but the open ones
    do not.  Uncovered points of the open cover are then isolated and are
    returned as ``witness_points``.
    """
    V = _as_speedset(V)
    if sum(V.speeds) > max_sum:
        raise ResourceLimit(f"sum of speeds {sum(V.speeds)} exceeds budget {max_sum}")
    n = V.n
    L = math.lcm(*V.speeds)
    N = (n + 1) * L
    intervals = []
    for v in V:
        w = L // v  # half-width
        period = (n + 1) * w
        # a = 0..v covers the wrap at both ends of [0, N]
        intervals.extend((a * period - w, a * period + w) for a in range(v + 1))
    intervals.sort()

    # closed cover of [0, N]
    reach = intervals[0][1]
    for lo, hi in intervals:
        if lo > reach:
            t = Fraction(reach + lo, 2 * N)
            assert verify_loose_witness(V, t)
            return InstanceClass(InstanceKind.LOOSE, witness=t)
        reach = max(reach, hi)

    # open cover: a point is missed wherever the next interval starts at or after reach
    points = set()
    reach = intervals[0][1]
    for lo, hi in intervals[1:]:
        if lo >= reach and 0 <= reach < N:
            points.add(Fraction(reach, N))
        reach = max(reach, hi)
    if points:
        return InstanceClass(InstanceKind.TIGHT, witness_points=tuple(sorted(points)))
    return InstanceClass(InstanceKind.COUNTEREXAMPLE)


def classify_by_candidates(V) -> InstanceKind:
    """Slow reference classifier: test every boundary time and every midpoint
    between consecutive boundary times, in Fractions."""
    V = _as_speedset(V)
    n = V.n
    cands = set()
    for v in V:
        for a in range(v):
            for c in (Fraction(0), Fraction(1, n + 1), Fraction(n, n + 1)):
                cands.add((a + c) / v)
    pts = sorted(cands) + [Fraction(1)]
    if any(verify_loose_witness(V, (x + y) / 2) for x, y in zip(pts, pts[1:])):
        return InstanceKind.LOOSE
    if any(satisfies_closed(V, c) for c in pts[:-1]):
        return InstanceKind.TIGHT
    return InstanceKind.COUNTEREXAMPLE


# -- witness construction ------------------------------------------------------


class WitnessKind(enum.Enum):
    INVERSE_MISSING = "inverse_missing"
    COPRIME_PAIR = "coprime_pair"


@dataclass(frozen=True)
class WitnessCertificate:
    t: Fraction
    kind: WitnessKind
    speeds: tuple[int, ...]
    x: int | None = None
    s: int | None = None
    t_num: int | None = None
    modulus: int | None = None
    q: int | None = None
    group: int | None = None
    script_m: int | None = None
    # per speed: ({v t}, distance from v t to the nearest integer)
    verified_bounds: tuple[tuple[Fraction, Fraction], ...] = ()

    def verify(self) -> bool:
        if not verify_loose_witness(self.speeds, self.t):
            return False
        if self.kind is WitnessKind.COPRIME_PAIR:
            m = self.modulus
            if (
                math.gcd(self.s, self.t_num) != 1
                or m != self.s + self.t_num
                or self.q * self.s % m != 1
                or self.t != Fraction(self.q, m)
                or any(v % m in (0, self.s, self.t_num) for v in self.speeds)
            ):
                return False
            bound = Fraction(2, m)
            if any(dist < bound for _, dist in _bounds(self.speeds, self.t)):
                return False
        return True


def _bounds(speeds, t) -> tuple[tuple[Fraction, Fraction], ...]:
    out = []
    for v in speeds:
        f = fractional_part(v, t)
        out.append((f, min(f, 1 - f)))
    return tuple(out)


def largest_missing(V) -> int | None:
    V = _as_speedset(V)
    present = set(V.speeds)
    for x in range(V.n, 0, -1):
        if x not in present:
            return x
    return None


def witness_from_missing(V, k: int) -> WitnessCertificate | None:
    """t = 1/x for the largest missing x, when x > n - k and no speed is a
    multiple of x."""
    V = _as_speedset(V)
    x = largest_missing(V)
    if x is None or x <= V.n - k:
        return None
    if any(v % x == 0 for v in V):
        return None
    t = Fraction(1, x)
    if not verify_loose_witness(V, t):
        return None
    return WitnessCertificate(
        t, WitnessKind.INVERSE_MISSING, V.speeds, x=x, verified_bounds=_bounds(V.speeds, t)
    )


@dataclass(frozen=True)
class GroupPartition:
    """Groups I_0..I_l of [n] and J_0..J_l of [n+1, 2n] (0-based; the last
    group, index l, is the large tail).  J groups are laid out in reverse:
    J_{l-1} starts at n+1."""

    n: int
    x: int
    script_m: int
    groups_I: tuple[ArithProg, ...]
    groups_J: tuple[ArithProg, ...]
    r_index: int

    @property
    def ell(self) -> int:
        return len(self.groups_I) - 1


def build_partition(n: int, x: int, script_m: int) -> GroupPartition:
    M = script_m
    if M < 1 or x < 1 or x > n - (4 * M + 3):
        raise InvalidArgument(f"need 1 <= x <= n - (4M+3), got n={n}, x={x}, M={M}")
    default = 2 * M + 2
    bounds: list[list[int]] = []
    s = 1
    while True:
        if n - s + 1 < default:
            if s <= n:
                bounds[-1][1] = n
            break
        e = s + default - 1
        if e in (x, x + 1):
            e -= 2
        bounds.append([s, e])
        s = e + 1
    groups_I = tuple(ArithProg.interval(lo, hi) for lo, hi in bounds)
    ell = len(groups_I) - 1
    sizes = [len(g) for g in groups_I]
    groups_J: list[ArithProg | None] = [None] * (ell + 1)
    start = n + 1
    for j in range(ell - 1, -1, -1):
        groups_J[j] = ArithProg(start, 1, sizes[j])
        start += sizes[j]
    groups_J[ell] = ArithProg.interval(start, 2 * n)
    r = next(j for j, g in enumerate(groups_I) if x in g)
    return GroupPartition(n, x, M, groups_I, tuple(groups_J), r)


def check_partition(P: GroupPartition) -> list[str]:
    """Independent check of the structural invariants; returns problems."""
    probs = []
    n, M, ell = P.n, P.script_m, P.ell
    if [v for g in P.groups_I for v in g] != list(range(1, n + 1)):
        probs.append("I groups do not tile [n] in order")
    if sorted(v for g in P.groups_J for v in g) != list(range(n + 1, 2 * n + 1)):
        probs.append("J groups do not tile [n+1, 2n]")
    for j in range(ell):
        if len(P.groups_I[j]) not in (2 * M, 2 * M + 2):
            probs.append(f"group {j} has size {len(P.groups_I[j])}")
    if not 2 * M + 2 <= len(P.groups_I[ell]) <= 4 * M + 3:
        probs.append(f"last group has size {len(P.groups_I[ell])}")
    if any(len(i) != len(j) for i, j in zip(P.groups_I, P.groups_J)):
        probs.append("I/J sizes differ")
    if ell and P.groups_J[ell - 1].start != n + 1:
        probs.append("J layout is not reversed")
    g = P.groups_I[P.r_index]
    if P.r_index >= ell or not all(v in g for v in (P.x, P.x + 1, P.x + 2)):
        probs.append("x, x+1, x+2 are not in one non-final group")
    tail = len(P.groups_I[ell])
    for j in range(ell):
        if P.groups_I[j].start + P.groups_J[j].last != 2 * n + 1 - tail:
            probs.append(f"min/max identity fails at group {j}")
    return probs


@dataclass
class GroupDiagnostic:
    group: int
    size_S: int
    size_T: int
    alpha: int
    two_m: int


def _search_order(diags: Sequence[GroupDiagnostic], r: int) -> list[int]:
    rest = sorted(
        (d for d in diags if d.group != r), key=lambda d: (-(d.alpha - d.two_m), d.group)
    )
    return [r] + [d.group for d in rest]


def group_diagnostics(V, P: GroupPartition) -> list[GroupDiagnostic]:
    present = set(_as_speedset(V).speeds)
    out = []
    for j, (I, J) in enumerate(zip(P.groups_I, P.groups_J)):
        s = sum(1 for v in I if v not in present)
        t = sum(1 for v in J if v not in present)
        out.append(GroupDiagnostic(j, s, t, s + t, len(I)))
    return out


def _coprime_pair_witness(V: SpeedSet, P: GroupPartition, k: int) -> WitnessCertificate | None:
    present = set(V.speeds)
    n = V.n
    diags = group_diagnostics(V, P)[: P.ell]
    for j in _search_order(diags, P.r_index):
        S = [v for v in P.groups_I[j] if v not in present]
        T = [v for v in P.groups_J[j] if v not in present]
        hit = find_coprime_pair(S, T)
        if hit is None:
            continue
        s, tn = hit
        mod = s + tn
        if not 2 * n - 2 * k < mod <= 2 * n:
            continue
        q = mod_inverse(s, mod)
        time_ = Fraction(q, mod)
        cert = WitnessCertificate(
            time_,
            WitnessKind.COPRIME_PAIR,
            V.speeds,
            x=P.x,
            s=s,
            t_num=tn,
            modulus=mod,
            q=q,
            group=j,
            script_m=P.script_m,
            verified_bounds=_bounds(V.speeds, time_),
        )
        if cert.verify():
            return cert
    return None


def derive_k(V) -> int:
    V = _as_speedset(V)
    return (2 * V.n - V.speeds[-1]) // 2


def construct_loose_witness(
    V, script_m: int | None = None, k: int | None = None
) -> WitnessCertificate:
    """Build a certified loose time for V with n < v_n <= 2n - 2k.

    Tries t = 1/x for the largest missing x first; otherwise partitions
    [n] and [n+1, 2n] into matched groups and uses a coprime pair (s, t)
    from a group to set time q/(s+t), q the inverse of s mod s+t.  With
    ``script_m`` unset, group half-sizes M = 1, 2, ... are tried while
    4M + 3 <= k.
    """
    V = _as_speedset(V)
    n, vn = V.n, V.speeds[-1]
    if k is None:
        k = derive_k(V)
    if not n < vn <= 2 * n - 2 * k:
        raise Inapplicable(f"need n < v_n <= 2n - 2k; n={n}, v_n={vn}, k={k}")
    if k < 1:
        raise Inapplicable(f"k must be positive, got {k}")
    cert = witness_from_missing(V, k)
    if cert is not None:
        return cert
    x = largest_missing(V)
    if x > n - k:
        # only possible if some speed is a multiple of x, i.e. v_n > 2n - 2k
        raise SearchFailed(f"t = 1/{x} does not verify")
    if script_m is not None:
        Ms = [script_m]
        if k < 4 * script_m + 3:
            raise Inapplicable(f"k={k} < 4M+3 for M={script_m}")
    else:
        Ms = list(range(1, (k - 3) // 4 + 1))
        if not Ms:
            raise Inapplicable(f"k={k} < 7 leaves no admissible group size")
    tried = []
    for M in Ms:
        P = build_partition(n, x, M)
        cert = _coprime_pair_witness(V, P, k)
        if cert is not None:
            return cert
        tried.append({"script_m": M, "groups": group_diagnostics(V, P)})
    raise SearchFailed("no group produced a coprime pair", tried)


def random_group_instance(
    rng: random.Random, n_min: int = 30, n_max: int = 120, k_min: int = 7
) -> tuple[SpeedSet, int]:
    """A random speed set with n < v_n <= 2n - 2k whose largest missing
    number x satisfies x <= n - k, so the group construction is exercised.

    Returns (speeds, k).
    """
    while True:
        n = rng.randint(n_min, n_max)
        k_hi = (n - 1) // 2
        if k_hi < k_min:
            continue
        k = rng.randint(k_min, min(k_hi, max(k_min, n // 4)))
        vn = rng.randint(n + 1, 2 * n - 2 * k)
        x = rng.randint(1, n - k)
        pool = list(range(1, x)) + list(range(n + 1, vn))
        need = x - 1
        if len(pool) < need:
            continue
        speeds = sorted(rng.sample(pool, need) + list(range(x + 1, n + 1)) + [vn])
        return SpeedSet.of(speeds), k
