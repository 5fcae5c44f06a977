"""Four-outcome classification for subset pairs of two intervals, the
2-coprime pair search, and the lambda-sum / zoom-in diagnostics.

Given intervals I, J of length 2m and S ⊆ I, T ⊆ J with |S| + |T| >= 2m,
large m forces one of: S empty, T empty, S and T are exactly the even
halves, or some s in S and t in T are coprime.  At desk scale the last
alternative can fail, so the scan here reports violations rather than
asserting there are none.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import BudgetExceeded, InvalidArgument
from .numcore import ArithProg, PrimeSieve, odd_part, shared_sieve
from ._pool import pmap


@dataclass(frozen=True)
class SubsetPair:
    I: ArithProg
    J: ArithProg
    S: frozenset[int]
    T: frozenset[int]
    ambient_n: int

    def __post_init__(self):
        if len(self.I) != len(self.J):
            raise InvalidArgument("I and J must have equal length")
        if not self.S <= set(self.I) or not self.T <= set(self.J):
            raise InvalidArgument("S must lie in I and T in J")
        for P in (self.I, self.J):
            if len(P) and (P.start < 1 or P.last > self.ambient_n):
                raise InvalidArgument(f"{P} is not inside [1, {self.ambient_n}]")

    @classmethod
    def make(cls, I, J, S: Iterable[int], T: Iterable[int], ambient_n: int | None = None):
        if ambient_n is None:
            ambient_n = max(I.last if len(I) else 1, J.last if len(J) else 1)
        return cls(I, J, frozenset(S), frozenset(T), ambient_n)


class Outcome(enum.Enum):
    S_EMPTY = "S_empty"
    T_EMPTY = "T_empty"
    BOTH_EVEN_HALVES = "both_even_halves"
    COPRIME_PAIR = "coprime_pair"
    VIOLATION = "violation"


@dataclass(frozen=True)
class FourOutcome:
    tag: Outcome
    pair: tuple[int, int] | None = None


def find_two_coprime_pair(S: Iterable[int], T: Iterable[int]) -> tuple[int, int] | None:
    """Lexicographically first (s, t) with no common odd prime factor."""
    T_odd = sorted((t, odd_part(t)) for t in T)
    for s in sorted(S):
        so = odd_part(s)
        for t, to in T_odd:
            if math.gcd(so, to) == 1:
                return s, t
    return None


def find_coprime_pair(S: Iterable[int], T: Iterable[int]) -> tuple[int, int] | None:
    """Lexicographically first (s, t) with gcd(s, t) = 1."""
    T_sorted = sorted(T)
    for s in sorted(S):
        for t in T_sorted:
            if math.gcd(s, t) == 1:
                return s, t
    return None


def classify_outcome(pair: SubsetPair) -> FourOutcome:
    if len(pair.S) + len(pair.T) < len(pair.I):
        raise InvalidArgument("need |S| + |T| >= |I|")
    if not pair.S:
        return FourOutcome(Outcome.S_EMPTY)
    if not pair.T:
        return FourOutcome(Outcome.T_EMPTY)
    if pair.S == frozenset(pair.I.evens()) and pair.T == frozenset(pair.J.evens()):
        return FourOutcome(Outcome.BOTH_EVEN_HALVES)
    hit = find_coprime_pair(pair.S, pair.T)
    if hit is not None:
        return FourOutcome(Outcome.COPRIME_PAIR, hit)
    return FourOutcome(Outcome.VIOLATION)


# -- exhaustive scan --------------------------------------------------------


@dataclass(frozen=True, order=True)
class Violation:
    """A subset S of I for which the largest T ⊆ J without a coprime partner
    in S still breaks all four outcomes.  T is that largest set; any T'
    from the same S that violates is a subset of it."""

    i_start: int
    j_start: int
    s_bits: int
    S: tuple[int, ...] = field(compare=False)
    T: tuple[int, ...] = field(compare=False)


def _scan_pair(args) -> list[Violation]:
    i_start, j_start, size = args
    I = list(range(i_start, i_start + size))
    J = list(range(j_start, j_start + size))
    nbr = [sum(1 << j for j, b in enumerate(J) if math.gcd(a, b) == 1) for a in I]
    full = (1 << size) - 1
    i_even = sum(1 << i for i, a in enumerate(I) if a % 2 == 0)
    j_even = sum(1 << j for j, b in enumerate(J) if b % 2 == 0)
    N = [0] * (1 << size)
    out = []
    for s_bits in range(1, 1 << size):
        low = s_bits & -s_bits
        N[s_bits] = N[s_bits ^ low] | nbr[low.bit_length() - 1]
        free = full & ~N[s_bits]
        if not free:
            continue
        if s_bits.bit_count() + free.bit_count() < size:
            continue
        if s_bits == i_even and free == j_even:
            continue
        out.append(
            Violation(
                i_start,
                j_start,
                s_bits,
                tuple(a for i, a in enumerate(I) if s_bits >> i & 1),
                tuple(b for j, b in enumerate(J) if free >> j & 1),
            )
        )
    return out


def exhaustive_central_scan(
    n: int, m: int, *, max_m: int = 7, threads: int = 1
) -> list[Violation]:
    """All violations over disjoint length-2m intervals I before J in [n].

    For each S ⊆ I, the neighbourhood N(S) in the coprime graph is built
    incrementally; T = J \\ N(S) is the largest partner-free set.
    """
    if m < 1 or 2 * m > n:
        raise InvalidArgument(f"need 1 <= m and 2m <= n, got n={n}, m={m}")
    if m > max_m:
        raise BudgetExceeded(f"2^{2 * m} subsets per pair exceeds the m <= {max_m} budget", [])
    size = 2 * m
    pairs = [
        (a, b, size)
        for a in range(1, n - size + 2)
        for b in range(a + size, n - size + 2)
    ]
    out: list[Violation] = []
    for chunk in pmap(_scan_pair, pairs, threads):
        out.extend(chunk)
    out.sort()
    return out


def naive_central_scan(n: int, m: int) -> list[Violation]:
    """Reference scan: every (S, T) pair tested against the four outcomes
    directly; reports, per S, the largest violating T."""
    size = 2 * m
    out = []
    for a in range(1, n - size + 2):
        for b in range(a + size, n - size + 2):
            I = ArithProg(a, 1, size)
            J = ArithProg(b, 1, size)
            Iv, Jv = list(I), list(J)
            for s_bits in range(1 << size):
                S = [Iv[i] for i in range(size) if s_bits >> i & 1]
                best = None
                for t_bits in range(1 << size):
                    T = [Jv[j] for j in range(size) if t_bits >> j & 1]
                    if len(S) + len(T) < size:
                        continue
                    pair = SubsetPair.make(I, J, S, T, n)
                    if classify_outcome(pair).tag is Outcome.VIOLATION:
                        if best is None or len(T) > len(best):
                            best = T
                if best is not None:
                    out.append(Violation(a, b, s_bits, tuple(S), tuple(best)))
    out.sort()
    return out


# -- lambda sums and zoom-in ------------------------------------------------


def _prime_hits(values: Iterable[int], sieve: PrimeSieve) -> Counter:
    c: Counter = Counter()
    for v in values:
        c.update(sieve.odd_primes(v))
    return c


def lambda_sum(
    pair: SubsetPair,
    fixed_prime: int | None = None,
    sieve: PrimeSieve | None = None,
) -> Fraction:
    """Sum over odd primes p of (|S∩pZ|/|S|)(|T∩pZ|/|T|).

    With ``fixed_prime`` p, the sum is taken over (S∩pZ, T\\pZ) instead.  A
    value below 1 forces a 2-coprime pair by pigeonhole.
    """
    S, T = pair.S, pair.T
    if fixed_prime is not None:
        p = fixed_prime
        S = frozenset(s for s in S if s % p == 0)
        T = frozenset(t for t in T if t % p)
    if not S or not T:
        raise InvalidArgument("lambda sum needs nonempty sets")
    sieve = sieve or shared_sieve(max(max(S), max(T)))
    hs, ht = _prime_hits(S, sieve), _prime_hits(T, sieve)
    num = sum(c * ht[p] for p, c in hs.items())
    return Fraction(num, len(S) * len(T))


@dataclass
class ZoomStep:
    prime: int
    S: frozenset[int]
    T: frozenset[int]
    I: frozenset[int]
    J: frozenset[int]


@dataclass
class ZoomCertificate:
    chain: list[ZoomStep]
    M: Fraction
    m: int
    Gamma: int
    Phi: Fraction
    r: Fraction
    alpha: Fraction
    alpha_p: dict[int, Fraction]
    lambda_total: Fraction | None
    m_gamma_ok: bool  # M * Gamma <= m / 5

    @property
    def k(self) -> int:
        return len(self.chain)

    @property
    def primes(self) -> list[int]:
        return [st.prime for st in self.chain]


def _ratio(part: int, whole: int) -> Fraction:
    return Fraction(part, whole)


def zoom_in(pair: SubsetPair, M, sieve: PrimeSieve | None = None) -> ZoomCertificate:
    """Greedy density-doubling chain: repeatedly pick the smallest odd prime
    p <= M, not yet used, with |S∩pZ|/|I∩pZ| >= 2|S|/|I|, and pass to
    (S∩pZ, T\\pZ, I∩pZ, J\\pZ)."""
    M = Fraction(M)
    if not pair.S:
        raise InvalidArgument("zoom-in needs nonempty S")
    if M < 3:
        raise InvalidArgument("M must be at least 3")
    m = len(pair.I)
    top = max(max(pair.I), max(pair.J))
    sieve = sieve or shared_sieve(max(top, math.floor(M)))
    candidates = sieve.odd_primes_upto(math.floor(M))

    S, T = pair.S, pair.T
    I, J = frozenset(pair.I), frozenset(pair.J)
    chain: list[ZoomStep] = []
    used: set[int] = set()
    while True:
        dens = _ratio(len(S), len(I))
        for p in candidates:
            if p in used:
                continue
            Ip = sum(1 for v in I if v % p == 0)
            if Ip == 0:
                continue
            Sp = sum(1 for v in S if v % p == 0)
            if _ratio(Sp, Ip) >= 2 * dens:
                break
        else:
            break
        used.add(p)
        S = frozenset(v for v in S if v % p == 0)
        T = frozenset(v for v in T if v % p)
        I = frozenset(v for v in I if v % p == 0)
        J = frozenset(v for v in J if v % p)
        chain.append(ZoomStep(p, S, T, I, J))

    Gamma = math.prod(st.prime for st in chain)
    Phi = Fraction(m * math.prod(st.prime - 1 for st in chain), Gamma)
    hits = _prime_hits(pair.S, sieve)
    alpha_p = {p: Fraction(c, m) for p, c in sorted(hits.items())}
    lam = None
    if S and T:
        lam = lambda_sum(SubsetPair(pair.I, pair.J, S, T, pair.ambient_n), sieve=sieve)
    return ZoomCertificate(
        chain=chain,
        M=M,
        m=m,
        Gamma=Gamma,
        Phi=Phi,
        r=Fraction(m, len(pair.S)),
        alpha=Fraction(len(pair.S), m),
        alpha_p=alpha_p,
        lambda_total=lam,
        m_gamma_ok=M * Gamma <= Fraction(m, 5),
    )


def check_zoom_certificate(pair: SubsetPair, cert: ZoomCertificate) -> list[str]:
    """Recompute the chain conditions from the raw sets; returns problems."""
    problems = []
    S, T = pair.S, pair.T
    I, J = frozenset(pair.I), frozenset(pair.J)
    used = []
    for step in cert.chain:
        p = step.prime
        if p == 2 or p in used or p > cert.M:
            problems.append(f"bad chain prime {p}")
        newS = frozenset(v for v in S if v % p == 0)
        newI = frozenset(v for v in I if v % p == 0)
        if (newS, frozenset(v for v in T if v % p), newI) != (step.S, step.T, step.I):
            problems.append(f"sets after {p} do not match")
        if _ratio(len(newS), len(newI)) < 2 * _ratio(len(S), len(I)):
            problems.append(f"density did not double at {p}")
        S, T, I = newS, frozenset(v for v in T if v % p), newI
        J = frozenset(v for v in J if v % p)
        used.append(p)
    dens = _ratio(len(S), len(I))
    for p in range(3, math.floor(cert.M) + 1, 2):
        if p in used or any(p % q == 0 for q in range(3, math.isqrt(p) + 1, 2)):
            continue
        Ip = sum(1 for v in I if v % p == 0)
        if Ip and _ratio(sum(1 for v in S if v % p == 0), Ip) >= 2 * dens:
            problems.append(f"prime {p} still qualifies at termination")
    if 2**cert.k > cert.r:
        problems.append("chain longer than log2(r)")
    if cert.Gamma != math.prod(used):
        problems.append("Gamma is not the product of chain primes")
    return problems


def default_zoom_threshold(m: int, r: float) -> float:
    """(m/5)^(1/log2(2r)), the prime cutoff used for large r."""
    if r <= 0.5:
        raise InvalidArgument(f"threshold needs r > 1/2, got {r}")
    return (m / 5) ** (1 / math.log2(2 * r))


def sufficiency_diagnostics(n: int, m: int, r: float) -> dict[str, bool]:
    """Concrete inequalities that make the two density estimates effective.

    Reported only; they are not certified bounds.
    """
    M_big = default_zoom_threshold(m, r) if r > 0.5 else 0.0
    M_mid = m ** (1 / 3)
    log_n = math.log(n)

    def ratio(M):
        return log_n / (M * math.log(M)) if M > 1 else math.inf

    return {
        "large_r_threshold_exceeds_log_n": M_big > log_n,
        "large_r_ratio_below_1_9": ratio(M_big) < 1 / 9,
        "mid_r_threshold_at_least_16": M_mid >= 16,
        "mid_r_ratio_below_1_45": ratio(M_mid) < 1 / 45,
    }
