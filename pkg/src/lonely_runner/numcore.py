"""Sieve-backed number theory: odd prime supports, 2-coprimality, the
density gamma(x), residue counting along short APs, and the chi/kappa tables
used for the mid-range adjacent-interval argument.

Rationals are ``fractions.Fraction`` throughout; nothing here uses floats
for a decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    DomainExceeded,
    InvalidArgument,
    NotInvertible,
    OutOfRange,
    PreconditionViolation,
)

__all__ = [
    "ArithProg",
    "OddPrimeSet",
    "PrimeSieve",
    "TableRow",
    "build_sieve",
    "shared_sieve",
    "factor_odd_primes",
    "gamma",
    "is_two_coprime",
    "odd_part",
    "mod_inverse",
    "count_residue_hits",
    "count_residue_hits_naive",
    "count_two_coprime_in_ap",
    "two_coprime_floor",
    "scan_two_coprime_bound",
    "max_noncoprime_run",
    "chi_table",
    "kappa_table",
    "round_half_up",
]


@dataclass(frozen=True)
class ArithProg:
    """start, start+step, ..., start+(length-1)*step with step in {1, 2}."""

    start: int
    step: int
    length: int

    def __post_init__(self):
        if self.step not in (1, 2):
            raise InvalidArgument(f"step must be 1 or 2, got {self.step}")
        if self.length < 0:
            raise InvalidArgument(f"length must be nonnegative, got {self.length}")
        if self.length and self.start < 1:
            raise InvalidArgument(f"start must be positive, got {self.start}")

    @classmethod
    def interval(cls, lo: int, hi: int) -> "ArithProg":
        """The consecutive integers lo..hi inclusive."""
        return cls(lo, 1, max(0, hi - lo + 1))

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.start, self.start + self.length * self.step, self.step))

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return self.start + i * self.step

    def __contains__(self, v: object) -> bool:
        if not isinstance(v, int) or self.length == 0:
            return False
        off = v - self.start
        return 0 <= off <= (self.length - 1) * self.step and off % self.step == 0

    @property
    def last(self) -> int:
        return self.start + (self.length - 1) * self.step

    def index(self, v: int) -> int:
        if v not in self:
            raise ValueError(f"{v} not in {self}")
        return (v - self.start) // self.step

    def parity_class(self, parity: int) -> "ArithProg":
        """Elements congruent to ``parity`` mod 2, as a step-2 AP."""
        if self.step == 2:
            if self.length and self.start % 2 == parity % 2:
                return ArithProg(self.start, 2, self.length)
            return ArithProg(max(self.start, 1), 2, 0)
        first = self.start if self.start % 2 == parity % 2 else self.start + 1
        if self.length == 0 or first > self.last:
            return ArithProg(first, 2, 0)
        return ArithProg(first, 2, (self.last - first) // 2 + 1)

    def evens(self) -> "ArithProg":
        return self.parity_class(0)

    def odds(self) -> "ArithProg":
        return self.parity_class(1)

    def isdisjoint(self, other: "ArithProg") -> bool:
        return set(self).isdisjoint(other)


@dataclass(frozen=True)
class OddPrimeSet:
    value: int
    primes: tuple[int, ...]
    omega_all: int


class PrimeSieve:
    """Smallest-prime-factor table for 2..limit.

    Built once, then read-only; factorization of any x <= limit takes
    O(log x) table lookups.
    """

    def __init__(self, limit: int, spf: np.ndarray):
        self.limit = limit
        self.spf = spf
        self.spf.setflags(write=False)
        self._odd_cache: dict[int, tuple[int, ...]] = {}

    def __repr__(self) -> str:
        return f"PrimeSieve(limit={self.limit})"

    def _check(self, x: int) -> None:
        if x < 1:
            raise InvalidArgument(f"expected a positive integer, got {x}")
        if x > self.limit:
            raise OutOfRange(f"{x} exceeds sieve limit {self.limit}")

    def smallest_factor(self, x: int) -> int:
        self._check(x)
        if x == 1:
            raise InvalidArgument("1 has no prime factor")
        return int(self.spf[x])

    def is_prime(self, x: int) -> bool:
        if x < 2:
            return False
        self._check(x)
        return int(self.spf[x]) == x

    def factorize(self, x: int) -> dict[int, int]:
        self._check(x)
        out: dict[int, int] = {}
        spf = self.spf
        while x > 1:
            p = int(spf[x])
            e = 0
            while x % p == 0:
                x //= p
                e += 1
            out[p] = e
        return out

    def odd_primes(self, x: int) -> tuple[int, ...]:
        """Ascending odd prime divisors of x (cached)."""
        hit = self._odd_cache.get(x)
        if hit is not None:
            return hit
        self._check(x)
        primes = []
        y = x
        while y % 2 == 0:
            y //= 2
        spf = self.spf
        while y > 1:
            p = int(spf[y])
            primes.append(p)
            while y % p == 0:
                y //= p
        res = tuple(primes)
        if len(self._odd_cache) < 1 << 20:
            self._odd_cache[x] = res
        return res

    def primes_upto(self, bound: int) -> list[int]:
        bound = min(bound, self.limit)
        if bound < 2:
            return []
        idx = np.arange(2, bound + 1)
        return [int(p) for p in idx[self.spf[2 : bound + 1] == idx]]

    def odd_primes_upto(self, bound: int) -> list[int]:
        return [p for p in self.primes_upto(bound) if p != 2]


def build_sieve(limit: int) -> PrimeSieve:
    if limit < 2:
        raise InvalidArgument(f"sieve limit must be >= 2, got {limit}")
    spf = np.zeros(limit + 1, dtype=np.int64 if limit > 2**31 - 1 else np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    spf[0] = 0
    spf[1] = 1
    return PrimeSieve(limit, spf)


@lru_cache(maxsize=8)
def _sieve_pow2(bits: int) -> PrimeSieve:
    return build_sieve(1 << bits)


def shared_sieve(limit: int) -> PrimeSieve:
    """A process-wide cached sieve covering at least ``limit``."""
    return _sieve_pow2(max(10, (max(limit, 2) - 1).bit_length()))


def factor_odd_primes(x: int, sieve: PrimeSieve) -> OddPrimeSet:
    fac = sieve.factorize(x)
    return OddPrimeSet(x, tuple(sorted(p for p in fac if p != 2)), len(fac))


def _gamma_of_primes(primes: Iterable[int]) -> Fraction:
    num = den = 1
    for p in primes:
        num *= p - 1
        den *= p
    return Fraction(num, den)


def gamma(x: int, sieve: PrimeSieve) -> Fraction:
    """Density of integers 2-coprime to x: prod of (p-1)/p over odd p | x."""
    return _gamma_of_primes(sieve.odd_primes(x))


def odd_part(x: int) -> int:
    if x == 0:
        return 0
    return x >> ((x & -x).bit_length() - 1)


def is_two_coprime(s: int, t: int) -> bool:
    """True iff no odd prime divides both s and t."""
    if s < 1 or t < 1:
        raise InvalidArgument("2-coprimality is defined for positive integers")
    g = math.gcd(s, t)
    return g & (g - 1) == 0


def mod_inverse(a: int, modulus: int) -> int:
    if modulus < 2:
        raise InvalidArgument(f"modulus must be >= 2, got {modulus}")
    if math.gcd(a, modulus) != 1:
        raise NotInvertible(f"{a} is not invertible mod {modulus}")
    return pow(a, -1, modulus)


def count_residue_hits(A: ArithProg, P: int, R: Iterable[int]) -> int:
    """|A ∩ (R + PZ)|, computed per residue in closed form.

    Requires gcd(P, A.step) = 1 so that each residue class meets every P
    consecutive terms of A exactly once.
    """
    if P < 1:
        raise InvalidArgument(f"P must be positive, got {P}")
    if math.gcd(P, A.step) != 1:
        raise PreconditionViolation(f"gcd({P}, {A.step}) != 1")
    L = A.length
    if L == 0:
        return 0
    inv = pow(A.step, -1, P) if P > 1 else 0
    total = 0
    for r in {r % P for r in R}:
        i0 = (r - A.start) * inv % P if P > 1 else 0
        if i0 < L:
            total += (L - 1 - i0) // P + 1
    return total


def count_residue_hits_naive(A: ArithProg, P: int, R: Iterable[int]) -> int:
    res = {r % P for r in R}
    return sum(1 for a in A if a % P in res)


def _count_multiples_free(J: ArithProg, primes: tuple[int, ...]) -> int:
    # inclusion-exclusion over the odd primes; each term is exact
    total = J.length
    for k in range(1, len(primes) + 1):
        sign = -1 if k % 2 else 1
        for Q in combinations(primes, k):
            total += sign * count_residue_hits(J, math.prod(Q), (0,))
    return total


def count_two_coprime_in_ap(J: ArithProg, x: int, sieve: PrimeSieve) -> int:
    """Number of elements of J that are 2-coprime with x."""
    if J.length and J.last > sieve.limit:
        raise OutOfRange(f"AP reaches {J.last}, beyond sieve limit {sieve.limit}")
    return _count_multiples_free(J, sieve.odd_primes(x))


def two_coprime_floor(x: int, length: int, sieve: PrimeSieve) -> Fraction:
    """gamma(x)*length - 2^|P(x)| + 1, the lower bound the count must exceed."""
    primes = sieve.odd_primes(x)
    return _gamma_of_primes(primes) * length - (1 << len(primes)) + 1


@dataclass
class BoundScan:
    """Outcome of :func:`scan_two_coprime_bound`."""

    x_max: int
    start_max: int
    len_max: int
    checked: int
    # x -> (number of failing APs, one failing (start, step, length, count, bound))
    exceptions: dict[int, tuple[int, tuple[int, int, int, int, Fraction]]]

    @property
    def exception_count(self) -> int:
        return sum(c for c, _ in self.exceptions.values())


def scan_two_coprime_bound(
    x_max: int, start_max: int, len_max: int, sieve: PrimeSieve
) -> BoundScan:
    """Check count > gamma(x)|J| - 2^|P(x)| + 1 for every AP J with step 1 or 2,
    1 <= start <= start_max, 1 <= |J| <= len_max and every 1 <= x <= x_max.

    Counts come from prefix sums over a 0/1 table of "2-coprime with x", so
    this route shares nothing with the inclusion-exclusion in
    :func:`count_two_coprime_in_ap`.  x values with the same odd prime
    support are checked once.
    """
    vmax = start_max + 2 * (len_max - 1)
    if max(vmax, x_max) > sieve.limit:
        raise OutOfRange("scan exceeds sieve limit")
    values = np.arange(vmax + 1, dtype=np.int64)
    starts = np.arange(1, start_max + 1, dtype=np.int64)[:, None]
    lengths = np.arange(1, len_max + 1, dtype=np.int64)[None, :]

    by_support: dict[tuple[int, ...], list[int]] = {}
    for x in range(1, x_max + 1):
        by_support.setdefault(sieve.odd_primes(x), []).append(x)

    exceptions: dict[int, tuple[int, tuple]] = {}
    for primes, xs in by_support.items():
        good = np.ones(vmax + 1, dtype=np.int64)
        good[0] = 0
        for p in primes:
            good[values % p == 0] = 0
        g = _gamma_of_primes(primes)
        num, den = g.numerator, g.denominator
        slack = (1 << len(primes)) - 1
        fails = 0
        example = None
        for step in (1, 2):
            # pref[v + step] = number of good u <= v with u = v mod step
            pref = np.zeros(vmax + 1 + step, dtype=np.int64)
            for r in range(step):
                pref[step + r :: step] = np.cumsum(good[r::step])
            last = starts + step * (lengths - 1)
            counts = pref[last + step] - pref[starts]
            bad = counts * den <= num * lengths - slack * den
            nbad = int(bad.sum())
            if nbad:
                fails += nbad
                if example is None:
                    i, j = map(int, np.argwhere(bad)[0])
                    example = (i + 1, step, j + 1, int(counts[i, j]), g * (j + 1) - slack)
        if fails:
            for x in xs:
                exceptions[x] = (fails, example)
    return BoundScan(x_max, start_max, len_max, x_max * start_max * len_max * 2, exceptions)


def max_noncoprime_run(x: int, scan_limit: int | None = None) -> int:
    """Longest run of consecutive integers in [1, scan_limit] sharing a factor with x."""
    if x < 2:
        raise InvalidArgument(f"x must be >= 2, got {x}")
    if scan_limit is None:
        scan_limit = min(10 * x, 10**7)
    if scan_limit < 1:
        return 0
    shares = np.gcd(np.arange(1, scan_limit + 1, dtype=np.int64), x) > 1
    # run lengths of True between False sentinels
    padded = np.concatenate(([False], shares, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    if edges.size == 0:
        return 0
    return int((edges[1::2] - edges[::2]).max())


@dataclass(frozen=True)
class TableRow:
    a: int
    modulus: int
    gamma: Fraction
    value: Fraction

    def display(self) -> tuple[str, str, str, str]:
        return (
            str(self.a),
            f"{self.modulus:,}",
            _fmt_decimal(round_half_up(self.gamma, 4), 4),
            _fmt_decimal(round_half_up(self.value, 1), 1),
        )


def round_half_up(q: Fraction, digits: int) -> Fraction:
    scale = 10**digits
    return Fraction(math.floor(q * scale + Fraction(1, 2)), scale)


def _fmt_decimal(q: Fraction, digits: int) -> str:
    scale = 10**digits
    n = q.numerator * scale // q.denominator
    sign = "-" if n < 0 else ""
    n = abs(n)
    if digits == 0:
        return f"{sign}{n}"
    return f"{sign}{n // scale}.{n % scale:0{digits}d}"


def _first_odd_primes(count: int, sieve: PrimeSieve) -> list[int]:
    bound = 16
    while True:
        ps = sieve.odd_primes_upto(bound)
        if len(ps) >= count:
            return ps[:count]
        if bound >= sieve.limit:
            raise OutOfRange(f"sieve limit {sieve.limit} holds fewer than {count} odd primes")
        bound *= 2


def chi_table(a: int, sieve: PrimeSieve) -> TableRow:
    """Row a of the "not divisible by 3" table: w_a = 5*7*...*p_{a+1} and
    chi_a = 6 (2^a - 3/2) / (gamma(w_a) - 1/2) + 2."""
    if a < 1:
        raise InvalidArgument(f"a must be >= 1, got {a}")
    primes = _first_odd_primes(a + 1, sieve)[1:]
    g = _gamma_of_primes(primes)
    if g <= Fraction(1, 2):
        raise DomainExceeded(f"gamma(w_{a}) = {float(g):.4f} <= 1/2")
    value = (2**a - Fraction(3, 2)) / (g - Fraction(1, 2)) * 6 + 2
    return TableRow(a, math.prod(primes), g, value)


def kappa_table(a: int, sieve: PrimeSieve) -> TableRow:
    """Row a of the "all divisible by 3" table: q_a = 3*5*...*p_a and
    kappa_a = 6 (2^a - 4/3) / (gamma(q_a) - 1/3) + 2."""
    if a < 1:
        raise InvalidArgument(f"a must be >= 1, got {a}")
    primes = _first_odd_primes(a, sieve)
    g = _gamma_of_primes(primes)
    if g <= Fraction(1, 3):
        raise DomainExceeded(f"gamma(q_{a}) = {float(g):.4f} <= 1/3")
    value = (2**a - Fraction(4, 3)) / (g - Fraction(1, 3)) * 6 + 2
    return TableRow(a, math.prod(primes), g, value)
