"""Acceptance suite.  Each test carries a ``criterion`` marker; the conftest
prints one PASS/FAIL line per criterion at the end of the run."""

import itertools
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import pytest

from lonely_runner.central import SubsetPair, exhaustive_central_scan, find_two_coprime_pair, lambda_sum, naive_central_scan
from lonely_runner.errors import SearchFailed
from lonely_runner.matching import (
    MatchingOutcome,
    Relation,
    compute_f,
    find_coprime_mapping,
    interval_pairs,
    validate_outcome,
    verify_adjacent_range,
)
from lonely_runner.numcore import (
    ArithProg,
    build_sieve,
    chi_table,
    count_residue_hits,
    count_residue_hits_naive,
    count_two_coprime_in_ap,
    kappa_table,
    scan_two_coprime_bound,
    two_coprime_floor,
)
from lonely_runner.runner import (
    InstanceKind,
    classify_instance,
    construct_loose_witness,
    random_group_instance,
    verify_loose_witness,
)


# -- 1 --------------------------------------------------------------------------


@pytest.mark.criterion(1, "tight instances (1..n), n <= 10, and (1,2,3,4,5,7,12); each < 1 s")
def test_tight_instances(record_property):
    cases = [tuple(range(1, n + 1)) for n in range(2, 11)] + [(1, 2, 3, 4, 5, 7, 12)]
    slowest = 0.0
    for V in cases:
        t0 = time.perf_counter()
        kind = classify_instance(V).kind
        dt = time.perf_counter() - t0
        slowest = max(slowest, dt)
        assert kind is InstanceKind.TIGHT, V
        assert dt < 1.0, (V, dt)
    record_property("detail", f"{len(cases)} instances tight, slowest {slowest:.3f}s")


# -- 2 --------------------------------------------------------------------------


@pytest.mark.criterion(2, "adjacent intervals: all 4 <= k <= 60, 0 <= ell < k map; (3,1) violator; < 60 s")
def test_adjacent_range(record_property):
    t0 = time.perf_counter()
    rep = verify_adjacent_range(4, 60)
    dt = time.perf_counter() - t0
    assert rep.cases == sum(range(4, 61)) == 1824
    assert rep.failures == []
    for e in rep.entries:
        A = range(e.ell + 1, e.ell + e.k + 1)
        B = range(e.ell + e.k + 1, e.ell + 2 * e.k + 1)
        assert validate_outcome(A, B, e.outcome, Relation.COPRIME)
    small = verify_adjacent_range(3, 3, allow_small=True)
    (bad,) = small.failures
    assert (bad.k, bad.ell) == (3, 1)
    assert bad.outcome.violator[0] == (2, 3, 4)
    assert validate_outcome(range(2, 5), range(5, 8), bad.outcome, Relation.COPRIME)
    assert dt < 60
    record_property(
        "detail",
        f"{rep.cases} cases (k=4..60), 0 failures, {dt:.1f}s; "
        f"(3,1) violator S={bad.outcome.violator[0]} T={bad.outcome.violator[1]}",
    )


# -- 3 --------------------------------------------------------------------------


def _bijection_exists(a, b, size):
    ok = [[math.gcd(x, y) == 1 for y in range(b, b + size)] for x in range(a, a + size)]
    return any(all(ok[i][p[i]] for i in range(size)) for p in itertools.permutations(range(size)))


@pytest.mark.criterion(3, "f(n), n <= 24, against an all-bijections oracle; f(n) >= 4 for n >= 4; < 5 min")
def test_f_against_oracle(record_property):
    t0 = time.perf_counter()
    values = {}
    for n in range(2, 25):
        res = compute_f(n)
        failing = {(r.two_m, r.a_start, r.b_start) for r in res.failures}
        expected = set()
        for size in range(2, 2 * (n // 2) + 1, 2):
            for a, b in interval_pairs(n, size):
                if size <= 8:
                    ok = _bijection_exists(a, b, size)
                else:
                    # too long to enumerate: the mapping itself is the proof
                    out = find_coprime_mapping(ArithProg(a, 1, size), ArithProg(b, 1, size))
                    assert validate_outcome(range(a, a + size), range(b, b + size), out, Relation.COPRIME)
                    ok = out.ok
                if not ok:
                    expected.add((size, a, b))
        assert failing == expected, n
        assert res.f_value == max((s for s, _, _ in expected), default=0) + 2
        for r in res.failures:
            assert validate_outcome(r.A, r.B, MatchingOutcome(violator=r.violator), Relation.COPRIME)
        values[n] = res.f_value
    dt = time.perf_counter() - t0
    assert dt < 300
    record_property("detail", f"f(2..24) = {[values[n] for n in range(2, 25)]}, {dt:.1f}s")


@pytest.mark.criterion(3, "f(n), n <= 24, against an all-bijections oracle; f(n) >= 4 for n >= 4; < 5 min")
@pytest.mark.xfail(
    strict=True,
    reason="f(4) = f(5) = 2: every disjoint pair of length-2 intervals in [4] or [5] has a coprime "
    "mapping; the stated obstruction uses singletons, which have odd length",
)
def test_f_parity_lower_bound(record_property):
    low = [n for n in range(4, 25) if compute_f(n).f_value < 4]
    record_property("detail", f"n with f(n) < 4: {low}")
    assert low == []


# -- 4 --------------------------------------------------------------------------


@pytest.mark.criterion(4, "central scan equals naive double-subset enumeration for n <= 20, m <= 3; < 2 min")
def test_central_scan_against_naive(record_property):
    t0 = time.perf_counter()
    total = 0
    for m in (1, 2, 3):
        for n in range(2 * m, 21):
            fast = exhaustive_central_scan(n, m)
            slow = naive_central_scan(n, m)
            assert [(v.i_start, v.j_start, v.s_bits, v.S, v.T) for v in fast] == [
                (v.i_start, v.j_start, v.s_bits, v.S, v.T) for v in slow
            ], (n, m)
            total += len(fast)
    dt = time.perf_counter() - t0
    assert dt < 120
    counts = {m: len(exhaustive_central_scan(20, m)) for m in (1, 2, 3)}
    record_property("detail", f"violations at n=20 by m: {counts}; {total} compared in all; {dt:.1f}s")


# -- 5 --------------------------------------------------------------------------


def _random_ap(rng, top=1000):
    step = rng.choice((1, 2))
    size = rng.randint(1, 40)
    start = rng.randint(1, top - step * (size - 1))
    return ArithProg(start, step, size)


@pytest.mark.criterion(5, "pigeonhole: lambda < 1 gives a 2-coprime pair, 10^5 random pairs")
def test_pigeonhole_soundness(record_property):
    rng = random.Random(20240501)
    sieve = build_sieve(1024)
    below = no_pair = 0
    for _ in range(10**5):
        I = _random_ap(rng)
        J = ArithProg(rng.randint(1, 1000 - I.step * (len(I) - 1)), I.step, len(I))
        Iv, Jv = list(I), list(J)
        if rng.random() < 0.5:
            # bias toward sets sharing small odd primes so lambda >= 1 also occurs
            p = rng.choice((3, 5, 7))
            Iv = [v for v in Iv if v % p == 0] or Iv
            Jv = [v for v in Jv if v % p == 0] or Jv
        S = rng.sample(Iv, rng.randint(1, len(Iv)))
        T = rng.sample(Jv, rng.randint(1, len(Jv)))
        lam = lambda_sum(SubsetPair.make(I, J, S, T, 1000), sieve=sieve)
        hit = find_two_coprime_pair(S, T)
        if hit is None:
            no_pair += 1
        if lam < 1:
            below += 1
            assert hit is not None, (S, T, lam)
    assert below > 0 and no_pair > 0
    record_property("detail", f"lambda < 1 in {below} pairs, all with a pair; {no_pair} pairs had none")


# -- 6 --------------------------------------------------------------------------

BOUND_ARGS = (10**4, 500, 64)


@pytest.fixture(scope="module")
def bound_scan():
    sieve = build_sieve(10**4)
    t0 = time.perf_counter()
    scan = scan_two_coprime_bound(*BOUND_ARGS, sieve)
    return scan, time.perf_counter() - t0, sieve


@pytest.mark.criterion(6, "two-coprime count exceeds gamma(x)|J| - 2^|P(x)| + 1 over the full grid; < 10 min")
@pytest.mark.xfail(
    strict=True,
    reason="for x a power of two P(x) is empty and the count equals |J| = the bound, so the strict "
    "inequality fails (equality) on 14 values of x",
)
def test_two_coprime_bound_strict(bound_scan, record_property):
    scan, dt, _ = bound_scan
    record_property(
        "detail",
        f"{scan.checked} (x, J) cases in {dt:.1f}s; exceptions {scan.exception_count} at x in {sorted(scan.exceptions)}",
    )
    assert dt < 600
    assert scan.exception_count == 0


@pytest.mark.criterion(6, "two-coprime count exceeds gamma(x)|J| - 2^|P(x)| + 1 over the full grid; < 10 min")
def test_two_coprime_bound_exceptions_are_equalities(bound_scan, record_property):
    scan, dt, sieve = bound_scan
    powers = [1 << i for i in range(14)]
    assert sorted(scan.exceptions) == powers
    per_x = 500 * 64 * 2
    for x, (fails, (start, step, length, count, bound)) in scan.exceptions.items():
        assert fails == per_x
        assert count == bound == length
        J = ArithProg(start, step, length)
        assert count_two_coprime_in_ap(J, x, sieve) == two_coprime_floor(x, length, sieve) == length
    # independent spot check of the scan with inclusion-exclusion counts
    rng = random.Random(6)
    for _ in range(20000):
        x = rng.randint(1, 10**4)
        J = ArithProg(rng.randint(1, 500), rng.choice((1, 2)), rng.randint(1, 64))
        c, b = count_two_coprime_in_ap(J, x, sieve), two_coprime_floor(x, len(J), sieve)
        assert (c <= b) == (x in scan.exceptions)
    record_property("detail", "strict bound holds whenever x has an odd prime factor; the rest are equalities")


# -- 7 --------------------------------------------------------------------------


@pytest.mark.criterion(7, "residue counting: |count/|R| - |A|/P| < 1 on 10^5 random cases")
def test_residue_count_bound(record_property):
    rng = random.Random(7)
    worst = Fraction(0)
    for i in range(10**5):
        step = rng.choice((1, 2))
        P = rng.randint(1, 100)
        if math.gcd(P, step) != 1:
            P += 1
        A = ArithProg(rng.randint(1, 10**6), step, rng.randint(0, 2000))
        R = rng.sample(range(P), rng.randint(1, P))
        c = count_residue_hits(A, P, R)
        if i % 50 == 0:
            assert c == count_residue_hits_naive(A, P, R)
        dev = abs(Fraction(c, len(R)) - Fraction(len(A), P))
        worst = max(worst, dev)
        assert dev < 1
    record_property("detail", f"max deviation {float(worst):.4f}")


# -- 8 --------------------------------------------------------------------------

CHI = ["12.0", "82.8", "318.1", "1155.5", "4403.6", "28689.1"]
KAPPA = ["14.0", "82.0", "325.1", "1071.9", "3661.3", "13567.5", "87210.9"]


@pytest.mark.criterion(8, "chi_a (a=1..6) and kappa_a (a=1..7) match the printed tables to 1 decimal")
def test_tables(record_property):
    sieve = build_sieve(100)
    chi = [chi_table(a, sieve).display()[3] for a in range(1, 7)]
    kappa = [kappa_table(a, sieve).display()[3] for a in range(1, 8)]
    assert chi == CHI
    assert kappa == KAPPA
    record_property("detail", f"chi {chi}; kappa {kappa}")


# -- 9 --------------------------------------------------------------------------


@pytest.mark.criterion(9, "200 seeded witnesses verify and classify as loose; failures logged")
def test_witness_pipeline(record_property):
    rng = random.Random(9)
    ok = attempts = 0
    failed = []
    while ok < 200:
        attempts += 1
        assert attempts <= 1000, "too many search failures"
        V, k = random_group_instance(rng, 30, 120)
        assert V.n < V.speeds[-1] <= 2 * V.n - 2 * k
        try:
            cert = construct_loose_witness(V, k=k)
        except SearchFailed as exc:
            failed.append((V.n, V.speeds[-1], k, len(exc.diagnostics)))
            continue
        assert cert.verify()
        assert verify_loose_witness(V, cert.t)
        assert classify_instance(V).kind is InstanceKind.LOOSE
        ok += 1
    record_property("detail", f"{ok} verified in {attempts} attempts; search failures {failed}")


# -- 10 -------------------------------------------------------------------------


def _cli(*args, cwd=None):
    r = subprocess.run(
        [sys.executable, "-m", "lonely_runner", *args], capture_output=True, cwd=cwd
    )
    return r.returncode, r.stdout


COMMANDS = [
    ["classify", "1", "2", "3", "4", "5", "7", "12"],
    ["classify", "1", "3", "--format", "csv"],
    ["witness", *[str(v) for v in range(1, 41) if v != 20], "45", "--script-m", "2"],
    ["witness-batch", "--count", "10", "--seed", "5"],
    ["f", "2..14"],
    ["central", "12", "2"],
    ["adjacent", "4..20", "--threads", "2"],
    ["tables", "--format", "human"],
    ["coprime-gap", "2..60", "--format", "csv"],
]


@pytest.mark.criterion(10, "determinism: repeated runs and checkpoint-interrupted f scans are byte-identical")
def test_determinism(tmp_path, record_property):
    for argv in COMMANDS:
        first, second = _cli(*argv), _cli(*argv)
        assert first[0] == 0, argv
        assert first == second, argv

    full = _cli("f", "2..16")
    partials = []
    for trial in range(2):
        ck = tmp_path / f"ck{trial}.jsonl"
        steps = 0
        while True:
            code, out = _cli("f", "2..16", "--checkpoint", str(ck), "--max-pairs", "150")
            steps += 1
            if code == 0:
                break
            assert code == 3
            partials.append(out)
        assert (code, out) == full
    assert partials[: len(partials) // 2] == partials[len(partials) // 2 :]
    record_property("detail", f"{len(COMMANDS)} commands twice each; f(2..16) resumed over {steps} runs matches")
