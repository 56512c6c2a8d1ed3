"""Acceptance criteria 1-8.

Each test records one ``[PASS]``/``[FAIL]`` line; the lines are printed in
an "acceptance criteria" section at the end of the pytest run.  Running this
file directly does the same for this module alone.
"""

import sys
import time
from collections import Counter
from functools import lru_cache

import numpy as np
import pytest

from topical import boolfn as bf
from topical.checks import FAILS, HOLDS, Condition, MapClass, brute_force, check, \
    classify_class, imperturbable_fastpath_mconvex, sat_check
from topical.expr import parse_map
from topical.generate import (FLAT_SHAPE, ORACLE_SHAPE, PLUS_SHAPE, MapShape, matrix_text,
                              random_3cnf, random_map, random_positive_matrix)
from topical.satcnf import model_check, parse_dimacs, solve, to_dimacs
from topical.signature import (local_signatures, lower_signature, numeric_lower_oracle,
                               numeric_upper_oracle, upper_signature)
from topical.spectral import (collatz_wielandt, condition_M, condition_N, hilbert_distance,
                              mconvexity_spot_check, power_iteration,
                              verify_condition_n_witness)

from conftest import ACCEPTANCE_LINES, load

C = Condition


def report(num: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# --- 1 ----------------------------------------------------------------------

GOLDEN = {
    "e1": {C.FACIAL: HOLDS, C.GRAPHICAL: FAILS, C.INDECOMPOSABLE: HOLDS},
    "e2": {C.GRAPHICAL: HOLDS, C.INDECOMPOSABLE: HOLDS, C.PARTIAL: FAILS, C.FACIAL: FAILS},
    "matrix_A": {C.PARTIAL: HOLDS, C.FACIAL: FAILS, C.IMPERTURBABLE: HOLDS},
}


def test_criterion_1_worked_examples():
    t0 = time.perf_counter()
    wrong = []
    for name, expected in GOLDEN.items():
        f = load(name)
        for cond, verdict in expected.items():
            for engine in ("auto", "sat", "brute"):
                got = check(f, cond, engine).verdict
                if got != verdict:
                    wrong.append(f"{name}/{cond.value}/{engine}={got}")
    elapsed = time.perf_counter() - t0
    report(1, not wrong and elapsed < 1.0,
           f"{sum(map(len, GOLDEN.values()))} verdicts x 3 engines, "
           f"{len(wrong)} wrong, {elapsed:.3f}s (limit 1s)")


# --- 2 and 4 ----------------------------------------------------------------

POOL_SEED = 20240611


@lru_cache(maxsize=1)
def _timed_pool():
    t0 = time.perf_counter()
    rng = np.random.default_rng(POOL_SEED)
    pool = []
    for n in range(2, 11):
        for k in range(300):
            f = random_map(rng, n, PLUS_SHAPE if k % 3 == 2 else MapShape())
            pool.append((f, lower_signature(f), upper_signature(f)))
    return pool, time.perf_counter() - t0


def oracle_pool():
    """300 maps per n in 2..10; every third map uses nonnegative exponents only."""
    return _timed_pool()[0]


@lru_cache(maxsize=1)
def engine_verdicts():
    pool = oracle_pool()
    t0 = time.perf_counter()
    rows = []
    for f, lo, up in pool:
        rows.append({c: (sat_check(c, lo, up).verdict, brute_force(c, lo, up).verdict)
                     for c in Condition})
    return rows, time.perf_counter() - t0


def test_criterion_2_sat_matches_brute_force():
    rows, engine_time = engine_verdicts()
    elapsed = _timed_pool()[1] + engine_time
    disagreements = sum(a != b for row in rows for a, b in row.values())
    mix = Counter((c.value, b) for row in rows for c, (_, b) in row.items())
    holds = ", ".join(f"{c.value} {mix[(c.value, HOLDS)]}" for c in Condition)
    report(2, disagreements == 0 and elapsed < 120,
           f"{len(rows)} maps x 5 conditions, {disagreements} disagreements, "
           f"{elapsed:.1f}s (limit 120s); holds counts: {holds}")


def test_criterion_4_theorem_properties():
    rows, _ = engine_verdicts()
    violations = Counter()
    plus = 0
    for (f, lo, up), row in zip(oracle_pool(), rows):
        v = {c: row[c][1] == HOLDS for c in Condition}
        violations["facial=>indecomposable"] += v[C.FACIAL] and not v[C.INDECOMPOSABLE]
        violations["graphical=>indecomposable"] += v[C.GRAPHICAL] and not v[C.INDECOMPOSABLE]
        violations["partial=>imperturbable"] += v[C.PARTIAL] and not v[C.IMPERTURBABLE]
        if classify_class(f) is MapClass.PLUS:
            plus += 1
            violations["indecomposable<=>graphical"] += v[C.INDECOMPOSABLE] != v[C.GRAPHICAL]
            fast = imperturbable_fastpath_mconvex(f, lo, up).verdict
            violations["fastpath<=>sat"] += fast != row[C.IMPERTURBABLE][0]
    total = sum(violations.values())
    report(4, total == 0 and plus > 0,
           f"{len(rows)} maps ({plus} with nonnegative exponents), {total} violations "
           f"across {len(violations)} properties")


# --- 3 ----------------------------------------------------------------------

def _signature_mismatches(shape, seed, count, T):
    rng = np.random.default_rng(seed)
    mismatches = checked = 0
    for _ in range(count):
        n = int(rng.integers(2, 7))
        f = random_map(rng, n, shape)
        up, lo = upper_signature(f), lower_signature(f)
        for m in range(1 << n):
            J = bf.bits(m, n)
            mismatches += up(J) != numeric_upper_oracle(f, J, T=T, theta=20.0)
            mismatches += lo(J) != numeric_lower_oracle(f, J)
            checked += 2
    return mismatches, checked


def test_criterion_3_signature_soundness():
    main, n_main = _signature_mismatches(ORACLE_SHAPE, 3, 100, T=40.0)
    geo, n_geo = _signature_mismatches(FLAT_SHAPE, 33, 100, T=1000.0)
    report(3, main == 0 and geo == 0,
           f"T=40/theta=20: {main} mismatches in {n_main} comparisons "
           f"(exponents without geometric means); geometric-mean pool at T=1000: "
           f"{geo} mismatches in {n_geo}")


@pytest.mark.xfail(strict=True, reason="T=40 cannot separate t^(small power) growth from "
                                       "bounded values; geometric means need a larger T")
def test_criterion_3_geometric_means_at_default_magnitude():
    bad, n = _signature_mismatches(FLAT_SHAPE, 33, 100, T=40.0)
    ACCEPTANCE_LINES.append(f"[INFO] criterion 3, geometric means at T=40: "
                            f"{bad} oracle mismatches in {n} (expected failure)")
    assert bad == 0


# --- 5 and 6 ----------------------------------------------------------------

def classical_power_method(a, steps=200):
    x = np.ones(a.shape[0])
    for _ in range(steps):
        y = a @ x
        x = y / np.linalg.norm(y)
    return float(x @ a @ x / (x @ x)), x


@lru_cache(maxsize=1)
def spectral_runs():
    rng = np.random.default_rng(5)
    runs = []
    for _ in range(50):
        a = random_positive_matrix(rng, int(rng.integers(2, 9)))
        f = parse_map(matrix_text(a))
        runs.append((a, f, power_iteration(f, keep_history=True, tol=1e-12)))
    return runs


def test_criterion_5_spectral_accuracy():
    worst_val = worst_vec = 0.0
    bad = []
    for k, (a, f, res) in enumerate(spectral_runs()):
        lam, v = classical_power_method(a)
        rel = abs(res.eigenvalue - lam) / lam
        dist = hilbert_distance(res.vector, np.abs(v))
        worst_val, worst_vec = max(worst_val, rel), max(worst_vec, dist)
        bracket_ok = all(lo <= res.eigenvalue * (1 + 1e-12) and res.eigenvalue <= hi * (1 + 1e-12)
                         for lo, hi in res.history)
        if not (res.converged and rel <= 1e-8 and dist <= 1e-8 and bracket_ok):
            bad.append(k)
    report(5, not bad,
           f"50 matrices, {len(bad)} failures; worst eigenvalue rel. error {worst_val:.2e}, "
           f"worst Hilbert distance {worst_vec:.2e} (limit 1e-8)")


def test_criterion_6_uniqueness_certificates():
    problems = []
    for k, (a, f, res) in enumerate(spectral_runs()):
        r = condition_N(f, res.vector)
        if not (r.certified and r.eigenvector):
            problems.append(f"matrix {k}")
    e2, e4 = load("e2"), load("e4")
    for u in ([1.0, 2.0], [1.0, 1.0]):
        for engine in ("brute", "sat"):
            r = condition_N(e4, u, engine)
            sigs = local_signatures(e4, u)
            if r.certified or not verify_condition_n_witness(sigs, r.witness["I"], r.witness["J"]):
                problems.append(f"E4 N at {u} ({engine})")
    if not condition_M(e2, [1.0, 1.0]).certified:
        problems.append("E2 M")
    r = condition_M(e4, [1.0, 1.0])
    if r.certified or r.witness != {"J": (0, 1)}:
        problems.append("E4 M")
    report(6, not problems,
           f"condition N at 50 computed eigenvectors plus E4 (two points, two engines), "
           f"condition M on E2/E4; problems: {problems or 'none'}")


# --- 7 ----------------------------------------------------------------------

def enumerate_sat(F) -> bool:
    """Bit-packed truth tables over all 2^n assignments."""
    n = F.num_vars
    m = np.arange(1 << n, dtype=np.uint32)
    tabs = [np.packbits(((m >> v) & 1).astype(bool)) for v in range(n)]
    alive = np.full_like(tabs[0], 0xFF)
    for clause in F.clauses:
        sat = np.zeros_like(alive)
        for lit in clause:
            t = tabs[abs(lit) - 1]
            sat |= t if lit > 0 else ~t
        alive &= sat
    if (1 << n) % 8:
        alive &= np.packbits(np.ones(1 << n, dtype=bool))
    return bool(alive.any())


def test_criterion_7_sat_backend():
    rng = np.random.default_rng(7)
    mismatches = bad_models = bad_dimacs = 0
    counts = Counter()
    for _ in range(1000):
        n = int(rng.integers(3, 21))
        F = random_3cnf(rng, n, int(round(n * rng.uniform(3.0, 5.5))))
        res = solve(F)
        counts[res.status] += 1
        mismatches += res.sat != enumerate_sat(F)
        if res.sat and not model_check(F, res.model):
            bad_models += 1
        text = to_dimacs(F)
        G = parse_dimacs(text)
        if to_dimacs(G) != text or Counter(G.clauses) != Counter(F.clauses):
            bad_dimacs += 1
    report(7, mismatches == bad_models == bad_dimacs == 0,
           f"1000 instances ({counts['sat']} sat, {counts['unsat']} unsat): {mismatches} "
           f"mismatches, {bad_models} bad models, {bad_dimacs} DIMACS round-trip failures")


# --- 8 ----------------------------------------------------------------------

def test_criterion_8_mconvexity():
    rng = np.random.default_rng(8)
    violations = []
    for k in range(100):
        f = random_map(rng, int(rng.integers(2, 7)), PLUS_SHAPE)
        v = mconvexity_spot_check(f, samples=100, tol=1e-10, rng=rng)
        if v is not None:
            violations.append((k, v.entry, v.excess))
    report(8, not violations,
           f"100 maps x 100 triples with nonnegative exponents, {len(violations)} violations "
           f"(relative tolerance 1e-10)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
