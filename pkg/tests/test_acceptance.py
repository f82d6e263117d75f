"""Exit criteria, one test per criterion, at the stated tolerances.

Each test carries an ``acceptance`` marker; conftest prints a PASS/FAIL line
per criterion in the terminal summary.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from mgw.formula import BUILTIN_SENTENCES, RankStructure, SymmetricGroup, parse, sigma2_value
from mgw.matrix import hs_distance, haar_unitary, perm_matrix, unitarity_defect
from mgw.order import RANK_FORMULA, chain_check, rank_chain, sym_chain, unitary_chain
from mgw.perm import Permutation, commutator, cycle_profile, hamming_distance, random_permutation
from mgw.rounding import (
    THIRD,
    RootBound,
    align_counts,
    block_average_unitary,
    ceil_power,
    chop_cycles,
    chop_cycles_padded,
    embedding_distortion,
    round_to_subgroup,
    unitary_round,
)
from oracles import naive_value

acceptance = pytest.mark.acceptance


def report(label, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {label} {detail}".rstrip())
    assert ok, detail


@acceptance("AC1 sym chain identities")
def test_ac1_sym_chain_identities():
    t0 = time.perf_counter()
    bad = []
    for l in (1, 2, 3):
        for n in range(3**l, 401):
            ch = sym_chain(n, l)
            expected = Fraction(3**l * (n // 3**l), n)
            if expected < Fraction(1, 2):
                bad.append((n, l, "below 1/2"))
            for i, (s, _) in enumerate(ch):
                for j, (_, t) in enumerate(ch):
                    c = commutator(s, t)
                    d = hamming_distance(c, Permutation.identity(n))
                    if d != (0 if i < j else expected):
                        bad.append((n, l, i, j, d))
    elapsed = time.perf_counter() - t0
    report("AC1", not bad and elapsed < 30, f"violations={bad[:3]} time={elapsed:.1f}s")


@acceptance("AC2 hs/Hamming relation")
def test_ac2_hs_hamming_relation():
    g = np.random.default_rng(2)
    worst = 0.0
    for n in range(2, 65):
        for _ in range(200):
            s, t = random_permutation(n, g), random_permutation(n, g)
            err = abs(hs_distance(perm_matrix(s), perm_matrix(t)) - math.sqrt(hamming_distance(s, t) / 2))
            worst = max(worst, err)
    report("AC2", worst <= 1e-9, f"max error={worst:.2e}")


@acceptance("AC3 unitary chains")
def test_ac3_unitary_chains():
    bad = []
    for l in (1, 2, 3):
        for n in range(max(3, 3**l), 65):
            ch = unitary_chain(n, l)
            ident = np.eye(n)
            for i, (b, _) in enumerate(ch):
                for j, (_, c) in enumerate(ch):
                    comm = b.array @ c.array @ b.array.conj().T @ c.array.conj().T
                    d = np.linalg.norm(comm - ident) / (2 * math.sqrt(n))
                    if (i >= j and d < 0.5 - 1e-9) or (i < j and d > 1e-9):
                        bad.append((n, l, i, j, d))
    report("AC3", not bad, f"violations={bad[:3]}")


@acceptance("AC4 rank chains")
def test_ac4_rank_chains():
    f = parse(RANK_FORMULA)
    bad = []
    for l in (1, 2, 3):
        for n in range(3**l, 61):
            w = chain_check(RankStructure(n), f, 0, rank_chain(n, l))
            for i, row in enumerate(w.values):
                for j, v in enumerate(row):
                    if not isinstance(v, Fraction) or v != (0 if i < j else 1):
                        bad.append((n, l, i, j, v))
    report("AC4", not bad, f"violations={bad[:3]}")


@acceptance("AC5 rounding bounds")
def test_ac5_rounding_bounds():
    t0 = time.perf_counter()
    bad = []
    for m in (46, 64, 125):
        for k in (2, 3):
            g = np.random.default_rng([m, k])
            bound = RootBound(Fraction(9), m, -THIRD)
            for _ in range(100):
                s = random_permutation(k * m, g)
                res = round_to_subgroup(s, m, k)
                rho = res.rounded
                prof = cycle_profile(rho)
                checks = [
                    bound.holds(hamming_distance(s, rho)),
                    prof.width <= ceil_power(m, THIRD),
                    s.fixed_points() <= rho.fixed_points(),
                    all(c % k == 0 for c in prof.counts.values()),
                    res.embed(res.small) == rho,
                    res.guaranteed,
                ]
                if not all(checks):
                    bad.append((m, k, checks))
    elapsed = time.perf_counter() - t0
    report("AC5", not bad and elapsed < 60, f"violations={bad[:3]} time={elapsed:.1f}s")


@acceptance("AC6 chop bounds")
def test_ac6_chop_bounds():
    g = np.random.default_rng(6)
    bad = []
    for _ in range(500):
        m = int(g.choice([2, 3, 4, 5, 6, 8, 10, 12]))
        n = m * int(g.integers(1, 30))
        s = random_permutation(n, g)
        if hamming_distance(s, chop_cycles(s, m)) > Fraction(2, m):
            bad.append(("chop", n, m))
    for _ in range(500):
        m, k = int(g.integers(46, 400)), int(g.integers(1, 6))
        t = chop_cycles_padded(random_permutation(k * m, g), m, k, THIRD)
        d = hamming_distance(t, align_counts(t, k, THIRD))
        # d <= m^(2 beta - 1) = m^(-1/3)
        if not RootBound(Fraction(1), m, -THIRD).holds(d):
            bad.append(("align", m, k, d))
    report("AC6", not bad, f"violations={bad[:3]}")


@acceptance("AC7 unitary rounding")
def test_ac7_unitary_rounding():
    t0 = time.perf_counter()
    bad = []
    for k, m, r in [(16, 8, 5), (81, 2, 1)]:
        g = np.random.default_rng([k, m, r])
        bound = 4 / k**0.25
        for _ in range(50):
            res = unitary_round(haar_unitary(k * m + r, g), k, m, r)
            if not res.achieved_distance <= bound:
                bad.append(("round", k, res.achieved_distance))
        for _ in range(100):
            a, b = haar_unitary(k * m, g), haar_unitary(k * m, g)
            dist = embedding_distortion(a, b, r)
            if not -1e-12 <= dist <= 1 / k:
                bad.append(("distortion", k, dist))
    elapsed = time.perf_counter() - t0
    report("AC7", not bad and elapsed < 120, f"violations={bad[:3]} time={elapsed:.1f}s")


@acceptance("AC8 block averaging")
def test_ac8_block_averaging():
    bad = []
    for km in (32, 64):
        for k in (2, 4, 8):
            m = km // k
            g = np.random.default_rng([km, k])
            for _ in range(20):
                res = block_average_unitary(haar_unitary(km, g), k)
                if res.normalized_error > 2 * math.pi / math.sqrt(m):
                    bad.append(("error", km, k, res.normalized_error))
                if unitarity_defect(res.core) > 1e-9:
                    bad.append(("core", km, k))
    report("AC8", not bad, f"violations={bad[:3]}")


@acceptance("AC9 evaluator oracle")
def test_ac9_evaluator_oracle():
    t0 = time.perf_counter()
    bad = []
    for name, text in BUILTIN_SENTENCES.items():
        f = parse(text)
        for n in (2, 3, 4, 5):
            fast = sigma2_value(SymmetricGroup(n), f)
            slow = naive_value(f, {}, n)
            if fast != slow:
                bad.append((name, n, fast, slow))
            if name == "commutator_gap" and fast != 0:
                bad.append((name, n, "expected 0"))
            if name == "far_from_identity" and fast != 1:
                bad.append((name, n, "expected 1"))
    elapsed = time.perf_counter() - t0
    report("AC9", not bad and elapsed < 300, f"violations={bad[:3]} time={elapsed:.1f}s")


CLI_MATRIX = [
    ["chains", "--family", "sym", "--n", "27", "--l", "3", "--epsilon", "0"],
    ["chains", "--family", "unitary", "--n", "20", "--l", "2"],
    ["chains", "--family", "rank", "--n", "30", "--l", "3"],
    ["round", "--m", "64", "--k", "3", "--samples", "100", "--seed", "7"],
    ["round", "--m", "46", "--k", "2", "--samples", "20", "--seed", "1"],
    ["uround", "--k", "16", "--m", "8", "--r", "5", "--samples", "20", "--seed", "3"],
    ["uround", "--k", "4", "--m", "16", "--method", "block", "--samples", "10", "--seed", "3"],
    ["converge", "--family", "sym", "--formula", "inf x. sup y. d(x*y, y*x)", "--n", "3..5"],
    ["converge", "--family", "unitary", "--formula", "sup x. d(x, e)", "--n", "2..4", "--samples", "16",
     "--refine", "5", "--seed", "2"],
    ["converge", "--family", "rank", "--formula", "sup x. d(x, e)", "--n", "2..4"],
    ["defect", "--kind", "pad", "--m", "4", "--n", "6"],
    ["defect", "--kind", "diagonal", "--m", "4", "--k", "3"],
    ["defect", "--kind", "round", "--m", "16", "--k", "2", "--samples", "5", "--seed", "4"],
]

_DRIVER = """
import sys, json
from mgw.cli import run
matrix, outdir = json.loads(sys.argv[1]), sys.argv[2]
codes = [run(argv + ["--out", f"{outdir}/{i}.csv"]) for i, argv in enumerate(matrix)]
print(json.dumps(codes))
"""


@acceptance("AC10 CLI determinism")
def test_ac10_cli_determinism(tmp_path):
    import json

    outputs = []
    for run_id in ("a", "b"):
        d = tmp_path / run_id
        d.mkdir()
        res = subprocess.run(
            [sys.executable, "-c", _DRIVER, json.dumps(CLI_MATRIX), str(d)],
            capture_output=True,
            text=True,
            check=True,
        )
        codes = json.loads(res.stdout)
        outputs.append([(d / f"{i}.csv").read_bytes() for i in range(len(CLI_MATRIX))])
        assert codes == [0] * len(CLI_MATRIX), codes
    same = outputs[0] == outputs[1]
    nonempty = all(len(b) > 0 for b in outputs[0])
    report("AC10", same and nonempty, f"{len(CLI_MATRIX)} commands")
