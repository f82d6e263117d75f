from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from mgw.matrix import UnitaryElement, block_diag_identity, haar_unitary, hs_distance, kron, unitarity_defect
from mgw.perm import Permutation, cycle_profile, diagonal_embed, hamming_distance, random_permutation
from mgw.rounding import (
    THIRD,
    NotNormalError,
    RootBound,
    align_counts,
    block_average_unitary,
    ceil_power,
    chop_cycles,
    chop_cycles_padded,
    embedding_distortion,
    m0,
    m0_scan,
    round_to_subgroup,
    unitary_round,
)

P = Permutation.from_cycles


def cycle(n):
    return P([list(range(1, n + 1))], n)


def same_support(s, t):
    # every cycle of t lies inside a cycle of s
    owner = {}
    for i, cy in enumerate(s.cycles()):
        for x in cy:
            owner[x] = i
    return all(len({owner[x] for x in cy}) == 1 for cy in t.cycles())


# -- exact powers and thresholds -------------------------------------------------


@pytest.mark.parametrize("m,expected", [(1, 1), (8, 2), (9, 3), (27, 3), (28, 4), (64, 4), (65, 5), (125, 5)])
def test_ceil_cube_root(m, expected):
    assert ceil_power(m, THIRD) == expected


def test_root_bound():
    b = RootBound(Fraction(9), 64, -THIRD)
    assert b.exact() == Fraction(9, 4)
    assert b.holds(Fraction(9, 4)) and not b.holds(Fraction(9, 4) + Fraction(1, 10**9))
    c = RootBound(Fraction(9), 46, -THIRD)
    assert c.exact() is None
    assert str(c) == "9*46^(-1/3)"
    assert c.holds(Fraction(25, 10)) and not c.holds(Fraction(252, 100))
    assert math.isclose(float(c), 9 / 46 ** (1 / 3))


def sufficient(m):
    x = m ** (1 / 3)
    return x * x - 3 * x - 2 >= 0


def test_m0_sufficient_condition():
    # float oracle, away from the root at x = (3 + sqrt 17)/2
    assert m0(THIRD) == 46
    assert not sufficient(45) and sufficient(46)
    assert ((3 + math.sqrt(17)) / 2) ** 3 == pytest.approx(45.18, abs=0.01)


def test_m0_scan_is_eventual_threshold():
    def cond(m):
        c = math.ceil(round(m ** (1 / 3), 12))
        return c * (c + 1) / 2 <= m ** (2 / 3) + 1e-12

    assert m0_scan(THIRD) == 32
    assert not cond(31)
    assert all(cond(m) for m in range(32, 5000))


# -- chop_cycles ----------------------------------------------------------------------


def test_chop_nine_cycle():
    t = chop_cycles(cycle(9), 3)
    assert t == P("(1 2 3)(4 5 6)(7 8 9)")
    assert hamming_distance(cycle(9), t) == Fraction(1, 3)


def test_chop_identity():
    e = Permutation.identity(12)
    assert chop_cycles(e, 4) == e


def test_chop_requires_divisor():
    with pytest.raises(ValueError):
        chop_cycles(cycle(10), 3)


def test_chop_remainder_block():
    # a 7-cycle in S_9 with m = 3 becomes blocks of 3, 3, 1
    s = P("(1 4 2 7 5 3 6)", 9)
    t = chop_cycles(s, 3)
    assert t.cycles(include_fixed=False) == [(1, 4, 2), (3, 7, 5)]
    assert sorted(len(c) for c in t.cycles() if set(c) <= set(range(1, 8))) == [1, 3, 3]
    assert hamming_distance(s, t) == Fraction(3, 9)


def test_chop_random_s60():
    g = np.random.default_rng(0)
    for _ in range(100):
        s = random_permutation(60, g)
        t = chop_cycles(s, 5)
        assert cycle_profile(t).width <= 5
        assert hamming_distance(s, t) <= Fraction(2, 5)
        assert s.fixed_points() <= t.fixed_points()
        assert same_support(s, t)


def test_chop_mismatches_equal_blocks():
    g = np.random.default_rng(1)
    for _ in range(50):
        s = random_permutation(48, g)
        t = chop_cycles(s, 4)
        blocks = sum(math.ceil(len(c) / 4) for c in s.cycles() if len(c) > 4)
        assert hamming_distance(s, t) * 48 == blocks


# -- chop_cycles_padded -----------------------------------------------------------------


def test_padded_identity():
    e = Permutation.identity(20)
    assert chop_cycles_padded(e, 10, 2) == e


def test_padded_long_cycle():
    s = cycle(128)
    t = chop_cycles_padded(s, 64, 2, THIRD)
    assert cycle_profile(t).width <= 4
    d = hamming_distance(s, t)
    assert d == Fraction(1, 4)
    assert RootBound(Fraction(8), 64, -THIRD).holds(d)


def test_padded_stays_in_range():
    g = np.random.default_rng(2)
    for _ in range(200):
        m, k = int(g.integers(2, 80)), int(g.integers(1, 4))
        s = random_permutation(k * m, g)
        t = chop_cycles_padded(s, m, k)
        assert t.degree == k * m
        assert same_support(s, t)
        assert s.fixed_points() <= t.fixed_points()
        assert cycle_profile(t).width <= ceil_power(m, THIRD)
        assert RootBound(Fraction(8), m, -THIRD).holds(hamming_distance(s, t))


def test_padded_degree_check():
    with pytest.raises(ValueError):
        chop_cycles_padded(Permutation.identity(7), 3, 2)


# -- align_counts ---------------------------------------------------------------------------


def test_align_drops_transposition():
    r = align_counts(P("(1 2)", 6), 2, THIRD)
    assert r.is_identity()
    assert cycle_profile(r).counts == {1: 6}
    assert hamming_distance(P("(1 2)", 6), r) == Fraction(1, 3)


def test_align_keeps_aligned():
    t = P("(1 2)(3 4)(5 6 7)(8 9 10)", 12)
    assert align_counts(t, 2, Fraction(1, 2)) == t


def test_align_drops_smallest_minimum():
    t = P("(1 2)(3 4)(5 6)", 12)
    assert align_counts(t, 2, Fraction(1, 2)) == P("(3 4)(5 6)", 12)


def test_align_width_precondition():
    with pytest.raises(ValueError):
        align_counts(cycle(6), 2, THIRD)


def test_align_counts_divisible():
    g = np.random.default_rng(3)
    for _ in range(100):
        m, k = int(g.integers(8, 120)), int(g.integers(1, 5))
        t = chop_cycles_padded(random_permutation(k * m, g), m, k)
        r = align_counts(t, k)
        assert all(c % k == 0 for c in cycle_profile(r).counts.values())
        assert t.fixed_points() <= r.fixed_points()


# -- round_to_subgroup ---------------------------------------------------------------------------


def check_rounding(s, m, k):
    res = round_to_subgroup(s, m, k)
    rho = res.rounded
    assert res.achieved_distance == hamming_distance(s, rho)
    assert res.embed(res.small) == rho
    assert res.small.degree == m
    # relabelled diagonal copy: W conjugates the block copy onto rho
    w = res.relabel
    assert w * diagonal_embed(res.small, k, k * m) * ~w == rho
    assert all(c % k == 0 for c in cycle_profile(rho).counts.values())
    assert cycle_profile(rho).width <= ceil_power(m, THIRD)
    assert s.fixed_points() <= rho.fixed_points()
    assert res.achieved_distance <= res.chop_distance + res.align_distance
    if res.guaranteed:
        assert res.within_bound
    return res


def test_round_identity():
    res = check_rounding(Permutation.identity(12), 6, 2)
    assert res.rounded.is_identity() and res.achieved_distance == 0


def test_round_m64_k3():
    g = np.random.default_rng(7)
    for _ in range(100):
        res = check_rounding(random_permutation(192, g), 64, 3)
        assert res.guaranteed
        assert res.achieved_distance <= Fraction(9, 4)


def test_round_long_cycle_m125():
    res = check_rounding(cycle(250), 125, 2)
    assert res.achieved_distance <= Fraction(9, 5)
    assert res.bound.exact() == Fraction(9, 5)


def test_round_small_m_not_guaranteed():
    res = check_rounding(random_permutation(20, np.random.default_rng(4)), 10, 2)
    assert not res.guaranteed


def test_round_embedding_is_isometric():
    res = round_to_subgroup(random_permutation(96, np.random.default_rng(5)), 48, 2)
    g = np.random.default_rng(6)
    for _ in range(20):
        a, b = random_permutation(48, g), random_permutation(48, g)
        assert hamming_distance(res.embed(a), res.embed(b)) == hamming_distance(a, b)
        assert res.embed(a * b) == res.embed(a) * res.embed(b)


def test_round_degree_check():
    with pytest.raises(ValueError):
        round_to_subgroup(Permutation.identity(10), 3, 3)


# -- unitaries ----------------------------------------------------------------------------------------


def test_unitary_round_exact_block():
    g = np.random.default_rng(8)
    a0 = haar_unitary(12, g)
    c = block_diag_identity(a0, 2)
    res = unitary_round(c, 4, 3, 2)
    assert c.dim == 14
    assert res.achieved_distance <= 1e-9
    assert not res.singular


def test_unitary_round_r0_is_repair_only():
    g = np.random.default_rng(9)
    c = haar_unitary(12, g)
    res = unitary_round(c, 4, 3, 0)
    assert res.achieved_distance <= 1e-9
    assert res.approximant.dim == 12


def test_unitary_round_bounds():
    g = np.random.default_rng(10)
    for k, m, r in [(16, 8, 5), (81, 2, 1), (4, 5, 3)]:
        res = unitary_round(haar_unitary(k * m + r, g), k, m, r)
        assert res.bound == pytest.approx(4 / k**0.25)
        assert res.achieved_distance <= res.bound
        assert unitarity_defect(res.approximant) <= 1e-9


def test_unitary_round_parameter_checks():
    u = haar_unitary(7, np.random.default_rng(11))
    with pytest.raises(ValueError):
        unitary_round(u, 2, 3, 3)
    with pytest.raises(ValueError):
        unitary_round(u, 2, 3, 2)


def test_unitary_round_singular_block_flagged():
    # the top-left 2x2 block of a swap of coordinates 1 and 3 is singular
    swap = np.eye(3)[:, [2, 1, 0]]
    res = unitary_round(UnitaryElement(swap), 1, 2, 1)
    assert res.singular


def test_embedding_distortion_range():
    g = np.random.default_rng(12)
    for k, m, r in [(16, 8, 5), (81, 2, 1), (3, 4, 2)]:
        km = k * m
        for _ in range(30):
            a, b = haar_unitary(km, g), haar_unitary(km, g)
            dist = embedding_distortion(a, b, r)
            assert -1e-12 <= dist <= 1 / k
            assert dist <= (1 - math.sqrt(km / (km + r))) * hs_distance(a, b) + 1e-12


def test_block_average_identity():
    res = block_average_unitary(UnitaryElement.identity(12), 3)
    assert res.achieved_distance <= 1e-12
    assert np.allclose(res.core.array, np.eye(4))


def test_block_average_tensor_input():
    g = np.random.default_rng(13)
    d = UnitaryElement(np.diag(np.exp(2j * np.pi * g.random(8))))
    a = kron(UnitaryElement.identity(4), d)
    res = block_average_unitary(UnitaryElement(a.array), 4)
    assert res.normalized_error <= 1e-9


def test_block_average_random():
    g = np.random.default_rng(14)
    for _ in range(10):
        a = haar_unitary(64, g)
        res = block_average_unitary(a, 4)
        assert res.m == 16
        assert res.normalized_error <= 2 * math.pi / 4
        assert unitarity_defect(res.core) <= 1e-9
        assert unitarity_defect(res.approximant) <= 1e-9
        w = res.conjugator.array
        rebuilt = w @ np.kron(np.eye(4), res.core.array) @ w.conj().T
        assert np.abs(rebuilt - res.approximant.array).max() <= 1e-9
        assert res.achieved_distance == pytest.approx(hs_distance(a, res.approximant))


def test_block_average_rejects_bad_k():
    with pytest.raises(ValueError):
        block_average_unitary(UnitaryElement.identity(10), 3)


def test_block_average_rejects_non_normal():
    from mgw.matrix import ComplexSquareMatrix

    with pytest.raises(NotNormalError):
        block_average_unitary(ComplexSquareMatrix([[1, 1], [0, 1]]), 1)
