"""Cycle surgery on permutations and block rounding of unitaries.

Permutation side: any sigma in S_km is moved, at certified Hamming cost, to a
permutation whose cycle counts are all multiples of k; such a permutation is
the image of some rho~ in S_m under an isometric embedding S_m -> S_km.

Unitary side: compress to a top-left block and repair it to the nearest
unitary, or average eigenvalues in blocks of k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np
import scipy.linalg

from .matrix import (
    SINGULAR_TOL,
    ComplexSquareMatrix,
    UnitaryElement,
    block_diag_identity,
    frobenius,
    hs_distance,
    polar_factor,
)
from .perm import (
    Permutation,
    cycle_profile,
    diagonal_embed,
    hamming_distance,
    inverse,
    pad_embed,
    restrict,
)

__all__ = [
    "RootBound",
    "ceil_power",
    "m0",
    "m0_scan",
    "chop_cycles",
    "chop_cycles_padded",
    "align_counts",
    "round_to_subgroup",
    "RoundingResult",
    "block_average_unitary",
    "unitary_round",
    "embedding_distortion",
    "UnitaryRoundingResult",
    "NotNormalError",
]

THIRD = Fraction(1, 3)


class NotNormalError(ValueError):
    pass


@dataclass(frozen=True)
class RootBound:
    """The real number ``coeff * base ** exponent``, compared exactly."""

    coeff: Fraction
    base: int
    exponent: Fraction

    def holds(self, d: Fraction) -> bool:
        """Exact test of ``d <= self`` for rational d >= 0."""
        d = Fraction(d)
        if d <= 0:
            return True
        q = self.exponent.denominator
        p = self.exponent.numerator
        return (d / self.coeff) ** q <= Fraction(self.base) ** p

    def exact(self) -> Fraction | None:
        """The value as a rational, if it is one."""
        p, q = self.exponent.numerator, self.exponent.denominator
        rad = Fraction(self.base) ** p
        num, den = _iroot(rad.numerator, q), _iroot(rad.denominator, q)
        if num**q == rad.numerator and den**q == rad.denominator:
            return self.coeff * Fraction(num, den)
        return None

    def __float__(self) -> float:
        return float(self.coeff) * self.base ** float(self.exponent)

    def __str__(self) -> str:
        ex = self.exact()
        if ex is not None:
            return str(ex)
        return f"{self.coeff}*{self.base}^({self.exponent})"


def _iroot(x: int, q: int) -> int:
    """floor(x ** (1/q)) for x >= 0."""
    lo, hi = 0, 1 << (x.bit_length() // q + 1)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid**q <= x:
            lo = mid
        else:
            hi = mid - 1
    return lo


def ceil_power(m: int, beta: Fraction) -> int:
    """ceil(m ** beta), exactly, for beta = p/q > 0."""
    p, q = beta.numerator, beta.denominator
    target = m**p
    c = _iroot(target, q)
    return c if c**q == target else c + 1


def _ceil_ratio_power(num: int, m: int, beta: Fraction) -> int:
    """ceil(num / m ** beta): least t with t ** q * m ** p >= num ** q."""
    p, q = beta.numerator, beta.denominator
    t = max(0, int(num / m ** float(beta)) - 2)
    while t**q * m**p < num**q:
        t += 1
    return t


def m0(beta: Fraction = THIRD) -> int:
    """Least m with m^(2 beta) - 3 m^beta - 2 >= 0.

    Past this point sum_{i <= ceil(m^beta)} i <= (m^(2b) + 3 m^b + 2)/2 <= m^(2b),
    so the cycle-dropping step costs at most m^(2 beta - 1).  The left side
    is increasing in m there, so the first hit is the threshold.
    """
    beta = Fraction(beta)
    with localcontext() as ctx:
        ctx.prec = 60
        e = Decimal(beta.numerator) / Decimal(beta.denominator)
        m = 1
        while True:
            x = Decimal(m) ** e
            if x * x - 3 * x - 2 >= 0:
                return m
            m += 1


def _sum_condition(m: int, beta: Fraction) -> bool:
    # sum_{i=1}^{c} i <= m^(2 beta), exactly
    c = ceil_power(m, beta)
    s = c * (c + 1) // 2
    p, q = beta.numerator, beta.denominator
    return s**q <= m ** (2 * p)


def m0_scan(beta: Fraction = THIRD) -> int:
    """Least m0 with sum_{i <= ceil(m^beta)} i <= m^(2 beta) for every m >= m0.

    Sharper than :func:`m0`; checked exactly below m0(beta), beyond which the
    sufficient condition takes over.
    """
    beta = Fraction(beta)
    top = m0(beta)
    last_fail = 0
    for m in range(1, top):
        if not _sum_condition(m, beta):
            last_fail = m
    return last_fail + 1


# ---------------------------------------------------------------------------
# permutation surgery


def _chop_array(s: Permutation, block: int) -> np.ndarray:
    out = s.array.copy()
    for cyc in s.cycles(include_fixed=False):
        if len(cyc) <= block:
            continue
        # cycle listed from its smallest point in functional order
        for start in range(0, len(cyc), block):
            blk = cyc[start : start + block]
            out[blk[-1] - 1] = blk[0] - 1
    return out


def chop_cycles(s: Permutation, m: int) -> Permutation:
    """Cut every cycle longer than m into consecutive pieces of length m and a
    shorter remainder.

    The result has width <= m, keeps every fixed point, never moves a point
    out of its original cycle, and lies within Hamming distance 2/m of ``s``.
    """
    if m < 1 or s.degree % m:
        raise ValueError(f"m={m} does not divide the degree {s.degree}")
    return Permutation._wrap(_chop_array(s, m))


def chop_cycles_padded(s: Permutation, m: int, k: int, beta: Fraction = THIRD) -> Permutation:
    beta = Fraction(beta)
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    n = k * m
    if s.degree != n:
        raise ValueError(f"degree {s.degree} != k*m = {n}")
    c = ceil_power(m, beta)
    big = _ceil_ratio_power(n, m, beta) * c
    chopped = chop_cycles(pad_embed(s, big), c)
    return restrict(chopped, n)


def align_counts(t: Permutation, k: int, beta: Fraction = THIRD) -> Permutation:
    """Drop, for each length i >= 2, (count of i-cycles mod k) of them.

    The dropped cycles are those with the smallest minimum point; their
    points become fixed.  Afterwards every cycle count, fixed points
    included, is a multiple of k.
    """
    beta = Fraction(beta)
    if k < 1 or t.degree % k:
        raise ValueError(f"k={k} does not divide the degree {t.degree}")
    m = t.degree // k
    c = ceil_power(m, beta)
    cycles = t.cycles(include_fixed=False)
    width = max((len(cy) for cy in cycles), default=1)
    if width > c:
        raise ValueError(f"width {width} exceeds ceil(m^beta) = {c}")
    by_len: dict[int, list[tuple[int, ...]]] = {}
    for cy in cycles:
        by_len.setdefault(len(cy), []).append(cy)
    out = t.array.copy()
    for cys in by_len.values():
        for cy in cys[: len(cys) % k]:
            idx = np.asarray(cy, dtype=np.int64) - 1
            out[idx] = idx
    return Permutation._wrap(out)


@dataclass(frozen=True)
class RoundingResult:
    """``rounded`` = W o diagonal_embed(small, k) o W^-1 with W = ``relabel``."""

    original: Permutation
    rounded: Permutation
    small: Permutation
    relabel: Permutation
    embedding_params: tuple[int, int]
    achieved_distance: Fraction
    bound: RootBound
    guaranteed: bool
    chopped: Permutation
    chop_distance: Fraction
    align_distance: Fraction

    def embed(self, x: Permutation) -> Permutation:
        """The isometric embedding S_m -> S_km that carries ``small`` to ``rounded``."""
        m, k = self.embedding_params
        w = self.relabel
        return w * diagonal_embed(x, k, k * m) * inverse(w)

    @property
    def within_bound(self) -> bool:
        return self.bound.holds(self.achieved_distance)


def _decompose(rho: Permutation, m: int, k: int) -> tuple[Permutation, Permutation]:
    """Find rho~ in S_m and a relabelling W with rho = W diag_k(rho~) W^-1."""
    by_len: dict[int, list[tuple[int, ...]]] = {}
    for cy in rho.cycles():
        by_len.setdefault(len(cy), []).append(cy)
    small = np.arange(m, dtype=np.int64)
    w = np.empty(k * m, dtype=np.int64)
    base = 0
    for length in sorted(by_len):
        cys = by_len[length]
        if len(cys) % k:
            raise ValueError(f"{len(cys)} cycles of length {length} is not a multiple of {k}")
        for g in range(0, len(cys), k):
            pts = np.arange(base, base + length)
            small[pts] = np.roll(pts, -1)
            for j, cy in enumerate(cys[g : g + k]):
                w[j * m + pts] = np.asarray(cy, dtype=np.int64) - 1
            base += length
    return Permutation._wrap(small), Permutation._wrap(w)


def round_to_subgroup(s: Permutation, m: int, k: int) -> RoundingResult:
    """Move ``s`` in S_km into the image of an isometric copy of S_m.

    Chop long cycles (beta = 1/3), then align cycle counts to multiples of k.
    ``guaranteed`` is true when m >= m0(1/3), where the 9/m^(1/3) bound is
    certified; the construction runs for every m.
    """
    if s.degree != k * m:
        raise ValueError(f"degree {s.degree} != k*m = {k * m}")
    tau = chop_cycles_padded(s, m, k, THIRD)
    rho = align_counts(tau, k, THIRD)
    small, w = _decompose(rho, m, k)
    return RoundingResult(
        original=s,
        rounded=rho,
        small=small,
        relabel=w,
        embedding_params=(m, k),
        achieved_distance=hamming_distance(s, rho),
        bound=RootBound(Fraction(9), m, -THIRD),
        guaranteed=m >= m0(THIRD),
        chopped=tau,
        chop_distance=hamming_distance(s, tau),
        align_distance=hamming_distance(tau, rho),
    )


# ---------------------------------------------------------------------------
# unitary side


@dataclass(frozen=True)
class UnitaryRoundingResult:
    """Distances and bounds are in the group metric ``hs_distance``."""

    approximant: ComplexSquareMatrix
    core: ComplexSquareMatrix
    achieved_distance: float
    bound: float
    k: int
    m: int
    r: int = 0
    conjugator: ComplexSquareMatrix | None = None
    singular: bool = False
    notes: dict = field(default_factory=dict)

    @property
    def normalized_error(self) -> float:
        """frobenius(input - approximant) / sqrt(n) = 2 * achieved_distance."""
        return 2.0 * self.achieved_distance


def block_average_unitary(a: UnitaryElement, k: int) -> UnitaryRoundingResult:
    """Replace the spectrum of ``a`` by m values of multiplicity k.

    Eigenvalues are sorted by angle in [0, 2 pi) and averaged in consecutive
    blocks of k (circular mean).  The approximant is
    W (I_k (x) B) W* with B = diag(block means), and its normalized HS
    distance to ``a`` is at most 2 pi / sqrt(m).
    """
    n = a.dim
    if k < 1 or n % k:
        raise ValueError(f"k={k} does not divide the dimension {n}")
    m = n // k
    t, z = scipy.linalg.schur(a.array, output="complex")
    off = frobenius(np.triu(t, 1))
    if off > 1e-8 * max(1.0, frobenius(t)):
        raise NotNormalError(f"Schur form is not diagonal (off-diagonal mass {off:.3e})")
    lam = np.diagonal(t)
    ang = np.mod(np.angle(lam), 2 * np.pi)
    order = np.argsort(ang, kind="stable")
    means = np.empty(m, dtype=np.complex128)
    for b in range(m):
        idx = order[b * k : (b + 1) * k]
        s = lam[idx].sum()
        phi = np.angle(s) if abs(s) >= 1e-12 else ang[idx].mean()
        means[b] = np.exp(1j * phi)
    # position b*k + j of the sorted spectrum sits at j*m + b in I_k (x) B
    w_sorted = z[:, order]
    perm = np.empty(n, dtype=np.int64)
    for b in range(m):
        for j in range(k):
            perm[j * m + b] = b * k + j
    w = w_sorted[:, perm]
    approx = (w * np.tile(means, k)) @ w.conj().T
    return UnitaryRoundingResult(
        approximant=ComplexSquareMatrix._wrap(approx),
        core=ComplexSquareMatrix._wrap(np.diag(means)),
        achieved_distance=frobenius(a.array - approx) / (2.0 * math.sqrt(n)),
        bound=math.pi / math.sqrt(m),
        k=k,
        m=m,
        conjugator=ComplexSquareMatrix._wrap(w),
    )


def unitary_round(c: UnitaryElement, k: int, m: int, r: int) -> UnitaryRoundingResult:
    """Approximate ``c`` in U_{km+r} by diag(B, I_r) with B in U_km.

    B is the polar factor of the top-left km x km block.  If that block is
    numerically singular the (non-unique) polar factor is still used and
    ``singular`` is set, rather than raising.
    """
    if not 0 <= r < m:
        raise ValueError(f"need 0 <= r < m, got r={r}, m={m}")
    n = k * m + r
    if c.dim != n:
        raise ValueError(f"dimension {c.dim} != k*m + r = {n}")
    a = c.array[: k * m, : k * m]
    w, smin = polar_factor(a)
    core = UnitaryElement._wrap(w)
    approx = block_diag_identity(core, r)
    return UnitaryRoundingResult(
        approximant=approx,
        core=core,
        achieved_distance=hs_distance(approx, c),
        bound=4.0 / k**0.25,
        k=k,
        m=m,
        r=r,
        singular=smin <= SINGULAR_TOL,
        notes={"block_defect": frobenius(a.conj().T @ a - np.eye(k * m)) / math.sqrt(k * m)},
    )


def embedding_distortion(a: ComplexSquareMatrix, b: ComplexSquareMatrix, r: int) -> float:
    """d_km(A, B) - d_{km+r}(diag(A, I_r), diag(B, I_r))."""
    return hs_distance(a, b) - hs_distance(block_diag_identity(a, r), block_diag_identity(b, r))
