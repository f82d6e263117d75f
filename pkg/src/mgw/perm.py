"""Permutations of {1..n} with the normalized Hamming metric.

Points are 1-based on the public surface (``p(1)``, cycle text, image lines)
and 0-based in the backing array.  Composition follows
``(s * t)(i) == s(t(i))``: the right factor is applied first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Permutation",
    "CycleProfile",
    "DegreeMismatch",
    "compose",
    "inverse",
    "commutator",
    "hamming_distance",
    "cycle_profile",
    "product_action",
    "diagonal_embed",
    "pad_embed",
    "restrict",
    "all_permutations",
    "random_permutation",
]

MAX_DEGREE = 10**6

_CYCLE_RE = re.compile(r"\(([^()]*)\)")


class DegreeMismatch(ValueError):
    pass


class Permutation:
    """An immutable bijection of {1..n}."""

    __slots__ = ("_a", "_hash")

    def __init__(self, images: Sequence[int] | np.ndarray):
        a = np.asarray(images, dtype=np.int64) - 1
        self._a = _checked(a)
        self._hash = None

    @classmethod
    def _wrap(cls, a: np.ndarray) -> Permutation:
        # trusted constructor: `a` is a valid 0-based image array
        p = object.__new__(cls)
        a.flags.writeable = False
        p._a = a
        p._hash = None
        return p

    @classmethod
    def identity(cls, n: int) -> Permutation:
        if n < 1:
            raise ValueError("degree must be >= 1")
        return cls._wrap(np.arange(n, dtype=np.int64))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]] | str, n: int | None = None) -> Permutation:
        """Build from disjoint cycles, either as text ``"(1 2 3)(4 5)"`` or as
        sequences of 1-based points.  ``n`` defaults to the largest point."""
        if isinstance(cycles, str):
            text = cycles.strip()
            if _CYCLE_RE.sub("", text).strip():
                raise ValueError(f"malformed cycle text: {cycles!r}")
            cycles = [
                [int(tok) for tok in body.replace(",", " ").split()]
                for body in _CYCLE_RE.findall(text)
            ]
        cycles = [list(c) for c in cycles]
        top = max((max(c) for c in cycles if c), default=1)
        if n is None:
            n = top
        if top > n:
            raise ValueError(f"point {top} exceeds degree {n}")
        a = np.arange(n, dtype=np.int64)
        seen: set[int] = set()
        for c in cycles:
            for x in c:
                if x < 1:
                    raise ValueError(f"points are 1-based, got {x}")
                if x in seen:
                    raise ValueError(f"point {x} occurs in two cycles")
                seen.add(x)
            for x, y in zip(c, c[1:] + c[:1]):
                a[x - 1] = y - 1
        return cls._wrap(a)

    @classmethod
    def from_line(cls, line: str) -> Permutation:
        """Parse the image-list form ``"n: s(1) s(2) ... s(n)"``."""
        head, _, body = line.partition(":")
        n = int(head)
        images = [int(tok) for tok in body.split()]
        if len(images) != n:
            raise ValueError(f"expected {n} images, got {len(images)}")
        return cls(images)

    def to_line(self) -> str:
        return f"{self.degree}: " + " ".join(str(int(x) + 1) for x in self._a)

    @property
    def degree(self) -> int:
        return len(self._a)

    @property
    def array(self) -> np.ndarray:
        """Read-only 0-based image array."""
        return self._a

    @property
    def images(self) -> tuple[int, ...]:
        return tuple(int(x) + 1 for x in self._a)

    def __call__(self, i: int) -> int:
        if not 1 <= i <= self.degree:
            raise IndexError(f"point {i} outside 1..{self.degree}")
        return int(self._a[i - 1]) + 1

    def __mul__(self, other: Permutation) -> Permutation:
        return compose(self, other)

    def __invert__(self) -> Permutation:
        return inverse(self)

    def __pow__(self, e: int) -> Permutation:
        base = self if e >= 0 else inverse(self)
        out = Permutation.identity(self.degree)
        for _ in range(abs(e)):
            out = out * base
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.degree == other.degree and bool(np.array_equal(self._a, other._a))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.degree, self._a.tobytes()))
        return self._hash

    def is_identity(self) -> bool:
        return bool(np.array_equal(self._a, np.arange(self.degree)))

    def fixed_points(self) -> frozenset[int]:
        return frozenset(int(i) + 1 for i in np.flatnonzero(self._a == np.arange(self.degree)))

    def cycles(self, include_fixed: bool = True) -> list[tuple[int, ...]]:
        """Cycles as 1-based tuples, each starting at its smallest point,
        ordered by that point."""
        a = self._a
        seen = np.zeros(len(a), dtype=bool)
        out = []
        for start in range(len(a)):
            if seen[start]:
                continue
            cyc = []
            x = start
            while not seen[x]:
                seen[x] = True
                cyc.append(x + 1)
                x = int(a[x])
            if include_fixed or len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def cycle_text(self) -> str:
        body = "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles(include_fixed=False))
        return body or "()"

    def __repr__(self) -> str:
        return f"Permutation.from_cycles({self.cycle_text()!r}, n={self.degree})"


def _checked(a: np.ndarray) -> np.ndarray:
    if a.ndim != 1 or len(a) < 1:
        raise ValueError("a permutation needs a non-empty 1-d image list")
    if len(a) > MAX_DEGREE:
        raise ValueError(f"degree {len(a)} exceeds {MAX_DEGREE}")
    n = len(a)
    if a.min() < 0 or a.max() >= n or np.bincount(a, minlength=n).max() != 1:
        raise ValueError("images do not form a bijection of 1..n")
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _same_degree(s: Permutation, t: Permutation) -> None:
    if s.degree != t.degree:
        raise DegreeMismatch(f"degrees differ: {s.degree} vs {t.degree}")


def compose(s: Permutation, t: Permutation) -> Permutation:
    """Return s∘t, i.e. ``i -> s(t(i))``."""
    _same_degree(s, t)
    return Permutation._wrap(s.array[t.array])


def inverse(s: Permutation) -> Permutation:
    a = np.empty_like(s.array)
    a[s.array] = np.arange(s.degree)
    return Permutation._wrap(a)


def commutator(a: Permutation, b: Permutation) -> Permutation:
    """[a, b] = a b a^-1 b^-1."""
    _same_degree(a, b)
    return compose(compose(a, b), compose(inverse(a), inverse(b)))


def hamming_distance(s: Permutation, t: Permutation) -> Fraction:
    _same_degree(s, t)
    return Fraction(int(np.count_nonzero(s.array != t.array)), s.degree)


@dataclass(frozen=True)
class CycleProfile:
    """Cycle counts by length, fixed points included (length 1)."""

    degree: int
    counts: dict[int, int]

    def __post_init__(self):
        if sum(l * c for l, c in self.counts.items()) != self.degree:
            raise ValueError("cycle counts do not add up to the degree")

    @property
    def width(self) -> int:
        return max((l for l, c in self.counts.items() if c > 0), default=1)

    def count(self, length: int) -> int:
        return self.counts.get(length, 0)

    def num_cycles(self) -> int:
        return sum(self.counts.values())


def cycle_profile(s: Permutation) -> CycleProfile:
    counts: dict[int, int] = {}
    for c in s.cycles():
        counts[len(c)] = counts.get(len(c), 0) + 1
    return CycleProfile(s.degree, dict(sorted(counts.items())))


def product_action(factors: Sequence[Permutation]) -> Permutation:
    """Coordinatewise action of S_3 x ... x S_3 on {1,2,3}^l.

    A tuple (i_1, ..., i_l) is the point 1 + sum_j (i_j - 1) 3^(l-j), so the
    first coordinate is the most significant ternary digit.
    """
    if not factors:
        raise ValueError("need at least one factor")
    for f in factors:
        if f.degree != 3:
            raise DegreeMismatch(f"product_action factors must have degree 3, got {f.degree}")
    l = len(factors)
    idx = np.arange(3**l, dtype=np.int64)
    out = np.zeros_like(idx)
    for j, f in enumerate(factors):
        w = 3 ** (l - 1 - j)
        digit = (idx // w) % 3
        out += f.array[digit] * w
    return Permutation._wrap(out)


def diagonal_embed(s: Permutation, k: int, n: int | None = None) -> Permutation:
    """Act as ``s`` on each of k copies of {1..m}, then fix km+1..n.

    The pair (i, j) with i in 1..m, j in 1..k is the point (j-1) m + i.
    """
    m = s.degree
    if k < 1:
        raise ValueError("k must be >= 1")
    if n is None:
        n = k * m
    if n < k * m:
        raise ValueError(f"n={n} is smaller than k*m={k * m}")
    blocks = (np.arange(k, dtype=np.int64)[:, None] * m + s.array[None, :]).ravel()
    return Permutation._wrap(np.concatenate([blocks, np.arange(k * m, n, dtype=np.int64)]))


def pad_embed(s: Permutation, n: int) -> Permutation:
    if n < s.degree:
        raise ValueError(f"n={n} is smaller than the degree {s.degree}")
    return Permutation._wrap(np.concatenate([s.array, np.arange(s.degree, n, dtype=np.int64)]))


def restrict(s: Permutation, n: int) -> Permutation:
    """Restriction to {1..n}; ``s`` must map that set onto itself."""
    a = s.array[:n]
    if n < s.degree and (a.max(initial=0) >= n):
        raise ValueError(f"permutation does not preserve 1..{n}")
    return Permutation._wrap(a.copy())


def all_permutations(n: int) -> Iterator[Permutation]:
    from itertools import permutations

    for p in permutations(range(n)):
        yield Permutation._wrap(np.array(p, dtype=np.int64))


def random_permutation(n: int, rng: np.random.Generator) -> Permutation:
    return Permutation._wrap(rng.permutation(n).astype(np.int64))
