"""Metric structures in the language of bi-invariant metric groups."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Hashable, Iterator, Sequence

import numpy as np

from ..matrix import (
    ComplexSquareMatrix,
    RationalMatrix,
    UnitaryElement,
    frobenius,
    haar_unitary,
    hs_distance,
    perm_rational_matrix,
    rank_distance,
)
from ..perm import Permutation, all_permutations, hamming_distance, inverse, random_permutation

__all__ = [
    "Exhaustive",
    "Sampled",
    "NotEnumerable",
    "MetricStructure",
    "SymmetricGroup",
    "UnitaryGroup",
    "RankStructure",
    "TableStructure",
    "structure_from_descriptor",
]


@dataclass(frozen=True)
class Exhaustive:
    label = "exact"


@dataclass(frozen=True)
class Sampled:
    """Quantifiers range over ``count`` random elements drawn from ``seed``,
    plus the identity when ``include_identity`` is set."""

    count: int = 64
    seed: int = 0
    include_identity: bool = True
    label = "sampled"


class NotEnumerable(ValueError):
    pass


class MetricStructure:
    """A group with a bi-invariant metric bounded by 1.

    Subclasses supply the group operations, the metric, and either an
    enumeration of the carrier or a sampler.  ``exact`` structures return
    Fractions from ``dist``; the others return floats.
    """

    exact = True
    descriptor = "structure"

    def __init__(self, mode: Exhaustive | Sampled | None = None):
        self.mode = mode if mode is not None else Exhaustive()
        self._carrier: list | None = None

    # group and metric
    def identity(self):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def dist(self, a, b):
        raise NotImplementedError

    def key(self, a) -> Hashable:
        return a

    def equal(self, a, b) -> bool:
        return self.key(a) == self.key(b)

    # carrier
    def cardinality(self) -> int | None:
        return None

    def enumerate(self) -> Iterator:
        raise NotEnumerable(f"{self.descriptor} cannot be enumerated; use Sampled mode")

    def random_element(self, rng: np.random.Generator):
        raise NotImplementedError

    def sample(self, count: int, seed: int, include_identity: bool = True) -> list:
        rng = np.random.default_rng(seed)
        out = [self.identity()] if include_identity else []
        out.extend(self.random_element(rng) for _ in range(count))
        return out

    def carrier(self) -> list:
        """The set quantifiers range over, fixed for the lifetime of the structure."""
        if self._carrier is None:
            if isinstance(self.mode, Sampled):
                self._carrier = self.sample(self.mode.count, self.mode.seed, self.mode.include_identity)
            else:
                self._carrier = list(self.enumerate())
        return self._carrier

    def carrier_size(self) -> int | None:
        if isinstance(self.mode, Sampled):
            return self.mode.count + int(self.mode.include_identity)
        return self.cardinality()

    def scalar(self, q: Fraction):
        return q if self.exact else float(q)

    @property
    def exhaustive(self) -> bool:
        return isinstance(self.mode, Exhaustive)

    def element_to_json(self, a) -> Any:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{self.descriptor} {self.mode.label}>"


class SymmetricGroup(MetricStructure):
    """S_n with the normalized Hamming distance."""

    def __init__(self, n: int, mode=None):
        super().__init__(mode)
        self.n = n
        self.descriptor = f"sym({n})"

    def identity(self):
        return Permutation.identity(self.n)

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        return inverse(a)

    def dist(self, a, b):
        return hamming_distance(a, b)

    def cardinality(self) -> int:
        return math.factorial(self.n)

    def enumerate(self):
        return all_permutations(self.n)

    def random_element(self, rng):
        return random_permutation(self.n, rng)

    def element_to_json(self, a: Permutation) -> str:
        return a.to_line()


class UnitaryGroup(MetricStructure):
    """U_n with d(A, B) = ||A - B||_F / (2 sqrt n).  Only samplable."""

    exact = False
    EQ_TOL = 1e-10

    def __init__(self, n: int, mode=None):
        super().__init__(mode if mode is not None else Sampled())
        if isinstance(self.mode, Exhaustive):
            raise NotEnumerable("U_n is a continuum; use Sampled mode")
        self.n = n
        self.descriptor = f"unitary({n})"

    def identity(self):
        return UnitaryElement.identity(self.n)

    def mul(self, a, b):
        return a @ b

    def inv(self, a):
        return a.adjoint()

    def dist(self, a, b):
        return hs_distance(a, b)

    def key(self, a):
        return a.array.tobytes()

    def equal(self, a, b) -> bool:
        return frobenius(a.array - b.array) <= self.EQ_TOL

    def random_element(self, rng):
        return haar_unitary(self.n, rng)

    def perturb(self, a: UnitaryElement, step: float, rng: np.random.Generator) -> UnitaryElement:
        """a * exp(i step H) for a random Hermitian H of unit Frobenius norm."""
        g = rng.standard_normal((self.n, self.n)) + 1j * rng.standard_normal((self.n, self.n))
        h = (g + g.conj().T) / 2
        h /= np.linalg.norm(h)
        w, v = np.linalg.eigh(h)
        u = (v * np.exp(1j * step * w)) @ v.conj().T
        return UnitaryElement._wrap(a.array @ u)

    def element_to_json(self, a: ComplexSquareMatrix) -> dict:
        return a.to_json()


class RankStructure(MetricStructure):
    """Permutation matrices inside M_n with the rank metric rk(a - b)/n.

    The carrier is the group {A_s : s in S_n}; products and inverses are
    computed as exact rational matrices, distances by exact elimination.
    """

    def __init__(self, n: int, mode=None):
        super().__init__(mode)
        self.n = n
        self.descriptor = f"rank({n})"

    def identity(self):
        return RationalMatrix.identity(self.n)

    def mul(self, a, b):
        return a @ b

    def inv(self, a):
        return a.inverse()

    def dist(self, a, b):
        return rank_distance(a, b)

    def cardinality(self) -> int:
        return math.factorial(self.n)

    def enumerate(self):
        return (perm_rational_matrix(p) for p in all_permutations(self.n))

    def random_element(self, rng):
        return perm_rational_matrix(random_permutation(self.n, rng))

    def element_to_json(self, a: RationalMatrix) -> dict:
        return a.to_json()


class TableStructure(MetricStructure):
    """A finite group given by its multiplication and distance tables.

    Elements are the indices 0..N-1; ``labels`` are for display only.  The
    group axioms and the metric axioms (bi-invariance, bound 1) are checked
    on construction.
    """

    def __init__(self, table: Sequence[Sequence[int]], metric: Sequence[Sequence], labels: Sequence[str] | None = None, mode=None):
        super().__init__(mode)
        n = len(table)
        self.table = [list(map(int, row)) for row in table]
        self.metric = [[Fraction(x) for x in row] for row in metric]
        self.labels = list(labels) if labels is not None else [str(i) for i in range(n)]
        self.descriptor = f"table({n})"
        self._e = self._validate()
        self._inv = [next(j for j in range(n) if self.table[i][j] == self._e) for i in range(n)]

    def _validate(self) -> int:
        t, d = self.table, self.metric
        n = len(t)
        if n < 1 or any(len(r) != n for r in t) or len(d) != n or any(len(r) != n for r in d):
            raise ValueError("tables must be square and of the same size")
        if len(self.labels) != n:
            raise ValueError("one label per element")
        if any(not 0 <= x < n for r in t for x in r):
            raise ValueError("table entries must be element indices")
        for a, b, c in product(range(n), repeat=3):
            if t[t[a][b]][c] != t[a][t[b][c]]:
                raise ValueError(f"not associative at ({a}, {b}, {c})")
        ids = [i for i in range(n) if all(t[i][j] == j and t[j][i] == j for j in range(n))]
        if not ids:
            raise ValueError("no identity element")
        e = ids[0]
        for a in range(n):
            if not any(t[a][b] == e and t[b][a] == e for b in range(n)):
                raise ValueError(f"element {a} has no inverse")
        for a, b in product(range(n), repeat=2):
            if not 0 <= d[a][b] <= 1:
                raise ValueError(f"distance d({a},{b}) outside [0, 1]")
            if d[a][b] != d[b][a]:
                raise ValueError(f"metric not symmetric at ({a}, {b})")
            if (d[a][b] == 0) != (a == b):
                raise ValueError(f"metric does not separate ({a}, {b})")
        for a, b, c in product(range(n), repeat=3):
            if d[a][c] > d[a][b] + d[b][c]:
                raise ValueError(f"triangle inequality fails at ({a}, {b}, {c})")
            if d[t[c][a]][t[c][b]] != d[a][b] or d[t[a][c]][t[b][c]] != d[a][b]:
                raise ValueError(f"metric not bi-invariant at ({a}, {b}) under {c}")
        return e

    def identity(self):
        return self._e

    def mul(self, a, b):
        return self.table[a][b]

    def inv(self, a):
        return self._inv[a]

    def dist(self, a, b):
        return self.metric[a][b]

    def cardinality(self) -> int:
        return len(self.table)

    def enumerate(self):
        return iter(range(len(self.table)))

    def random_element(self, rng):
        return int(rng.integers(len(self.table)))

    def element_to_json(self, a: int) -> str:
        return self.labels[a]

    @classmethod
    def from_structure(cls, s: MetricStructure) -> TableStructure:
        """Tabulate a finite structure (its exhaustive carrier)."""
        elems = list(s.enumerate())
        index = {s.key(x): i for i, x in enumerate(elems)}
        table = [[index[s.key(s.mul(a, b))] for b in elems] for a in elems]
        metric = [[s.dist(a, b) for b in elems] for a in elems]
        labels = [str(s.element_to_json(x)) for x in elems]
        return cls(table, metric, labels)


def structure_from_descriptor(family: str, n: int, mode=None) -> MetricStructure:
    family = family.lower()
    if family == "sym":
        return SymmetricGroup(n, mode)
    if family == "unitary":
        return UnitaryGroup(n, mode)
    if family == "rank":
        return RankStructure(n, mode)
    raise ValueError(f"unknown family {family!r} (sym, unitary, rank)")
