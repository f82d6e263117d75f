"""Dense complex matrices for U_n and exact rational matrices for the rank metric.

Two norm conventions live side by side and are never mixed silently:

* ``frobenius(A)``      = sqrt(sum |a_ij|^2)
* ``normalized_hs(A)``  = frobenius(A) / sqrt(n)

The unitary-group metric is ``hs_distance(A, B) = frobenius(A - B) / (2 sqrt(n))``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.stats

from .perm import Permutation

__all__ = [
    "U_TOL",
    "ComplexSquareMatrix",
    "UnitaryElement",
    "RationalMatrix",
    "DimensionMismatch",
    "SingularMatrixError",
    "NotUnitaryError",
    "frobenius",
    "normalized_hs",
    "unitarity_defect",
    "perm_matrix",
    "perm_rational_matrix",
    "hs_distance",
    "rank",
    "rank_distance",
    "kron",
    "nearest_unitary",
    "haar_unitary",
]

U_TOL = 1e-8
SINGULAR_TOL = 1e-12


class DimensionMismatch(ValueError):
    pass


class SingularMatrixError(ValueError):
    pass


class NotUnitaryError(ValueError):
    pass


class ComplexSquareMatrix:
    __slots__ = ("_m",)

    def __init__(self, entries):
        m = np.array(entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix has non-finite entries")
        m.flags.writeable = False
        self._m = m

    @classmethod
    def _wrap(cls, m: np.ndarray):
        obj = object.__new__(cls)
        m.flags.writeable = False
        obj._m = m
        return obj

    @classmethod
    def identity(cls, n: int):
        return cls._wrap(np.eye(n, dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._m

    def adjoint(self):
        return type(self)._wrap(self._m.conj().T.copy())

    def __matmul__(self, other: ComplexSquareMatrix) -> ComplexSquareMatrix:
        _same_dim(self, other)
        cls = UnitaryElement if isinstance(self, UnitaryElement) and isinstance(other, UnitaryElement) else ComplexSquareMatrix
        return cls._wrap(self._m @ other._m)

    def __sub__(self, other: ComplexSquareMatrix) -> ComplexSquareMatrix:
        _same_dim(self, other)
        return ComplexSquareMatrix._wrap(self._m - other._m)

    def __add__(self, other: ComplexSquareMatrix) -> ComplexSquareMatrix:
        _same_dim(self, other)
        return ComplexSquareMatrix._wrap(self._m + other._m)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComplexSquareMatrix):
            return NotImplemented
        return self._m.shape == other._m.shape and bool(np.array_equal(self._m, other._m))

    __hash__ = None

    def allclose(self, other: ComplexSquareMatrix, atol: float = 1e-9) -> bool:
        return self.dim == other.dim and bool(np.allclose(self._m, other._m, rtol=0.0, atol=atol))

    def to_json(self) -> dict:
        flat = self._m.ravel()
        return {"dim": self.dim, "entries": [[float(z.real), float(z.imag)] for z in flat]}

    @classmethod
    def from_json(cls, obj: dict | str):
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = int(obj["dim"])
        pairs = obj["entries"]
        if len(pairs) != n * n:
            raise ValueError(f"expected {n * n} entries, got {len(pairs)}")
        return cls(np.array([complex(re, im) for re, im in pairs]).reshape(n, n))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class UnitaryElement(ComplexSquareMatrix):
    """A matrix with ``frobenius(A* A - I) <= U_TOL``."""

    __slots__ = ()

    def __init__(self, entries):
        super().__init__(entries)
        defect = unitarity_defect(self)
        if defect > U_TOL:
            raise NotUnitaryError(f"||A*A - I||_F = {defect:.3e} exceeds {U_TOL}")

    @classmethod
    def from_matrix(cls, a: ComplexSquareMatrix) -> UnitaryElement:
        return cls(a.array)

    def inverse(self) -> UnitaryElement:
        return self.adjoint()


def _same_dim(a, b) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")


def _arr(a) -> np.ndarray:
    return a.array if isinstance(a, ComplexSquareMatrix) else np.asarray(a, dtype=np.complex128)


def frobenius(a) -> float:
    return float(np.linalg.norm(_arr(a), "fro"))


def normalized_hs(a) -> float:
    x = _arr(a)
    return frobenius(x) / math.sqrt(x.shape[0])


def unitarity_defect(a) -> float:
    """frobenius(A* A - I)."""
    x = _arr(a)
    return frobenius(x.conj().T @ x - np.eye(x.shape[0]))


def perm_matrix(s: Permutation) -> UnitaryElement:
    """A_s with A_s b_i = b_{s(i)}, so entry (s(i), i) is 1."""
    n = s.degree
    m = np.zeros((n, n), dtype=np.complex128)
    m[s.array, np.arange(n)] = 1.0
    return UnitaryElement._wrap(m)


def hs_distance(a: ComplexSquareMatrix, b: ComplexSquareMatrix) -> float:
    _same_dim(a, b)
    return frobenius(a.array - b.array) / (2.0 * math.sqrt(a.dim))


def kron(a: ComplexSquareMatrix, b: ComplexSquareMatrix) -> ComplexSquareMatrix:
    cls = UnitaryElement if isinstance(a, UnitaryElement) and isinstance(b, UnitaryElement) else ComplexSquareMatrix
    return cls._wrap(np.kron(a.array, b.array))


def polar_factor(a) -> tuple[np.ndarray, float]:
    """Return (U V*, smallest singular value) from the SVD A = U S V*."""
    u, s, vh = np.linalg.svd(_arr(a))
    return u @ vh, float(s.min())


def nearest_unitary(a: ComplexSquareMatrix) -> UnitaryElement:
    """The Frobenius-nearest unitary to a nonsingular ``a`` (its polar factor)."""
    w, smin = polar_factor(a)
    if smin <= SINGULAR_TOL:
        raise SingularMatrixError(f"smallest singular value {smin:.3e} <= {SINGULAR_TOL}")
    return UnitaryElement._wrap(w)


def haar_unitary(n: int, rng: np.random.Generator) -> UnitaryElement:
    """Haar-distributed element of U_n drawn from ``rng``."""
    if n == 1:
        # scipy's sampler starts at n = 2; U_1 is the circle
        return UnitaryElement._wrap(np.exp(2j * np.pi * np.array([[rng.random()]])))
    return UnitaryElement._wrap(scipy.stats.unitary_group.rvs(n, random_state=rng))


def block_diag_identity(a: ComplexSquareMatrix, r: int) -> ComplexSquareMatrix:
    """diag(a, I_r)."""
    n = a.dim
    m = np.eye(n + r, dtype=np.complex128)
    m[:n, :n] = a.array
    cls = UnitaryElement if isinstance(a, UnitaryElement) else ComplexSquareMatrix
    return cls._wrap(m)


# ---------------------------------------------------------------------------
# exact rational matrices


class RationalMatrix:
    """n x n matrix over Q, stored as an integer numerator array over one
    positive common denominator."""

    __slots__ = ("_num", "_den")

    def __init__(self, entries: Iterable[Iterable]):
        rows = [[Fraction(x) for x in row] for row in entries]
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise ValueError("expected a non-empty square matrix")
        den = math.lcm(*(x.denominator for r in rows for x in r))
        num = np.empty((n, n), dtype=object)
        for i, r in enumerate(rows):
            for j, x in enumerate(r):
                num[i, j] = x.numerator * (den // x.denominator)
        self._num, self._den = num, den
        self._normalize()

    @classmethod
    def _wrap(cls, num: np.ndarray, den: int = 1) -> RationalMatrix:
        obj = object.__new__(cls)
        obj._num, obj._den = num, den
        obj._normalize()
        return obj

    def _normalize(self) -> None:
        if self._den != 1:
            g = math.gcd(self._den, *(int(x) for x in self._num.ravel()))
            if g > 1:
                self._num = self._num // g
                self._den //= g
        self._num.flags.writeable = False

    @classmethod
    def identity(cls, n: int) -> RationalMatrix:
        return cls._wrap(_int_eye(n))

    @classmethod
    def from_int_array(cls, a) -> RationalMatrix:
        a = np.asarray(a)
        num = np.empty(a.shape, dtype=object)
        num[...] = [[int(x) for x in row] for row in a]
        return cls._wrap(num)

    @property
    def dim(self) -> int:
        return self._num.shape[0]

    @property
    def entries(self) -> list[list[Fraction]]:
        return [[Fraction(int(x), self._den) for x in row] for row in self._num]

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        return Fraction(int(self._num[ij]), self._den)

    def _scaled(self, den: int) -> np.ndarray:
        return self._num * (den // self._den)

    def __sub__(self, other: RationalMatrix) -> RationalMatrix:
        _same_dim(self, other)
        den = math.lcm(self._den, other._den)
        return RationalMatrix._wrap(self._scaled(den) - other._scaled(den), den)

    def __add__(self, other: RationalMatrix) -> RationalMatrix:
        _same_dim(self, other)
        den = math.lcm(self._den, other._den)
        return RationalMatrix._wrap(self._scaled(den) + other._scaled(den), den)

    def __matmul__(self, other: RationalMatrix) -> RationalMatrix:
        _same_dim(self, other)
        return RationalMatrix._wrap(_int_matmul(self._num, other._num), self._den * other._den)

    def transpose(self) -> RationalMatrix:
        return RationalMatrix._wrap(self._num.T.copy(), self._den)

    def inverse(self) -> RationalMatrix:
        """Exact inverse by Gauss-Jordan over Fractions."""
        n = self.dim
        aug = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(self.entries)]
        for col in range(n):
            piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
            if piv is None:
                raise SingularMatrixError("matrix is not invertible")
            aug[col], aug[piv] = aug[piv], aug[col]
            p = aug[col][col]
            aug[col] = [x / p for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col] != 0:
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        return RationalMatrix([row[n:] for row in aug])

    def is_zero(self) -> bool:
        return not any(int(x) for x in self._num.ravel())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self._den == other._den and self._num.shape == other._num.shape and bool(
            np.all(self._num == other._num)
        )

    def __hash__(self) -> int:
        return hash((self._den, tuple(int(x) for x in self._num.ravel())))

    def to_json(self) -> dict:
        return {"dim": self.dim, "entries": [[str(x) for x in row] for row in self.entries]}

    @classmethod
    def from_json(cls, obj: dict | str) -> RationalMatrix:
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls([[Fraction(x) for x in row] for row in obj["entries"]])

    def __repr__(self) -> str:
        return f"RationalMatrix(dim={self.dim})"


def _int_eye(n: int) -> np.ndarray:
    num = np.full((n, n), 0, dtype=object)
    for i in range(n):
        num[i, i] = 1
    return num


def _int_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    amax = max((abs(int(x)) for x in a.ravel()), default=0)
    bmax = max((abs(int(x)) for x in b.ravel()), default=0)
    if amax * bmax * n < 2**62:
        prod = a.astype(np.int64) @ b.astype(np.int64)
        out = np.empty(prod.shape, dtype=object)
        out[...] = prod.tolist()
        return out
    return a.dot(b)


def perm_rational_matrix(s: Permutation) -> RationalMatrix:
    n = s.degree
    num = np.zeros((n, n), dtype=np.int64)
    num[s.array, np.arange(n)] = 1
    return RationalMatrix.from_int_array(num)


def _rank_int(rows: list[list[int]]) -> int:
    # Bareiss fraction-free elimination; pivot = largest magnitude in column
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    r = 0
    prev = 1
    for col in range(ncols):
        if r == nrows:
            break
        piv = max(range(r, nrows), key=lambda i: abs(rows[i][col]))
        if rows[piv][col] == 0:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        prow = rows[r]
        p = prow[col]
        for i in range(r + 1, nrows):
            row = rows[i]
            f = row[col]
            if f == 0:
                if p != prev:
                    rows[i] = [0] * (col + 1) + [(p * x) // prev for x in row[col + 1 :]]
                continue
            rows[i] = [0] * (col + 1) + [
                (p * x - f * y) // prev for x, y in zip(row[col + 1 :], prow[col + 1 :])
            ]
        prev = p
        r += 1
    return r


def rank(a: RationalMatrix) -> int:
    return _rank_int([[int(x) for x in row] for row in a._num])


def rank_distance(a: RationalMatrix, b: RationalMatrix) -> Fraction:
    """rank(a - b) / n, computed exactly."""
    _same_dim(a, b)
    return Fraction(rank(a - b), a.dim)


def as_rational(a: Sequence[Sequence]) -> RationalMatrix:
    return a if isinstance(a, RationalMatrix) else RationalMatrix(a)
