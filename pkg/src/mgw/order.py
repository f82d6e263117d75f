"""Order-property witnesses: commuting/non-commuting pair chains and their check.

A chain is a list of pairs (g_1, h_1), ..., (g_l, h_l) in which g_i and h_j
commute for i < j and are far from commuting for i >= j.  With
eta(x1, x2; y1, y2) = min(2 d([x1, y2], e), 1) every earlier pair sits below
every later one in the relation  a < b  iff  eta(a, b) <= eps and eta(b, a) >= 1 - eps.

Only finitely many n can be certified here; the constructions are checked for
the degrees they are called with.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .formula.evaluate import evaluate
from .formula.parser import parse
from .formula.structures import MetricStructure
from .formula.syntax import Formula, free_vars, pretty
from .matrix import RationalMatrix, UnitaryElement, perm_matrix, perm_rational_matrix
from .perm import Permutation, diagonal_embed, product_action

__all__ = [
    "ETA",
    "RANK_FORMULA",
    "INEXACT_TOL",
    "base_pairs",
    "sym_chain",
    "unitary_chain",
    "rank_chain",
    "ChainWitness",
    "ChainFailure",
    "ArityError",
    "chain_check",
]

ETA = "min(2*d(comm(x1, y2), e), 1)"
RANK_FORMULA = "min(3*d(x1*y2, y2*x1), 1)"
INEXACT_TOL = 1e-9
MAX_LEVEL = 12

_E = Permutation.identity(3)
_S12 = Permutation.from_cycles("(1 2)", 3)
_S23 = Permutation.from_cycles("(2 3)", 3)


class ArityError(ValueError):
    pass


def base_pairs(l: int) -> list[tuple[Permutation, Permutation]]:
    """Pairs (s_i, t_i), i = 1..l, in S_{3^l} acting on {1,2,3}^l.

    s_i applies (1 2) in coordinates 1..i; t_i applies (2 3) in coordinate i.
    """
    if not 1 <= l <= MAX_LEVEL:
        raise ValueError(f"l must lie in 1..{MAX_LEVEL}, got {l}")
    out = []
    for i in range(1, l + 1):
        s = product_action([_S12] * i + [_E] * (l - i))
        t = product_action([_E] * (i - 1) + [_S23] + [_E] * (l - i))
        out.append((s, t))
    return out


def _split(n: int, l: int) -> int:
    if l < 1:
        raise ValueError("l must be >= 1")
    if n < 3**l:
        raise ValueError(f"n={n} is smaller than 3^{l}={3**l}")
    return n // 3**l


def sym_chain(n: int, l: int) -> list[tuple[Permutation, Permutation]]:
    """base_pairs(l) repeated on k = n // 3^l blocks, remaining points fixed.

    For i >= j the commutator of the i-th first and j-th second entries
    moves exactly 3^l k points.
    """
    k = _split(n, l)
    return [(diagonal_embed(s, k, n), diagonal_embed(t, k, n)) for s, t in base_pairs(l)]


def unitary_chain(n: int, l: int) -> list[tuple[UnitaryElement, UnitaryElement]]:
    return [(perm_matrix(s), perm_matrix(t)) for s, t in sym_chain(n, l)]


def rank_chain(n: int, l: int) -> list[tuple[RationalMatrix, RationalMatrix]]:
    return [(perm_rational_matrix(s), perm_rational_matrix(t)) for s, t in sym_chain(n, l)]


@dataclass
class ChainWitness:
    structure: str
    epsilon: Fraction
    formula_text: str
    tuples: list
    values: list[list]
    ok = True

    def to_json(self, element_to_json=str) -> dict:
        return {
            "structure": self.structure,
            "epsilon": str(self.epsilon),
            "formula_text": self.formula_text,
            "tuples": [[element_to_json(a) for a in t] for t in self.tuples],
            "values_matrix": [[_jsonable(v) for v in row] for row in self.values],
        }


@dataclass
class ChainFailure(ChainWitness):
    """``pair`` is the first violating (i, j), 1-based, with i before j."""

    pair: tuple[int, int] = (0, 0)
    forward: object = None
    backward: object = None
    ok = False

    def to_json(self, element_to_json=str) -> dict:
        out = super().to_json(element_to_json)
        out["failure"] = {
            "pair": list(self.pair),
            "forward": _jsonable(self.forward),
            "backward": _jsonable(self.backward),
        }
        return out


def _jsonable(v):
    return str(v) if isinstance(v, Fraction) else float(v)


def chain_check(
    structure: MetricStructure,
    psi: Formula | str,
    epsilon: Fraction | int | str,
    tuples: Sequence[Sequence],
    xvars: Sequence[str] | None = None,
    yvars: Sequence[str] | None = None,
) -> ChainWitness | ChainFailure:
    """Check that ``tuples``, in list order, form a (psi, epsilon)-chain.

    psi(x1..xm; y1..ym) is evaluated on every ordered pair; the first pair
    (i < j) with psi(t_i, t_j) > eps or psi(t_j, t_i) < 1 - eps is reported.
    Comparisons are exact for exact structures and within 1e-9 otherwise.
    """
    text = psi if isinstance(psi, str) else pretty(psi)
    f = parse(psi) if isinstance(psi, str) else psi
    eps = Fraction(epsilon)
    if not 0 <= eps < Fraction(1, 2):
        raise ValueError(f"epsilon must lie in [0, 1/2), got {eps}")
    tuples = [tuple(t) for t in tuples]
    m = len(tuples[0]) if tuples else (len(xvars) if xvars else 0)
    if any(len(t) != m for t in tuples):
        raise ArityError("tuples of different lengths")
    xs = list(xvars) if xvars is not None else [f"x{i}" for i in range(1, m + 1)]
    ys = list(yvars) if yvars is not None else [f"y{i}" for i in range(1, m + 1)]
    if len(xs) != m or len(ys) != m:
        raise ArityError(f"tuples have {m} entries but {len(xs)}+{len(ys)} variables were declared")
    extra = free_vars(f) - set(xs) - set(ys)
    if extra:
        raise ArityError(f"free variables {sorted(extra)} are not among {xs + ys}")

    tol = 0 if structure.exact else INEXACT_TOL
    lo, hi = structure.scalar(eps), structure.scalar(1 - eps)

    def value(a, b):
        return evaluate(structure, f, {**dict(zip(xs, a)), **dict(zip(ys, b))})

    values = [[value(a, b) for b in tuples] for a in tuples]
    common = dict(
        structure=structure.descriptor,
        epsilon=eps,
        formula_text=text,
        tuples=tuples,
        values=values,
    )
    for i in range(len(tuples)):
        for j in range(i + 1, len(tuples)):
            fwd, bwd = values[i][j], values[j][i]
            if fwd > lo + tol or bwd < hi - tol:
                return ChainFailure(**common, pair=(i + 1, j + 1), forward=fwd, backward=bwd)
    return ChainWitness(**common)
