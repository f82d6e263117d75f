"""Terms and formulas over the language of metric groups {*, inv, e, d}."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

__all__ = [
    "Var",
    "Identity",
    "Inv",
    "Mul",
    "Term",
    "comm",
    "Dist",
    "Const",
    "OneMinus",
    "TruncSub",
    "Min",
    "Max",
    "Scale",
    "Inf",
    "Sup",
    "Formula",
    "NotSigma2",
    "pretty",
    "free_vars",
    "term_vars",
    "is_quantifier_free",
    "sigma2_parts",
    "lipschitz_modulus",
]


# -- terms ------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class Inv:
    arg: Term


@dataclass(frozen=True)
class Mul:
    left: Term
    right: Term


Term = Union[Var, Identity, Inv, Mul]


def comm(a: Term, b: Term) -> Term:
    """[a, b] = a*b*inv(a)*inv(b)."""
    return Mul(Mul(Mul(a, b), Inv(a)), Inv(b))


# -- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class Dist:
    left: Term
    right: Term


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class OneMinus:
    arg: Formula


@dataclass(frozen=True)
class TruncSub:
    """max(left - right, 0)."""

    left: Formula
    right: Formula


@dataclass(frozen=True)
class Min:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Max:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Scale:
    """min(factor * arg, 1)."""

    factor: Fraction
    arg: Formula


@dataclass(frozen=True)
class Inf:
    var: str
    body: Formula


@dataclass(frozen=True)
class Sup:
    var: str
    body: Formula


Formula = Union[Dist, Const, OneMinus, TruncSub, Min, Max, Scale, Inf, Sup]


class NotSigma2(ValueError):
    pass


# -- printing ---------------------------------------------------------------


def _term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Identity):
        return "e"
    if isinstance(t, Inv):
        return f"inv({_term(t.arg)})"
    right = _term(t.right)
    if isinstance(t.right, Mul):
        right = f"({right})"
    return f"{_term(t.left)}*{right}"


def _num(q: Fraction) -> str:
    return str(q)


def _operand(f: Formula) -> str:
    # operands of 1-, q*, and -. that would otherwise re-associate
    s = pretty(f)
    return f"({s})" if isinstance(f, (TruncSub, Inf, Sup)) else s


def pretty(f: Formula | Term) -> str:
    """Canonical text; ``parse(pretty(f)) == f``."""
    if isinstance(f, (Var, Identity, Inv, Mul)):
        return _term(f)
    if isinstance(f, Dist):
        return f"d({_term(f.left)}, {_term(f.right)})"
    if isinstance(f, Const):
        return _num(f.value)
    if isinstance(f, OneMinus):
        return f"1 - {_operand(f.arg)}"
    if isinstance(f, Scale):
        return f"{_num(f.factor)}*{_operand(f.arg)}"
    if isinstance(f, TruncSub):
        left = pretty(f.left)
        if isinstance(f.left, (Inf, Sup)):
            left = f"({left})"
        return f"{left} -. {_operand(f.right)}"
    if isinstance(f, Min):
        return f"min({pretty(f.left)}, {pretty(f.right)})"
    if isinstance(f, Max):
        return f"max({pretty(f.left)}, {pretty(f.right)})"
    if isinstance(f, Inf):
        return f"inf {f.var}. {pretty(f.body)}"
    if isinstance(f, Sup):
        return f"sup {f.var}. {pretty(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


# -- structure queries ------------------------------------------------------


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Identity):
        return set()
    if isinstance(t, Inv):
        return term_vars(t.arg)
    return term_vars(t.left) | term_vars(t.right)


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, Dist):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, Const):
        return set()
    if isinstance(f, (OneMinus, Scale)):
        return free_vars(f.arg)
    if isinstance(f, (Inf, Sup)):
        return free_vars(f.body) - {f.var}
    return free_vars(f.left) | free_vars(f.right)


def is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, (Inf, Sup)):
        return False
    if isinstance(f, (Dist, Const)):
        return True
    if isinstance(f, (OneMinus, Scale)):
        return is_quantifier_free(f.arg)
    return is_quantifier_free(f.left) and is_quantifier_free(f.right)


def sigma2_parts(f: Formula) -> tuple[list[str], list[str], Formula]:
    """Split ``inf x1..xa sup y1..yb. matrix`` into (xs, ys, matrix).

    Either prefix block may be empty.  Raises NotSigma2 for any other shape,
    for repeated bound names, or for free variables.
    """
    xs: list[str] = []
    ys: list[str] = []
    g = f
    while isinstance(g, Inf):
        xs.append(g.var)
        g = g.body
    while isinstance(g, Sup):
        ys.append(g.var)
        g = g.body
    if not is_quantifier_free(g):
        raise NotSigma2(f"not of the form inf..sup..(quantifier-free): {pretty(f)}")
    bound = xs + ys
    if len(set(bound)) != len(bound):
        raise NotSigma2("a variable is bound twice")
    extra = free_vars(g) - set(bound)
    if extra:
        raise NotSigma2(f"free variables {sorted(extra)} in a sentence")
    return xs, ys, g


def _occurrences(t: Term, var: str) -> int:
    if isinstance(t, Var):
        return int(t.name == var)
    if isinstance(t, Identity):
        return 0
    if isinstance(t, Inv):
        return _occurrences(t.arg, var)
    return _occurrences(t.left, var) + _occurrences(t.right, var)


def lipschitz_modulus(f: Formula, var: str) -> Fraction:
    """A constant L with |f(.., a, ..) - f(.., a', ..)| <= L d(a, a') in any
    bi-invariant metric group, ``var`` being the moved argument.

    A term moves by at most (occurrences of var) * d(a, a'); scaling
    multiplies the constant, truncated difference adds, min/max take the
    larger one.
    """
    if isinstance(f, Dist):
        return Fraction(_occurrences(f.left, var) + _occurrences(f.right, var))
    if isinstance(f, Const):
        return Fraction(0)
    if isinstance(f, OneMinus):
        return lipschitz_modulus(f.arg, var)
    if isinstance(f, Scale):
        return f.factor * lipschitz_modulus(f.arg, var)
    if isinstance(f, TruncSub):
        return lipschitz_modulus(f.left, var) + lipschitz_modulus(f.right, var)
    if isinstance(f, (Min, Max)):
        return max(lipschitz_modulus(f.left, var), lipschitz_modulus(f.right, var))
    if isinstance(f, (Inf, Sup)):
        return Fraction(0) if f.var == var else lipschitz_modulus(f.body, var)
    raise TypeError(f"not a formula: {f!r}")
