"""Semantics: evaluation, Sigma_2 minimax, embedding defects, convergence scans."""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .parser import parse
from .structures import Exhaustive, MetricStructure, Sampled, structure_from_descriptor
from .syntax import (
    Const,
    Dist,
    Formula,
    Identity,
    Inf,
    Inv,
    Max,
    Min,
    Mul,
    OneMinus,
    Scale,
    Sup,
    Term,
    TruncSub,
    Var,
    free_vars,
    sigma2_parts,
    term_vars,
)

__all__ = [
    "DEFAULT_BUDGET",
    "BUILTIN_SENTENCES",
    "UnassignedVariable",
    "BudgetExceeded",
    "ShadowContractError",
    "budget_limit",
    "evaluate",
    "evaluate_term",
    "sigma2_value",
    "estimate_label",
    "EmbeddingDefect",
    "embedding_defect",
    "discrete_shadow_check",
    "ScanPoint",
    "convergence_scan",
]

DEFAULT_BUDGET = 5 * 10**8

BUILTIN_SENTENCES: dict[str, str] = {
    "commutator_gap": "inf x. sup y. min(2*d(comm(x, y), e), 1)",
    "far_from_identity": "sup x. d(x, e)",
    "noncommutativity": "inf x. sup y. d(x*y, y*x)",
    "square_root_of_identity": "inf x. d(x*x, e)",
    "far_central_element": "inf x. sup y. max(1 - d(x, e), d(x*y, y*x))",
    "diameter_gap": "inf x. sup y. d(x, y) -. 1/2",
    "far_order_three": "sup x. min(d(x, e), 1 - d(x*x*x, e))",
    "three_letter_reversal": "inf x. sup y. sup z. d(x*y*z, z*y*x)",
    "square_or_commutator": "inf x. sup y. max(d(x*x, e), 1/2*d(comm(x, y), e))",
    "distance_or_inverse": "inf x. sup y. min(d(x, y), d(x*y, e))",
}


class UnassignedVariable(KeyError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class ShadowContractError(ValueError):
    pass


def budget_limit(budget: int | None = None) -> int:
    if budget is not None:
        return int(budget)
    env = os.environ.get("MGW_BUDGET")
    return int(float(env)) if env else DEFAULT_BUDGET


# ---------------------------------------------------------------------------
# direct interpretation


def evaluate_term(M: MetricStructure, t: Term, assignment: Mapping[str, object]):
    if isinstance(t, Var):
        try:
            return assignment[t.name]
        except KeyError:
            raise UnassignedVariable(t.name) from None
    if isinstance(t, Identity):
        return M.identity()
    if isinstance(t, Inv):
        return M.inv(evaluate_term(M, t.arg, assignment))
    return M.mul(evaluate_term(M, t.left, assignment), evaluate_term(M, t.right, assignment))


def evaluate(M: MetricStructure, f: Formula, assignment: Mapping[str, object] | None = None):
    """Value of ``f`` in ``M``: a Fraction for exact structures, else a float.

    Quantifiers take the min/max over ``M.carrier()``: the whole structure in
    exhaustive mode, the drawn pool in sampled mode.
    """
    env = dict(assignment or {})
    missing = free_vars(f) - env.keys()
    if missing:
        raise UnassignedVariable(", ".join(sorted(missing)))
    return _eval(M, f, env)


def _eval(M: MetricStructure, f: Formula, env: dict):
    if isinstance(f, Dist):
        return M.dist(evaluate_term(M, f.left, env), evaluate_term(M, f.right, env))
    if isinstance(f, Const):
        return M.scalar(f.value)
    if isinstance(f, OneMinus):
        return 1 - _eval(M, f.arg, env)
    if isinstance(f, TruncSub):
        return max(_eval(M, f.left, env) - _eval(M, f.right, env), M.scalar(Fraction(0)))
    if isinstance(f, Min):
        return min(_eval(M, f.left, env), _eval(M, f.right, env))
    if isinstance(f, Max):
        return max(_eval(M, f.left, env), _eval(M, f.right, env))
    if isinstance(f, Scale):
        return min(M.scalar(f.factor) * _eval(M, f.arg, env), M.scalar(Fraction(1)))
    if isinstance(f, (Inf, Sup)):
        pick = min if isinstance(f, Inf) else max
        saved = env.get(f.var, _MISSING)
        vals = []
        for a in M.carrier():
            env[f.var] = a
            vals.append(_eval(M, f.body, env))
        if saved is _MISSING:
            env.pop(f.var, None)
        else:
            env[f.var] = saved
        return pick(vals)
    raise TypeError(f"not a formula: {f!r}")


_MISSING = object()


# ---------------------------------------------------------------------------
# Sigma_2 minimax


class _Indexed:
    """Carrier elements by position, with lazily memoized group tables."""

    def __init__(self, M: MetricStructure):
        self.M = M
        self.elems = M.carrier()
        self.n = len(self.elems)
        self.index = {M.key(x): i for i, x in enumerate(self.elems)}
        self.e = self.index[M.key(M.identity())]
        self._mul: dict[int, int] = {}
        self._inv: dict[int, int] = {}
        self._dist: dict[int, object] = {}

    def mul(self, i: int, j: int) -> int:
        k = i * self.n + j
        r = self._mul.get(k)
        if r is None:
            r = self._mul[k] = self.index[self.M.key(self.M.mul(self.elems[i], self.elems[j]))]
        return r

    def inv(self, i: int) -> int:
        r = self._inv.get(i)
        if r is None:
            r = self._inv[i] = self.index[self.M.key(self.M.inv(self.elems[i]))]
        return r

    def dist(self, i: int, j: int):
        k = i * self.n + j if i <= j else j * self.n + i
        r = self._dist.get(k)
        if r is None:
            r = self._dist[k] = self.M.dist(self.elems[i], self.elems[j])
        return r


def _compile_term(t: Term, pos: dict[str, int], ix: _Indexed) -> Callable:
    if isinstance(t, Var):
        p = pos[t.name]
        return lambda env: env[p]
    if isinstance(t, Identity):
        e = ix.e
        return lambda env: e
    if isinstance(t, Inv):
        a = _compile_term(t.arg, pos, ix)
        return lambda env: ix.inv(a(env))
    a = _compile_term(t.left, pos, ix)
    b = _compile_term(t.right, pos, ix)
    return lambda env: ix.mul(a(env), b(env))


def _compile(f: Formula, pos: dict[str, int], ix: _Indexed, one, zero) -> Callable:
    if isinstance(f, Dist):
        s = _compile_term(f.left, pos, ix)
        t = _compile_term(f.right, pos, ix)
        return lambda env: ix.dist(s(env), t(env))
    if isinstance(f, Const):
        c = ix.M.scalar(f.value)
        return lambda env: c
    if isinstance(f, OneMinus):
        a = _compile(f.arg, pos, ix, one, zero)
        return lambda env: one - a(env)
    if isinstance(f, TruncSub):
        a = _compile(f.left, pos, ix, one, zero)
        b = _compile(f.right, pos, ix, one, zero)
        return lambda env: max(a(env) - b(env), zero)
    if isinstance(f, Min):
        a = _compile(f.left, pos, ix, one, zero)
        b = _compile(f.right, pos, ix, one, zero)
        return lambda env: min(a(env), b(env))
    if isinstance(f, Max):
        a = _compile(f.left, pos, ix, one, zero)
        b = _compile(f.right, pos, ix, one, zero)
        return lambda env: max(a(env), b(env))
    if isinstance(f, Scale):
        q = ix.M.scalar(f.factor)
        a = _compile(f.arg, pos, ix, one, zero)
        return lambda env: min(q * a(env), one)
    raise TypeError(f"quantifier inside a compiled matrix: {f!r}")


def _minimax(qf: Callable, nx: int, ny: int, size: int, one, zero):
    # inf over x-tuples of sup over y-tuples; an inner sup stops once it
    # cannot lower the running minimum, the outer loop once it hits 0
    best = None
    for xt in product(range(size), repeat=nx):
        threshold = one if best is None else best
        inner = None
        for yt in product(range(size), repeat=ny):
            v = qf(xt + yt)
            if inner is None or v > inner:
                inner = v
                if inner >= threshold:
                    break
        if best is None or inner < best:
            best = inner
            if best <= zero:
                break
    return best


def estimate_label(M: MetricStructure, f: Formula) -> str:
    """'exact' in exhaustive mode; otherwise says which way sampling errs."""
    if M.exhaustive:
        return "exact"
    xs, ys, _ = sigma2_parts(f)
    if xs and ys:
        return "sampled estimate"
    return "sampled upper estimate" if xs else "sampled lower estimate"


def sigma2_value(
    M: MetricStructure,
    f: Formula,
    budget: int | None = None,
    refine: int = 0,
    refine_step: float = 0.1,
):
    """Value of the sentence ``inf xs sup ys. matrix`` in ``M``.

    Exhaustive finite structures are evaluated exactly on memoized tables;
    sampled structures over their pool.  ``refine`` > 0 adds that many
    random local moves (structures with ``perturb`` only) to each inner sup.
    """
    xs, ys, matrix = sigma2_parts(f)
    size = M.carrier_size()
    if size is None:
        size = len(M.carrier())
    cost = size ** (len(xs) + len(ys))
    limit = budget_limit(budget)
    if cost > limit:
        raise BudgetExceeded(
            f"{M.descriptor}: {size}^{len(xs) + len(ys)} = {cost} evaluations exceed the budget "
            f"{limit}; use Sampled mode or raise MGW_BUDGET"
        )
    one, zero = M.scalar(Fraction(1)), M.scalar(Fraction(0))
    names = xs + ys
    if M.exhaustive:
        ix = _Indexed(M)
        qf = _compile(matrix, {v: i for i, v in enumerate(names)}, ix, one, zero)
        return _minimax(qf, len(xs), len(ys), ix.n, one, zero)

    pool = M.carrier()

    def qf(env):
        return _eval(M, matrix, {v: pool[i] for v, i in zip(names, env)})

    if not refine or not ys or not hasattr(M, "perturb"):
        return _minimax(qf, len(xs), len(ys), len(pool), one, zero)
    return _refined_minimax(M, matrix, xs, ys, pool, refine, refine_step)


def _refined_minimax(M, matrix, xs, ys, pool, steps, step):
    rng = np.random.default_rng([M.mode.seed, 1])
    best = None
    for xt in product(range(len(pool)), repeat=len(xs)):
        env = {v: pool[i] for v, i in zip(xs, xt)}
        inner, arg = None, None
        for yt in product(range(len(pool)), repeat=len(ys)):
            env.update({v: pool[i] for v, i in zip(ys, yt)})
            v = _eval(M, matrix, env)
            if inner is None or v > inner:
                inner, arg = v, [pool[i] for i in yt]
        for _ in range(steps):
            j = int(rng.integers(len(ys)))
            cand = list(arg)
            cand[j] = M.perturb(cand[j], step, rng)
            env.update(zip(ys, cand))
            v = _eval(M, matrix, env)
            if v > inner:
                inner, arg = v, cand
        if best is None or inner < best:
            best = inner
    return best


# ---------------------------------------------------------------------------
# embeddings


@dataclass(frozen=True)
class EmbeddingDefect:
    """Largest violation of each symbol by a map M -> N over the probed elements."""

    product: object
    inverse: object
    identity: object
    metric: object

    @property
    def value(self):
        return max(self.product, self.inverse, self.identity, self.metric)


def embedding_defect(
    f: Callable,
    M: MetricStructure,
    N: MetricStructure,
    sample: Sequence | None = None,
) -> EmbeddingDefect:
    """Defects of ``f`` on ``sample`` (default: the carrier of M).

    product:  d_N(f(a) f(b), f(ab))
    inverse:  d_N(f(a)^-1, f(a^-1))
    identity: d_N(f(e_M), e_N)
    metric:   |d_N(f(a), f(b)) - d_M(a, b)|
    """
    elems = list(sample) if sample is not None else M.carrier()
    img = [f(a) for a in elems]
    zero = N.scalar(Fraction(0))
    prod_d = inv_d = met_d = zero
    for a, fa in zip(elems, img):
        inv_d = max(inv_d, N.dist(N.inv(fa), f(M.inv(a))))
        for b, fb in zip(elems, img):
            prod_d = max(prod_d, N.dist(N.mul(fa, fb), f(M.mul(a, b))))
            met_d = max(met_d, abs(N.dist(fa, fb) - M.dist(a, b)))
    id_d = N.dist(f(M.identity()), N.identity())
    return EmbeddingDefect(prod_d, inv_d, id_d, met_d)


def _validate_shadow_map(q: Callable, grid: int, extra: Iterable) -> None:
    points = {Fraction(i, grid) for i in range(grid + 1)} | {Fraction(x) for x in extra}
    for x in sorted(points):
        v = q(x)
        if not 0 <= v <= 1:
            raise ShadowContractError(f"q({x}) = {v} outside [0, 1]")
        if (v == 0) != (x == 0):
            raise ShadowContractError(f"q({x}) = {v}: need q(x) = 0 exactly when x = 0")


def discrete_shadow_check(
    M: MetricStructure,
    q: Callable,
    s: Term,
    t: Term,
    grid: int = 64,
    tol: float = 1e-9,
) -> bool:
    """Check that q(d(s, t)) = 0 exactly when s = t, over all assignments of
    the variables of s and t from the carrier.

    ``q`` is first validated on the rational grid {i/grid}: values in [0, 1],
    q(0) = 0, and q(x) > 0 for x > 0; a violation raises ShadowContractError.
    For inexact structures "= 0" and "s = t" are read up to ``tol``.
    """
    _validate_shadow_map(q, grid, [])
    names = sorted(term_vars(s) | term_vars(t))
    pool = M.carrier()
    for combo in product(pool, repeat=len(names)):
        env = dict(zip(names, combo))
        a, b = evaluate_term(M, s, env), evaluate_term(M, t, env)
        d = M.dist(a, b)
        if M.exact:
            _validate_shadow_map(q, grid, [d])
            zero = q(d) == 0
        else:
            zero = q(d) <= tol
        if zero != M.equal(a, b):
            return False
    return True


# ---------------------------------------------------------------------------
# convergence scans


@dataclass(frozen=True)
class ScanPoint:
    n: int
    value: object
    label: str


def convergence_scan(
    f: Formula | str,
    family: str,
    n_range: Iterable[int],
    samples: int = 64,
    seed: int = 0,
    budget: int | None = None,
    sampled: bool | None = None,
    refine: int = 0,
) -> list[ScanPoint]:
    """Evaluate a Sigma_2 sentence along S_n, U_n or rank(n).

    sym and rank are exhaustive unless ``sampled`` is set; unitary is always
    sampled.  Nothing about convergence is asserted here.
    """
    if isinstance(f, str):
        f = parse(f)
    sigma2_parts(f)
    use_samples = family == "unitary" if sampled is None else sampled or family == "unitary"
    out = []
    for n in n_range:
        mode = Sampled(samples, seed) if use_samples else Exhaustive()
        M = structure_from_descriptor(family, n, mode)
        value = sigma2_value(M, f, budget=budget, refine=refine)
        out.append(ScanPoint(n, value, estimate_label(M, f)))
    return out
