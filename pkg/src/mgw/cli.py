"""``mgw``: chain checks, rounding experiments and Sigma_2 scans as CSV.

Exit status: 0 on success, 1 when a verification fails (a chain check, or a
guaranteed bound), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from .formula.evaluate import BudgetExceeded, convergence_scan, embedding_defect
from .formula.parser import GRAMMAR, ParseError, parse
from .formula.structures import RankStructure, SymmetricGroup, UnitaryGroup
from .formula.syntax import NotSigma2
from .matrix import haar_unitary
from .order import ETA, RANK_FORMULA, chain_check, rank_chain, sym_chain, unitary_chain
from .perm import all_permutations, diagonal_embed, pad_embed, random_permutation
from .rounding import block_average_unitary, round_to_subgroup, unitary_round


class UsageError(Exception):
    pass


def _q(x) -> str:
    return str(Fraction(x))


def _f(x) -> str:
    return repr(float(x))


def _range(text: str) -> list[int]:
    """'3..5' or '3,4,5'."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use 'a..b' or 'a,b,c'") from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mgw", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out", help="write CSV here instead of stdout")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("chains", help="verify an order-property chain")
    c.add_argument("--family", choices=["sym", "unitary", "rank"], default="sym")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--l", type=int, required=True)
    c.add_argument("--epsilon", type=Fraction, default=Fraction(0))
    c.add_argument("--formula", help="override the default formula (x1, x2 / y1, y2)")
    common(c, seed=False)

    r = sub.add_parser("round", help="round random permutations into an embedded S_m")
    r.add_argument("--m", type=int, required=True)
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--samples", type=int, default=100)
    common(r)

    u = sub.add_parser("uround", help="round random unitaries")
    u.add_argument("--k", type=int, required=True)
    u.add_argument("--m", type=int, required=True)
    u.add_argument("--r", type=int, default=0)
    u.add_argument("--method", choices=["polar", "block"], default="polar")
    u.add_argument("--samples", type=int, default=50)
    common(u)

    v = sub.add_parser("converge", help="evaluate a Sigma_2 sentence along a family")
    v.add_argument("--family", choices=["sym", "unitary", "rank"], default="sym")
    v.add_argument("--formula", required=True)
    v.add_argument("--n", type=_range, required=True)
    v.add_argument("--samples", type=int, default=64)
    v.add_argument("--sampled", action="store_true", help="sample sym/rank instead of enumerating")
    v.add_argument("--refine", type=int, default=0)
    v.add_argument("--budget", type=int)
    common(v)

    d = sub.add_parser("defect", help="embedding defects of S_m -> S_n maps")
    d.add_argument("--kind", choices=["pad", "diagonal", "round"], required=True)
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--k", type=int, default=2)
    d.add_argument("--n", type=int, help="target degree for pad (default m + 1)")
    d.add_argument("--samples", type=int, default=20)
    common(d)
    return p


# ---------------------------------------------------------------------------


def _chains(a, w) -> int:
    builders = {"sym": sym_chain, "unitary": unitary_chain, "rank": rank_chain}
    structures = {"sym": SymmetricGroup, "unitary": UnitaryGroup, "rank": RankStructure}
    try:
        tuples = builders[a.family](a.n, a.l)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = a.formula or (RANK_FORMULA if a.family == "rank" else ETA)
    res = chain_check(structures[a.family](a.n), parse(text), a.epsilon, tuples)
    w.writerow(["i", "j", "relation", "value", "value_float", "ok"])
    eps = a.epsilon
    tol = 0 if a.family != "unitary" else 1e-9
    for i, row in enumerate(res.values, 1):
        for j, val in enumerate(row, 1):
            if i < j:
                rel, ok = "before", val <= eps + tol
            elif i > j:
                rel, ok = "after", val >= 1 - eps - tol
            else:
                rel, ok = "same", True
            w.writerow([i, j, rel, _q(val) if a.family != "unitary" else "", _f(val), int(ok)])
    return 0 if res.ok else 1


def _round(a, w) -> int:
    rng = np.random.default_rng(a.seed)
    w.writerow(
        ["kind", "m", "k", "r", "seed", "sample", "achieved", "achieved_float", "bound",
         "bound_float", "guaranteed", "within_bound", "chop_distance", "align_distance"]
    )
    bad = False
    for i in range(a.samples):
        res = round_to_subgroup(random_permutation(a.k * a.m, rng), a.m, a.k)
        ok = res.within_bound
        bad |= res.guaranteed and not ok
        w.writerow(["perm", a.m, a.k, 0, a.seed, i, _q(res.achieved_distance),
                    _f(res.achieved_distance), str(res.bound), _f(res.bound), int(res.guaranteed),
                    int(ok), _q(res.chop_distance), _q(res.align_distance)])
    return 1 if bad else 0


def _uround(a, w) -> int:
    rng = np.random.default_rng(a.seed)
    r = a.r if a.method == "polar" else 0
    w.writerow(["kind", "m", "k", "r", "seed", "sample", "achieved", "bound", "guaranteed",
                "within_bound", "singular"])
    bad = False
    for i in range(a.samples):
        if a.method == "polar":
            res = unitary_round(haar_unitary(a.k * a.m + r, rng), a.k, a.m, r)
        else:
            res = block_average_unitary(haar_unitary(a.k * a.m, rng), a.k)
        ok = res.achieved_distance <= res.bound
        bad |= not ok
        w.writerow([a.method, a.m, a.k, r, a.seed, i, _f(res.achieved_distance), _f(res.bound), 1,
                    int(ok), int(res.singular)])
    return 1 if bad else 0


def _converge(a, w) -> int:
    pts = convergence_scan(parse(a.formula), a.family, a.n, samples=a.samples, seed=a.seed,
                           budget=a.budget, sampled=a.sampled, refine=a.refine)
    w.writerow(["n", "value", "value_float", "label"])
    for p in pts:
        exact = isinstance(p.value, Fraction)
        w.writerow([p.n, _q(p.value) if exact else "", _f(p.value), p.label])
    return 0


def _defect(a, w) -> int:
    rng = np.random.default_rng(a.seed)
    w.writerow(["kind", "sample", "source", "target", "product", "inverse", "identity", "metric",
                "defect", "defect_float", "distance"])
    m = a.m
    if a.kind == "round":
        # one embedding per element: the relabelled diagonal copy that round_to_subgroup picks
        n = a.k * m
        src = SymmetricGroup(m)
        for i in range(a.samples):
            res = round_to_subgroup(random_permutation(n, rng), m, a.k)
            probe = [res.small] + [random_permutation(m, rng) for _ in range(8)]
            d = embedding_defect(res.embed, src, SymmetricGroup(n), probe)
            w.writerow([a.kind, i, f"sym({m})", f"sym({n})", _q(d.product), _q(d.inverse),
                        _q(d.identity), _q(d.metric), _q(d.value), _f(d.value),
                        _q(res.achieved_distance)])
        return 0
    if a.kind == "pad":
        n = a.n if a.n is not None else m + 1
        if n < m:
            raise UsageError(f"--n {n} is smaller than --m {m}")
        f = lambda s: pad_embed(s, n)  # noqa: E731
    else:
        n = a.k * m
        f = lambda s: diagonal_embed(s, a.k, n)  # noqa: E731
    src = SymmetricGroup(m)
    probe = list(all_permutations(m)) if m <= 5 else [random_permutation(m, rng) for _ in range(a.samples)]
    d = embedding_defect(f, src, SymmetricGroup(n), probe)
    w.writerow([a.kind, 0, f"sym({m})", f"sym({n})", _q(d.product), _q(d.inverse), _q(d.identity),
                _q(d.metric), _q(d.value), _f(d.value), ""])
    return 0


_COMMANDS = {"chains": _chains, "round": _round, "uround": _uround, "converge": _converge, "defect": _defect}


def run(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    buf = io.StringIO(newline="")
    w = csv.writer(buf)
    try:
        code = _COMMANDS[a.command](a, w)
    except (ParseError, NotSigma2) as exc:
        print(f"mgw: formula error: {exc}\n\ngrammar:\n{GRAMMAR}", file=sys.stderr)
        return 2
    except (UsageError, BudgetExceeded, ValueError) as exc:
        print(f"mgw: {exc}", file=sys.stderr)
        return 2
    data = buf.getvalue()
    if a.out:
        with open(a.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
