"""Recursive-descent parser for continuous-logic formulas.

Grammar (whitespace is insignificant)::

    formula := quant | diff
    quant   := ("inf" | "sup") VAR "." formula
    diff    := unary ("-." unary)*                  left-associative
    unary   := quant | "1" "-" unary | NUM "*" unary | atom
    atom    := "min(" formula "," formula ")" | "max(" formula "," formula ")"
             | NUM | "d(" term "," term ")" | "(" formula ")"
    term    := factor ("*" factor)*                  left-associative
    factor  := VAR | "e" | "inv(" term ")" | "comm(" term "," term ")" | "(" term ")"

NUM is ``p``, ``p/q`` or a decimal ``p.ddd``.  ``a -. b`` is max(a - b, 0) and
``q*f`` is min(q f, 1).  ``comm(a,b)`` desugars to ``a*b*inv(a)*inv(b)``.
Since every value lies in [0, 1], ``min(f, 1)`` is read as ``f`` and
``max(f, 0)`` as ``f``.
"""

from __future__ import annotations

import re
import textwrap
from fractions import Fraction
from typing import Iterable

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
    comm,
    free_vars,
)

__all__ = ["parse", "parse_term", "ParseError", "GRAMMAR"]

GRAMMAR = textwrap.dedent(__doc__.split("::\n\n")[1].split("\n\n")[0])

RESERVED = frozenset({"inf", "sup", "min", "max", "d", "e", "inv", "comm"})

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<trunc>-\.)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-().,*]))"
)


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # token helpers
    def peek(self, ahead: int = 0) -> tuple[str, str, int]:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def at(self, value: str, ahead: int = 0) -> bool:
        kind, val, _ = self.peek(ahead)
        return kind != "num" and val == value and kind != "end"

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, pos = self.peek()
        if val != value or kind in ("num", "end"):
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)
        self.i += 1

    def error(self, what: str) -> ParseError:
        _, val, pos = self.peek()
        return ParseError(f"expected {what}, found {val or 'end of input'!r}", pos)

    # formulas
    def formula(self) -> Formula:
        if self.at("inf") or self.at("sup"):
            return self.quant()
        left = self.unary()
        while self.peek()[0] == "trunc":
            self.take()
            left = TruncSub(left, self.unary())
        return left

    def quant(self) -> Formula:
        _, q, _ = self.take()
        kind, name, pos = self.take()
        if kind != "ident" or name in RESERVED:
            raise ParseError(f"expected a variable after {q!r}", pos)
        self.expect(".")
        body = self.formula()
        return Inf(name, body) if q == "inf" else Sup(name, body)

    def number(self) -> Fraction:
        kind, val, pos = self.take()
        if kind != "num":
            raise ParseError("expected a number", pos)
        return Fraction(val)

    def unary(self) -> Formula:
        if self.at("inf") or self.at("sup"):
            return self.quant()
        kind, val, pos = self.peek()
        if kind == "num":
            nxt = self.peek(1)
            if nxt[0] == "op" and nxt[1] == "*":
                q = self.number()
                self.take()
                return Scale(q, self.unary())
            if nxt[0] == "op" and nxt[1] == "-":
                if Fraction(val) != 1:
                    raise ParseError("only '1-' is a connective", pos)
                self.take()
                self.take()
                return OneMinus(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "num":
            q = self.number()
            if not 0 <= q <= 1:
                raise ParseError(f"constant {val} outside [0, 1]", pos)
            return Const(q)
        if self.at("min") or self.at("max"):
            self.take()
            self.expect("(")
            a = self.formula()
            self.expect(",")
            b = self.formula()
            self.expect(")")
            if val == "min":
                if b == Const(Fraction(1)):
                    return a
                if a == Const(Fraction(1)):
                    return b
                return Min(a, b)
            if b == Const(Fraction(0)):
                return a
            if a == Const(Fraction(0)):
                return b
            return Max(a, b)
        if self.at("d"):
            self.take()
            self.expect("(")
            s = self.term()
            self.expect(",")
            t = self.term()
            self.expect(")")
            return Dist(s, t)
        if self.at("("):
            self.take()
            f = self.formula()
            self.expect(")")
            return f
        raise self.error("a formula")

    # terms
    def term(self) -> Term:
        t = self.factor()
        while self.at("*"):
            self.take()
            t = Mul(t, self.factor())
        return t

    def factor(self) -> Term:
        kind, val, pos = self.peek()
        if self.at("inv"):
            self.take()
            self.expect("(")
            t = self.term()
            self.expect(")")
            return Inv(t)
        if self.at("comm"):
            self.take()
            self.expect("(")
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(")")
            return comm(a, b)
        if self.at("("):
            self.take()
            t = self.term()
            self.expect(")")
            return t
        if kind == "ident":
            self.take()
            if val == "e":
                return Identity()
            if val in RESERVED:
                raise ParseError(f"reserved word {val!r} used as a variable", pos)
            return Var(val)
        raise self.error("a term")

    def finish(self) -> None:
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos)


def parse(text: str, free: Iterable[str] | None = None) -> Formula:
    """Parse ``text``.  If ``free`` is given, every variable not bound by a
    quantifier must be listed there."""
    p = _Parser(text)
    f = p.formula()
    p.finish()
    if free is not None:
        extra = free_vars(f) - set(free)
        if extra:
            name = sorted(extra)[0]
            m = re.search(rf"\b{re.escape(name)}\b", text)
            raise ParseError(f"unbound variable {name!r}", m.start() if m else 0)
    return f


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    p.finish()
    return t
