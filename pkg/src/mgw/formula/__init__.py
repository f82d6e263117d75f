"""Continuous-logic formulas over bi-invariant metric groups."""

from .evaluate import *  # noqa: F401,F403
from .evaluate import __all__ as _ev
from .parser import GRAMMAR, ParseError, parse, parse_term
from .structures import *  # noqa: F401,F403
from .structures import __all__ as _st
from .syntax import *  # noqa: F401,F403
from .syntax import __all__ as _sx

__all__ = [*_sx, "parse", "parse_term", "ParseError", "GRAMMAR", *_st, *_ev]
