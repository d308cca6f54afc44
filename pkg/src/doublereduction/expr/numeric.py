"""Pointwise evaluation of expressions under concrete bindings."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Protocol, Union

from .core import Deriv, Exp, Expr, Func, Ln, Recip, Var

Value = Union[Fraction, float]

# |denominator| below this is treated as a singular point
SINGULAR = 1e-3


class SingularPoint(ArithmeticError):
    pass


class UnboundSymbol(LookupError):
    pass


class Binding(Protocol):
    def value_of(self, name: str) -> Value: ...

    def jet(self, name: str, index: tuple[str, ...]) -> Value: ...

    def function(self, name: str, order: int, x: Value) -> Value: ...


def _power(v: Value, p: int) -> Value:
    if p < 0:
        if abs(v) < SINGULAR:
            raise SingularPoint(f"denominator {float(v):.3g} too close to zero")
        if isinstance(v, Fraction):
            return 1 / v**-p
        return v**p
    return v**p


def eval_numeric(e: Expr, binding: Binding) -> Value:
    """Evaluate e at the binding's point.

    Rational inputs give an exact ``Fraction``; once ``ln``/``exp`` appear the
    result degrades to ``float``.
    """
    cache: dict = {}

    def atom_value(a) -> Value:
        got = cache.get(a)
        if got is not None:
            return got
        if isinstance(a, Var):
            got = binding.value_of(a.name)
        elif isinstance(a, Deriv):
            got = binding.jet(a.name, a.index)
        elif isinstance(a, Func):
            got = binding.function(a.name, a.order, eval_numeric(a.arg, binding))
        elif isinstance(a, Ln):
            x = eval_numeric(a.arg, binding)
            if x < SINGULAR:
                raise SingularPoint(f"ln of {float(x):.3g}")
            got = math.log(x)
        elif isinstance(a, Exp):
            x = float(eval_numeric(a.arg, binding))
            if x > 700:
                raise SingularPoint("exp overflow")
            got = math.exp(x)
        elif isinstance(a, Recip):
            got = _power(eval_numeric(a.base, binding), -1)
        else:  # pragma: no cover
            raise TypeError(a)
        cache[a] = got
        return got

    total: Value = Fraction(0)
    for m, c in e.terms.items():
        term: Value = c
        for a, p in m:
            term = term * _power(atom_value(a), p)
        total = total + term
    return total
