"""Total derivatives, formal partials and substitution."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping

from .context import DEPENDENT, INDEPENDENT, PARAMETER, ContextError, VariableContext
from .core import (
    ONE,
    ZERO,
    Atom,
    Deriv,
    Expr,
    Func,
    Var,
    differentiate,
    from_atom,
    map_atoms,
)


class CyclicBindingError(ValueError):
    pass


def derivative(ctx: VariableContext, name: str, index: Iterable[str] = ()) -> Expr:
    """``u_J`` as an expression, or zero when u does not depend on some x in J."""
    index = tuple(index)
    if ctx.kind(name) != DEPENDENT:
        raise ContextError(f"derivative of non-dependent symbol {name!r}")
    args = ctx.args_of(name)
    for x in index:
        if ctx.kind(x) != INDEPENDENT:
            raise ContextError(f"{x!r} is not an independent variable")
        if x not in args:
            return ZERO
    return from_atom(Deriv(name, ctx.sort_index(index)))


def symbol(ctx: VariableContext, name: str) -> Expr:
    kind = ctx.kind(name)
    if kind == INDEPENDENT:
        return from_atom(Var(name, "indep"))
    if kind == PARAMETER:
        return from_atom(Var(name, "param"))
    if kind == DEPENDENT:
        return from_atom(Deriv(name, ()))
    if kind is None:
        raise ContextError(f"undeclared identifier {name!r}")
    raise ContextError(f"function {name!r} used without an argument")


def _check_var(ctx: VariableContext, a: Var) -> None:
    expected = INDEPENDENT if a.kind == "indep" else PARAMETER
    if ctx.kind(a.name) != expected:
        raise ContextError(f"{a.name!r} is not a declared {expected.replace('-', ' ')}")


def total_derivative(e: Expr, x: str, ctx: VariableContext) -> Expr:
    """D_x e: explicit x-dependence plus chain rule through every derivative atom."""
    if ctx.kind(x) != INDEPENDENT:
        raise ContextError(f"{x!r} is not an independent variable")

    def leaf(a: Atom) -> Expr:
        if isinstance(a, Var):
            _check_var(ctx, a)
            return ONE if a.kind == "indep" and a.name == x else ZERO
        if ctx.kind(a.name) != DEPENDENT:
            raise ContextError(f"{a.name!r} is not a dependent variable")
        return derivative(ctx, a.name, a.index + (x,))

    return differentiate(e, leaf)


def total_derivatives(e: Expr, index: Iterable[str], ctx: VariableContext) -> Expr:
    for x in index:
        e = total_derivative(e, x, ctx)
    return e


def partial(e: Expr, atom: Atom) -> Expr:
    """Formal partial derivative with respect to a ``Var`` or ``Deriv`` atom."""
    if not isinstance(atom, (Var, Deriv)):
        raise TypeError("partial derivatives are taken with respect to variables or jets")
    return differentiate(e, lambda a: ONE if a == atom else ZERO)


def is_derivative_of(a: Atom, base: Deriv) -> bool:
    """True when ``a`` is ``base`` or a higher derivative of it."""
    if not isinstance(a, Deriv) or a.name != base.name:
        return False
    return not (Counter(base.index) - Counter(a.index))


def contains(e: Expr, pred) -> bool:
    return any(pred(a) for a in e.walk_atoms())


def substitute(e: Expr, bindings: Mapping[Atom, Expr], ctx: VariableContext | None = None) -> Expr:
    """Simultaneous replacement of atoms.

    A bound jet ``u_J`` also rewrites every higher jet ``u_{J+K}`` as
    ``D_K`` applied to its bound value (``ctx`` is then required).
    """
    bindings = {k: Expr.lift(v) for k, v in bindings.items()}
    for key, value in bindings.items():
        if not isinstance(key, (Var, Deriv)):
            raise TypeError(f"binding key {key!r} is not a variable or jet")
        if isinstance(key, Deriv):
            hit = contains(value, lambda a: is_derivative_of(a, key))
        else:
            hit = contains(value, lambda a: a == key)
        if hit:
            raise CyclicBindingError(f"binding for {key} refers to itself")
    jets = [k for k in bindings if isinstance(k, Deriv)]

    def leaf(a: Atom) -> Expr | None:
        if a in bindings:
            return bindings[a]
        if isinstance(a, Deriv):
            for key in jets:
                if is_derivative_of(a, key):
                    if ctx is None:
                        raise ValueError("substituting a jet binding into higher derivatives needs a context")
                    extra = list((Counter(a.index) - Counter(key.index)).elements())
                    return total_derivatives(bindings[key], extra, ctx)
        return None

    return map_atoms(e, leaf)


def max_order(e: Expr) -> int:
    orders = [a.order for a in e.walk_atoms() if isinstance(a, Deriv)]
    return max(orders, default=0)


def jets(e: Expr) -> set[Deriv]:
    return {a for a in e.walk_atoms() if isinstance(a, Deriv)}


def free_names(e: Expr) -> set[str]:
    """Names of variables, parameters, dependents and functions occurring in e."""
    out = set()
    for a in e.walk_atoms():
        if isinstance(a, (Var, Deriv, Func)):
            out.add(a.name)
    return out
