"""Symbolic expressions over declared independent/dependent variables."""

from .calculus import (
    CyclicBindingError,
    derivative,
    free_names,
    is_derivative_of,
    jets,
    max_order,
    partial,
    substitute,
    symbol,
    total_derivative,
    total_derivatives,
)
from .context import (
    DEPENDENT,
    FUNCTION,
    INDEPENDENT,
    PARAMETER,
    ContextError,
    Symbol,
    VariableContext,
)
from .core import (
    ONE,
    ZERO,
    Atom,
    Deriv,
    Exp,
    Expr,
    Func,
    Ln,
    Recip,
    Var,
    const,
    dep,
    exp_,
    from_atom,
    func,
    ln_,
    map_atoms,
    param,
    to_str,
    var,
)
from .numeric import SingularPoint, UnboundSymbol, eval_numeric
from .parse import ParseError, UndeclaredIdentifier, parse
from .pretty import pretty
from .zero import ZeroTestDisagreement, as_fraction, is_zero, is_zero_symbolic


def normalize(e: Expr) -> Expr:
    """Canonical form.  Expressions are normalized on construction, so this
    only re-derives the form from scratch (useful after deserialization)."""
    return map_atoms(e, lambda a: None)


def to_text(e: Expr) -> str:
    return to_str(e)


__all__ = [name for name in dir() if not name.startswith("_")]
