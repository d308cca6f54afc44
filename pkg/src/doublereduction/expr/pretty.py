"""Human-oriented printing: common monomial factors pulled out, one fraction bar.

The output still parses back to the same expression; it is just not the
canonical (byte-stable) form emitted by ``to_str``.
"""

from __future__ import annotations

from .core import Exp, Expr, Recip, _canon, mono_str, to_str
from .zero import as_fraction


def _common_factor(e: Expr):
    common = None
    for m in e.terms:
        mine = {a: p for a, p in m if p > 0 and not isinstance(a, (Exp, Recip))}
        common = mine if common is None else {a: min(p, mine[a]) for a, p in common.items() if a in mine}
    return {a: p for a, p in (common or {}).items() if p}


def _factored(e: Expr) -> str:
    if len(e.terms) < 2:
        return to_str(e)
    g = _common_factor(e)
    if not g:
        return to_str(e)
    rest = e * _canon({a: -p for a, p in g.items()}, 1)
    lead = mono_str(tuple(sorted(g.items(), key=lambda t: t[0].key)))
    return f"{lead}*({to_str(rest)})"


def pretty(e: Expr) -> str:
    num, den = as_fraction(e, clear_powers=True)
    top = _factored(num)
    if den == 1:
        return top
    if len(num.terms) > 1 and not _common_factor(num):
        top = f"({top})"
    bottom = to_str(den) if den.as_atom() is not None else f"({_factored(den)})"
    return f"{top}/{bottom}"
