"""Zero testing: normalize-and-compare, backed by a randomized numeric check."""

from __future__ import annotations

from .context import VariableContext
from .core import ONE, ZERO, Atom, Expr, Recip, _canon

CHECK_POINTS = 5
CHECK_TOLERANCE = 1e-9


class ZeroTestDisagreement(AssertionError):
    """Symbolic and numeric zero tests disagree: a normalizer gap or a bug."""


def as_fraction(e: Expr, clear_powers: bool = False) -> tuple[Expr, Expr]:
    """Write e as num/den with every reciprocal-of-sum moved into den.

    With ``clear_powers`` negative powers of plain atoms are cleared too.
    """
    num, den = e, ONE
    while True:
        recips = {a: p for m in num.terms for a, p in m if isinstance(a, Recip)}
        if not recips:
            break
        r = max(recips, key=lambda a: a.key)
        k = max(p for m in num.terms for a, p in m if a == r)
        out = ZERO
        for m, c in num.terms.items():
            powers = dict(m)
            j = powers.pop(r, 0)
            out = out + _canon(powers, c) * r.base ** (k - j)
        num, den = out, den * r.base**k
    if clear_powers and num.terms:
        lows: dict[Atom, int] = {}
        for m in num.terms:
            for a, p in m:
                if p < 0:
                    lows[a] = min(lows.get(a, 0), p)
        if lows:
            scale = _canon({a: -p for a, p in lows.items()}, 1)
            num, den = num * scale, den * scale
    return num, den


def is_zero_symbolic(e: Expr) -> bool:
    return as_fraction(e)[0].is_zero


def is_zero(e: Expr, ctx: VariableContext | None = None, seed: int = 0) -> bool:
    """Exact zero test.

    When a context is given, the symbolic verdict is cross-checked at a few
    random bindings and any disagreement raises :class:`ZeroTestDisagreement`.
    """
    symbolic = is_zero_symbolic(e)
    if ctx is None or e.is_constant:
        return symbolic
    from ..oracle import verify_zero

    verdict = verify_zero(e, ctx, samples=CHECK_POINTS, seed=seed, tol=CHECK_TOLERANCE)
    if verdict.inconclusive:
        return symbolic
    if verdict.passed != symbolic:
        raise ZeroTestDisagreement(
            f"symbolic zero test says {symbolic} but numeric residual is "
            f"{verdict.max_abs_residual:.3g} for {e}"
        )
    return symbolic
