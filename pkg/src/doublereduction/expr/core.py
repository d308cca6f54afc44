"""Immutable expressions kept in normalized form.

An :class:`Expr` is a finite sum of monomials with exact rational
coefficients.  A monomial is a product of integer powers of atoms:

* ``Var``    an independent variable or a parameter
* ``Deriv``  a dependent variable or one of its partial derivatives
* ``Func``   an arbitrary function (or its k-th derivative) of an expression
* ``Ln``, ``Exp``  natural log and exponential of an expression
* ``Recip``  the reciprocal of a sum that cannot be split into monomials

Every constructor returns the canonical form, so structural equality is
equality of normalized expressions.  Products of exponentials are merged
into a single ``exp``; ``exp(k*ln(a))`` becomes ``a^k`` for integer ``k``
and ``ln(exp(a))`` becomes ``a``.  Nothing else about logs is simplified.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Mapping, Union

Number = Union[int, Fraction]


class Atom:
    __slots__ = ("key", "_hash")

    def _set_key(self, key: tuple) -> None:
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError("atoms are immutable")

    def __eq__(self, other) -> bool:
        return isinstance(other, Atom) and self.key == other.key

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Atom") -> bool:
        return self.key < other.key

    def __repr__(self) -> str:
        return f"{type(self).__name__}<{atom_str(self)}>"


class Var(Atom):
    """An independent variable (``indep``) or a parameter (``param``)."""

    __slots__ = ("name", "kind")

    def __init__(self, name: str, kind: str = "indep"):
        if kind not in ("indep", "param"):
            raise ValueError(f"bad variable kind {kind!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "kind", kind)
        self._set_key((0 if kind == "param" else 1, name))


class Deriv(Atom):
    """``u`` (empty index) or the partial derivative ``u_J``.

    The index must already be sorted in context order; use
    :meth:`VariableContext.sort_index` or :func:`derivative`.
    """

    __slots__ = ("name", "index")

    def __init__(self, name: str, index: tuple[str, ...] = ()):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "index", tuple(index))
        self._set_key((2, name, len(self.index), self.index))

    @property
    def order(self) -> int:
        return len(self.index)


class Func(Atom):
    __slots__ = ("name", "order", "arg")

    def __init__(self, name: str, order: int, arg: "Expr"):
        if order < 0:
            raise ValueError("negative derivative order")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "arg", arg)
        self._set_key((3, name, arg.key, order))


class Ln(Atom):
    __slots__ = ("arg",)

    def __init__(self, arg: "Expr"):
        object.__setattr__(self, "arg", arg)
        self._set_key((4, "", arg.key, 0))


class Exp(Atom):
    __slots__ = ("arg",)

    def __init__(self, arg: "Expr"):
        object.__setattr__(self, "arg", arg)
        self._set_key((5, "", arg.key, 0))


class Recip(Atom):
    __slots__ = ("base",)

    def __init__(self, base: "Expr"):
        object.__setattr__(self, "base", base)
        self._set_key((6, "", base.key, 0))


Monomial = tuple  # tuple[tuple[Atom, int], ...], sorted by atom key


def mono_key(m: Monomial) -> tuple:
    return tuple((a.key, e) for a, e in m)


def _sorted_mono(powers: Mapping[Atom, int]) -> Monomial:
    return tuple(sorted(((a, e) for a, e in powers.items() if e), key=lambda p: p[0].key))


def _needs_canon(powers: Mapping[Atom, int]) -> bool:
    n_exp = 0
    for a, e in powers.items():
        if isinstance(a, Exp):
            n_exp += 1
            if e != 1 or n_exp > 1:
                return True
        elif isinstance(a, Recip) and e < 0:
            return True
    return False


class Expr:
    """Normalized expression: ``{monomial: coefficient}``, never mutated."""

    __slots__ = ("terms", "_key", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        # internal: callers guarantee canonical monomials and nonzero coefficients
        object.__setattr__(self, "terms", dict(terms or {}))
        object.__setattr__(self, "_key", None)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("expressions are immutable")

    # construction ------------------------------------------------------

    @staticmethod
    def lift(value: "Expr | Number") -> "Expr":
        if isinstance(value, Expr):
            return value
        if isinstance(value, (int, Rational)):
            return const(value)
        raise TypeError(f"cannot use {type(value).__name__} in an expression")

    # identity ------------------------------------------------------------

    @property
    def key(self) -> tuple:
        if self._key is None:
            items = sorted(((mono_key(m), (c.numerator, c.denominator)) for m, c in self.terms.items()))
            object.__setattr__(self, "_key", tuple(items))
        return self._key

    def __hash__(self) -> int:
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(self.key))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Expr):
            return self.terms == other.terms
        if isinstance(other, (int, Rational)):
            return self.terms == const(other).terms
        return NotImplemented

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    @property
    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not a rational constant")
        return self.terms.get((), Fraction(0))

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def as_atom(self) -> Atom | None:
        """The atom if this expression is exactly one atom to the first power."""
        if len(self.terms) == 1:
            (m, c), = self.terms.items()
            if c == 1 and len(m) == 1 and m[0][1] == 1:
                return m[0][0]
        return None

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in printing order (largest monomial first)."""
        return sorted(self.terms.items(), key=lambda t: mono_key(t[0]), reverse=True)

    def atoms(self) -> set[Atom]:
        return {a for m in self.terms for a, _ in m}

    def walk_atoms(self) -> Iterator[Atom]:
        """All atoms, including those nested inside function/log/exp arguments."""
        seen: set[Atom] = set()
        stack = list(self.atoms())
        while stack:
            a = stack.pop()
            if a in seen:
                continue
            seen.add(a)
            yield a
            inner = _inner(a)
            if inner is not None:
                stack.extend(inner.atoms())

    # arithmetic ------------------------------------------------------------

    def __add__(self, other):
        other = Expr.lift(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return Expr(out)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-Expr.lift(other))

    def __rsub__(self, other):
        return Expr.lift(other) + (-self)

    def __mul__(self, other):
        other = Expr.lift(other)
        if not self.terms or not other.terms:
            return ZERO
        if other.is_constant:
            c = other.terms[()]
            return self if c == 1 else Expr({m: v * c for m, v in self.terms.items()})
        if self.is_constant:
            return other * self
        out: dict = {}
        extra: list[Expr] = []
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                powers = dict(m1)
                for a, e in m2:
                    powers[a] = powers.get(a, 0) + e
                if _needs_canon(powers):
                    extra.append(_canon(powers, c1 * c2))
                    continue
                m = _sorted_mono(powers)
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        result = Expr(out)
        for e in extra:
            result = result + e
        return result

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int):
            if isinstance(k, Expr) and k.is_constant and k.constant_value.denominator == 1:
                k = int(k.constant_value)
            else:
                raise ValueError("only integer powers are supported")
        if k == 0:
            return ONE
        if len(self.terms) == 1:
            (m, c), = self.terms.items()
            if k < 0 and c == 0:
                raise ZeroDivisionError("0 raised to a negative power")
            powers = {a: e * k for a, e in m}
            return _canon(powers, Fraction(c) ** k)
        if not self.terms:
            if k < 0:
                raise ZeroDivisionError("division by zero expression")
            return ZERO
        if k > 0:
            result, base = ONE, self
            while k:
                if k & 1:
                    result = result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        return _reciprocal_of_sum(self) ** (-k)

    def __truediv__(self, other):
        other = Expr.lift(other)
        if other.is_zero:
            raise ZeroDivisionError("division by zero expression")
        return self * other ** -1

    def __rtruediv__(self, other):
        return Expr.lift(other) / self

    # printing ------------------------------------------------------------------

    def __str__(self) -> str:
        return to_str(self)

    def __repr__(self) -> str:
        return f"Expr<{to_str(self)}>"


ZERO = Expr()
ONE = Expr({(): Fraction(1)})


def const(value: Number) -> Expr:
    value = Fraction(value)
    return Expr({(): value}) if value else ZERO


def from_atom(a: Atom) -> Expr:
    return Expr({((a, 1),): Fraction(1)})


def monomial_expr(m: Monomial, coeff: Number = 1) -> Expr:
    return _canon(dict(m), Fraction(coeff))


def _canon(powers: Mapping[Atom, int], coeff: Fraction) -> Expr:
    if not coeff:
        return ZERO
    powers = {a: e for a, e in powers.items() if e}
    if not _needs_canon(powers):
        return Expr({_sorted_mono(powers): Fraction(coeff)})
    factor = ONE
    exp_arg = ZERO
    plain = {}
    for a, e in powers.items():
        if isinstance(a, Exp):
            exp_arg = exp_arg + a.arg * e
        elif isinstance(a, Recip) and e < 0:
            factor = factor * a.base ** (-e)
        else:
            plain[a] = e
    result = Expr({_sorted_mono(plain): Fraction(coeff)})
    if exp_arg.terms:
        factor = factor * exp_(exp_arg)
    return result * factor


def _content(e: Expr) -> tuple[Fraction, Monomial]:
    """Leading coefficient and the common monomial factor (plain atoms only)."""
    lead_c = e.sorted_terms()[0][1]
    common: dict[Atom, int] | None = None
    for m in e.terms:
        mine = {a: p for a, p in m if not isinstance(a, (Exp, Recip))}
        if common is None:
            common = mine
        else:
            common = {a: min(p, mine[a]) for a, p in common.items() if a in mine}
    return lead_c, _sorted_mono(common or {})


def _reciprocal_of_sum(e: Expr) -> Expr:
    lead_c, g = _content(e)
    scale = Expr({g: lead_c}) if g else const(lead_c)
    base = e * scale ** -1
    if base.is_monomial:  # content removal exposed a monomial
        return base ** -1 * scale ** -1
    return from_atom(Recip(base)) * scale ** -1


# atom-level constructors -------------------------------------------------------


def var(name: str, kind: str = "indep") -> Expr:
    return from_atom(Var(name, kind))


def param(name: str) -> Expr:
    return from_atom(Var(name, "param"))


def dep(name: str, index: Iterable[str] = ()) -> Expr:
    return from_atom(Deriv(name, tuple(index)))


def func(name: str, arg: Expr, order: int = 0) -> Expr:
    return from_atom(Func(name, order, Expr.lift(arg)))


def ln_(arg: Expr) -> Expr:
    arg = Expr.lift(arg)
    if arg.is_zero:
        raise ValueError("ln(0)")
    if arg == ONE:
        return ZERO
    a = arg.as_atom()
    if isinstance(a, Exp):
        return a.arg
    return from_atom(Ln(arg))


def exp_(arg: Expr) -> Expr:
    arg = Expr.lift(arg)
    result = ONE
    rest = {}
    for m, c in arg.terms.items():
        if len(m) == 1 and m[0][1] == 1 and isinstance(m[0][0], Ln) and c.denominator == 1:
            result = result * m[0][0].arg ** int(c)
        else:
            rest[m] = c
    if rest:
        result = result * from_atom(Exp(Expr(rest)))
    return result


def rebuild_atom(a: Atom, inner: Callable[[Expr], Expr]) -> Expr:
    """Reconstruct a composite atom after mapping its inner expression."""
    if isinstance(a, Func):
        return func(a.name, inner(a.arg), a.order)
    if isinstance(a, Ln):
        return ln_(inner(a.arg))
    if isinstance(a, Exp):
        return exp_(inner(a.arg))
    if isinstance(a, Recip):
        return inner(a.base) ** -1
    return from_atom(a)


def _inner(a: Atom) -> Expr | None:
    if isinstance(a, (Func, Ln, Exp)):
        return a.arg
    if isinstance(a, Recip):
        return a.base
    return None


def map_atoms(e: Expr, leaf: Callable[[Atom], Expr | None]) -> Expr:
    """Replace every ``Var``/``Deriv`` atom by ``leaf(atom)`` (None keeps it).

    Composite atoms are rebuilt from their mapped arguments, and the result is
    renormalized.
    """
    cache: dict[Atom, Expr] = {}

    def image(a: Atom) -> Expr:
        got = cache.get(a)
        if got is None:
            if isinstance(a, (Var, Deriv)):
                got = leaf(a)
                if got is None:
                    got = from_atom(a)
            else:
                got = rebuild_atom(a, lambda inner: map_atoms(inner, leaf))
            cache[a] = got
        return got

    out = ZERO
    for m, c in e.terms.items():
        term = const(c)
        for a, p in m:
            term = term * image(a) ** p
        out = out + term
    return out


def differentiate(e: Expr, leaf_d: Callable[[Atom], Expr]) -> Expr:
    """Apply a derivation fixed by its values on ``Var``/``Deriv`` atoms.

    Function, log, exponential and reciprocal atoms follow the chain rule,
    and products follow Leibniz.
    """
    cache: dict[Atom, Expr] = {}

    def d_atom(a: Atom) -> Expr:
        got = cache.get(a)
        if got is None:
            if isinstance(a, (Var, Deriv)):
                got = leaf_d(a)
            elif isinstance(a, Func):
                inner = differentiate(a.arg, leaf_d)
                got = func(a.name, a.arg, a.order + 1) * inner if inner else ZERO
            elif isinstance(a, Ln):
                inner = differentiate(a.arg, leaf_d)
                got = inner * a.arg ** -1 if inner else ZERO
            elif isinstance(a, Exp):
                inner = differentiate(a.arg, leaf_d)
                got = from_atom(a) * inner if inner else ZERO
            elif isinstance(a, Recip):
                inner = differentiate(a.base, leaf_d)
                got = -(from_atom(a) ** 2) * inner if inner else ZERO
            else:  # pragma: no cover
                raise TypeError(a)
            cache[a] = got
        return got

    out = ZERO
    for m, c in e.terms.items():
        for i, (a, p) in enumerate(m):
            da = d_atom(a)
            if not da.terms:
                continue
            rest = dict(m)
            rest[a] = p - 1
            out = out + _canon(rest, c * p) * da
    return out


# printing ------------------------------------------------------------------------


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def atom_str(a: Atom) -> str:
    if isinstance(a, Var):
        return a.name
    if isinstance(a, Deriv):
        return a.name if not a.index else f"D({a.name},{','.join(a.index)})"
    if isinstance(a, Func):
        return f"{a.name}{chr(39) * a.order}({to_str(a.arg)})"
    if isinstance(a, Ln):
        return f"ln({to_str(a.arg)})"
    if isinstance(a, Exp):
        return f"exp({to_str(a.arg)})"
    if isinstance(a, Recip):
        return f"({to_str(a.base)})"
    raise TypeError(a)  # pragma: no cover


def _factor_str(a: Atom, p: int) -> str:
    if isinstance(a, Recip):
        return f"{atom_str(a)}^-{p}"
    return atom_str(a) if p == 1 else f"{atom_str(a)}^{p}"


def mono_str(m: Monomial) -> str:
    return "*".join(_factor_str(a, p) for a, p in m)


def to_str(e: Expr) -> str:
    """Canonical text form; re-parses to the identical expression."""
    if not e.terms:
        return "0"
    parts = []
    for i, (m, c) in enumerate(e.sorted_terms()):
        mag = abs(c)
        if not m:
            body = _frac_str(mag)
        elif mag == 1:
            body = mono_str(m)
        else:
            body = f"{_frac_str(mag)}*{mono_str(m)}"
        if i == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)
