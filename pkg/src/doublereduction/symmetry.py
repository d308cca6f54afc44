"""Lie point symmetry generators, characteristics and prolongation."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterable, Mapping

from .expr import (
    ONE,
    ZERO,
    Atom,
    Deriv,
    Expr,
    Var,
    VariableContext,
    derivative,
    is_zero,
    jets,
    parse,
    total_derivative,
)
from .expr.core import differentiate


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    """X = xi^i d/dx^i + eta^a d/du^a with point coefficients.

    ``parts`` names the declared generators this one was combined from; the
    pipeline uses it to decide which generators a reduction consumed.
    """

    name: str
    ctx: VariableContext
    xi: Mapping[str, Expr]
    eta: Mapping[str, Expr]
    parts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        xi = {x: Expr.lift(self.xi.get(x, ZERO)) for x in self.ctx.independents}
        eta = {u: Expr.lift(self.eta.get(u, ZERO)) for u in self.ctx.dependents}
        extra = (set(self.xi) - set(xi)) | (set(self.eta) - set(eta))
        if extra:
            raise GeneratorError(f"{self.name}: coefficients for undeclared variables {sorted(extra)}")
        for label, coeff in list(xi.items()) + list(eta.items()):
            bad = [a for a in jets(coeff) if a.order > 0]
            if bad:
                raise GeneratorError(
                    f"{self.name}: coefficient of {label} depends on derivative {bad[0]}; "
                    "only point symmetries are supported"
                )
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)
        if not self.parts:
            object.__setattr__(self, "parts", (self.name,))

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.xi.values()) and all(c.is_zero for c in self.eta.values())

    def coefficient(self, name: str) -> Expr:
        if name in self.xi:
            return self.xi[name]
        return self.eta[name]

    def scaled(self, factor: Expr) -> "Generator":
        factor = Expr.lift(factor)
        return Generator(
            f"{factor}*{self.name}",
            self.ctx,
            {k: v * factor for k, v in self.xi.items()},
            {k: v * factor for k, v in self.eta.items()},
            self.parts,
        )

    def __str__(self) -> str:
        return format_generator(self)


def format_generator(g: Generator) -> str:
    """``t*d/dt + x*d/dx`` style; ``0`` for the zero generator."""
    out = ""
    for name, coeff in list(g.xi.items()) + list(g.eta.items()):
        if coeff.is_zero:
            continue
        sign = "+"
        if len(coeff.terms) == 1 and next(iter(coeff.terms.values())) < 0:
            sign, coeff = "-", -coeff
        if coeff == ONE:
            piece = f"d/d{name}"
        elif len(coeff.terms) == 1:
            piece = f"{coeff}*d/d{name}"
        else:
            piece = f"({coeff})*d/d{name}"
        if not out:
            out = piece if sign == "+" else f"-{piece}"
        else:
            out += f" {sign} {piece}"
    return out or "0"


def generator_from_coefficients(
    name: str, ctx: VariableContext, coefficients: Mapping[str, str | Expr]
) -> Generator:
    """Build from ``{"xi_t": "t", "eta_u": "0", ...}``; missing entries are zero."""
    xi, eta = {}, {}
    for label, value in coefficients.items():
        expr = parse(value, ctx) if isinstance(value, str) else Expr.lift(value)
        kind, _, target = label.partition("_")
        if kind == "xi" and target in ctx.independents:
            xi[target] = expr
        elif kind == "eta" and target in ctx.dependents:
            eta[target] = expr
        else:
            raise GeneratorError(f"{name}: unknown coefficient {label!r}")
    return Generator(name, ctx, xi, eta)


def combine(terms: Iterable[tuple[Expr, Generator]], name: str | None = None) -> Generator:
    """Linear combination sum_k c_k X_k of generators over one context."""
    terms = [(Expr.lift(c), g) for c, g in terms]
    if not terms:
        raise GeneratorError("empty combination")
    ctx = terms[0][1].ctx
    if any(g.ctx != ctx for _, g in terms):
        raise GeneratorError("cannot combine generators over different contexts")
    xi = {x: sum((c * g.xi[x] for c, g in terms), ZERO) for x in ctx.independents}
    eta = {u: sum((c * g.eta[u] for c, g in terms), ZERO) for u in ctx.dependents}
    if name is None:
        name = " + ".join(g.name if c == ONE else f"{c}*{g.name}" for c, g in terms)
    parts = tuple(dict.fromkeys(p for c, g in terms if not c.is_zero for p in g.parts))
    return Generator(name, ctx, xi, eta, parts)


def zero_generator(ctx: VariableContext, name: str = "0") -> Generator:
    return Generator(name, ctx, {}, {})


# characteristic and prolongation ---------------------------------------------------


def characteristic(X: Generator, alpha: str) -> Expr:
    """W^a = eta^a - xi^j u^a_j."""
    ctx = X.ctx
    w = X.eta[alpha]
    for x in ctx.independents:
        if not X.xi[x].is_zero:
            w = w - X.xi[x] * derivative(ctx, alpha, (x,))
    return w


class Prolongation:
    """Lazily computed zeta^a_J = D_J(W^a) + xi^j u^a_{jJ}."""

    def __init__(self, X: Generator):
        self.X = X
        self.ctx = X.ctx
        self._dw: dict[tuple[str, tuple[str, ...]], Expr] = {}
        self._zeta: dict[tuple[str, tuple[str, ...]], Expr] = {}

    def _dj_w(self, alpha: str, index: tuple[str, ...]) -> Expr:
        key = (alpha, index)
        got = self._dw.get(key)
        if got is None:
            if not index:
                got = characteristic(self.X, alpha)
            else:
                got = total_derivative(self._dj_w(alpha, index[:-1]), index[-1], self.ctx)
            self._dw[key] = got
        return got

    def zeta(self, alpha: str, index: Iterable[str]) -> Expr:
        index = self.ctx.sort_index(index)
        if not index:
            return self.X.eta[alpha]
        key = (alpha, index)
        got = self._zeta.get(key)
        if got is None:
            got = self._dj_w(alpha, index)
            for x in self.ctx.independents:
                if not self.X.xi[x].is_zero:
                    got = got + self.X.xi[x] * derivative(self.ctx, alpha, index + (x,))
            self._zeta[key] = got
        return got


@dataclass
class ProlongedCoefficients:
    zeta: dict[tuple[str, tuple[str, ...]], Expr] = field(default_factory=dict)

    def __getitem__(self, key):
        alpha, index = key
        return self.zeta[(alpha, tuple(index))]


def prolong(X: Generator, order: int) -> ProlongedCoefficients:
    """All zeta^a_J for 1 <= |J| <= order."""
    if order < 1:
        raise ValueError("prolongation order must be >= 1")
    pro = Prolongation(X)
    out = ProlongedCoefficients()
    for alpha in X.ctx.dependents:
        args = X.ctx.args_of(alpha)
        for k in range(1, order + 1):
            for index in combinations_with_replacement(args, k):
                out.zeta[(alpha, X.ctx.sort_index(index))] = pro.zeta(alpha, index)
    return out


def apply(X: Generator, e: Expr, prolongation: Prolongation | None = None) -> Expr:
    """The prolonged generator applied to e (chain rule through functions)."""
    pro = prolongation or Prolongation(X)

    def leaf(a: Atom) -> Expr:
        if isinstance(a, Var):
            return X.xi.get(a.name, ZERO) if a.kind == "indep" else ZERO
        assert isinstance(a, Deriv)
        if a.name not in X.eta:
            raise GeneratorError(f"{a.name!r} is not a dependent variable of {X.name}")
        return pro.zeta(a.name, a.index)

    return differentiate(e, leaf)


def admits(X: Generator, system, seed: int = 0) -> bool:
    """Convenience check that X maps solutions of the system to solutions."""
    from .conservation import reduce_mod_system

    pro = Prolongation(X)
    for eq in system.equations:
        image = reduce_mod_system(apply(X, eq.lhs, pro), system)
        if not is_zero(image, system.ctx, seed):
            return False
    return True

