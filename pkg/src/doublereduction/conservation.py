"""PDE systems, conserved vectors and the association bracket."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .expr import (
    ZERO,
    Deriv,
    Expr,
    VariableContext,
    from_atom,
    is_derivative_of,
    is_zero,
    max_order,
    partial,
    substitute,
    total_derivative,
)
from .expr.zero import is_zero_symbolic
from .symmetry import Generator, Prolongation, apply

MAX_PASSES = 50


class ReductionError(ValueError):
    pass


class NotConservedError(ValueError):
    def __init__(self, residual: Expr):
        self.residual = residual
        super().__init__(f"divergence does not vanish on solutions; residual {residual}")


@dataclass(frozen=True)
class Equation:
    lhs: Expr
    leading: Deriv

    def __str__(self) -> str:
        return f"{self.lhs} = 0"


@dataclass(frozen=True)
class PdeSystem:
    """E^a = lhs_a = 0, each solved for its leading derivative when needed."""

    equations: tuple[Equation, ...]
    ctx: VariableContext
    _solved: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "equations", tuple(self.equations))
        leads = [eq.leading for eq in self.equations]
        if len(set(leads)) != len(leads):
            raise ReductionError("leading derivatives must be distinct")
        for eq in self.equations:
            if eq.leading.name not in self.ctx.dependents:
                raise ReductionError(f"leading atom {eq.leading} is not a derivative of a dependent")

    @property
    def order(self) -> int:
        return max((max_order(eq.lhs) for eq in self.equations), default=0)

    def solved(self) -> dict[Deriv, Expr]:
        """Leading derivative -> its value from the equation."""
        if not self._solved:
            for eq in self.equations:
                L = eq.leading
                coeff = partial(eq.lhs, L)
                rest = eq.lhs - coeff * from_atom(L)
                if coeff.is_zero or is_zero_symbolic(coeff):
                    raise ReductionError(f"leading coefficient of {L} vanishes identically")
                if any(is_derivative_of(a, L) for a in coeff.walk_atoms()) or not partial(rest, L).is_zero:
                    raise ReductionError(f"{eq.lhs} is not linear in its leading derivative {L}")
                self._solved[L] = -rest / coeff
        return dict(self._solved)


def reduce_mod_system(e: Expr, system: PdeSystem) -> Expr:
    """Eliminate every leading derivative (and its prolongations) from e."""
    bindings = system.solved()
    if not bindings:
        return e
    leads = list(bindings)
    for _ in range(MAX_PASSES):
        if not any(is_derivative_of(a, L) for a in e.walk_atoms() for L in leads):
            return e
        e = substitute(e, bindings, system.ctx)
    raise ReductionError(f"substitution did not terminate after {MAX_PASSES} passes")


def divergence(components: Sequence[Expr], ctx: VariableContext) -> Expr:
    if len(components) != len(ctx.independents):
        raise ValueError(f"expected {len(ctx.independents)} components, got {len(components)}")
    out = ZERO
    for comp, x in zip(components, ctx.independents):
        out = out + total_derivative(comp, x, ctx)
    return out


@dataclass(frozen=True)
class DivergenceCheck:
    holds: bool
    residual: Expr
    trivial: bool  # divergence vanishes without using the system


@dataclass(frozen=True)
class ConservedVector:
    components: tuple[Expr, ...]
    system: PdeSystem
    checked: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(Expr.lift(c) for c in self.components))
        if len(self.components) != len(self.system.ctx.independents):
            raise ValueError("one component per independent variable is required")

    @property
    def ctx(self) -> VariableContext:
        return self.system.ctx

    def __getitem__(self, name: str) -> Expr:
        return self.components[self.ctx.independents.index(name)]


def conserved_vector(components: Sequence[Expr], system: PdeSystem, check: bool = True) -> ConservedVector:
    """Construct T, verifying D_i T^i = 0 on solutions unless ``check`` is off."""
    T = ConservedVector(tuple(components), system, checked=False)
    if not check:
        return T
    result = check_divergence(T)
    if not result.holds:
        raise NotConservedError(result.residual)
    return ConservedVector(T.components, system, checked=True)


def check_divergence(T: ConservedVector, seed: int = 0) -> DivergenceCheck:
    div = divergence(T.components, T.ctx)
    trivial = is_zero(div, T.ctx, seed)
    residual = div if trivial else reduce_mod_system(div, T.system)
    holds = trivial or is_zero(residual, T.ctx, seed)
    return DivergenceCheck(holds, ZERO if holds else residual, trivial)


def bracket(T: ConservedVector, X: Generator) -> list[Expr]:
    """[T^i, X] = X(T^i) + T^i D_j xi^j - T^j D_j xi^i (not reduced)."""
    ctx = T.ctx
    if X.ctx != ctx:
        raise ValueError("generator and conserved vector live in different contexts")
    xs = ctx.independents
    grad = {(j, i): total_derivative(X.xi[i], j, ctx) for i in xs for j in xs}
    div_xi = sum((grad[(j, j)] for j in xs), ZERO)
    pro = Prolongation(X)
    out = []
    for i, Ti in zip(xs, T.components):
        comp = apply(X, Ti, pro) + Ti * div_xi
        for j, Tj in zip(xs, T.components):
            g = grad[(j, i)]
            if not g.is_zero:
                comp = comp - Tj * g
        out.append(comp)
    return out


ASSOCIATED = "associated"
NOT_ASSOCIATED = "not associated"
TRIVIAL_BRACKET = "trivial-bracket"


@dataclass(frozen=True)
class Association:
    generator: Generator
    bracket: tuple[Expr, ...]
    reduced: tuple[Expr, ...]
    identically_zero: bool

    @property
    def associated(self) -> bool:
        return all(is_zero_symbolic(c) for c in self.reduced)

    @property
    def verdict(self) -> str:
        if self.generator.is_zero:
            return TRIVIAL_BRACKET
        return ASSOCIATED if self.associated else NOT_ASSOCIATED

    def first_nonzero(self) -> tuple[int, Expr] | None:
        for i, c in enumerate(self.reduced):
            if not is_zero_symbolic(c):
                return i, c
        return None


def association(T: ConservedVector, X: Generator, seed: int = 0) -> Association:
    br = bracket(T, X)
    identically = all(is_zero(c, T.ctx, seed) for c in br)
    reduced = br if identically else [reduce_mod_system(c, T.system) for c in br]
    for c in reduced:  # numeric cross-check of every verdict
        is_zero(c, T.ctx, seed)
    return Association(X, tuple(br), tuple(reduced), identically)


def is_associated(T: ConservedVector, X: Generator) -> bool:
    return association(T, X).associated
