"""The double-reduction driver.

Each stage picks a generator associated with the current conserved vector,
moves to its canonical coordinates, drops the canonical variable and carries
the conserved vector (minus its canonical component) and the remaining
generators down to the reduced system.  With one independent variable left,
the conserved form ``D_n T^n = 0`` integrates to the first integral ``T^n = C``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .conservation import (
    Association,
    ConservedVector,
    DivergenceCheck,
    PdeSystem,
    ReductionError,
    association,
    check_divergence,
    reduce_mod_system,
)
from .coordinates import (
    CanonicalResult,
    CoordinateChange,
    CoordinateNames,
    DegenerateChangeError,
    Inherited,
    UnsupportedGeneratorError,
    build_change,
    canonical_coordinates,
    restrict_system,
    transform_conserved,
    transform_conserved_rowrep,
    transform_generator,
    transform_system,
    transformed_bracket,
)
from .expr import ONE, Expr, VariableContext, free_names, is_zero, max_order, parse, total_derivative
from .expr.zero import is_zero_symbolic
from .symmetry import Generator, apply, combine, generator_from_coefficients


class NotAssociatedError(ValueError):
    def __init__(self, result: Association):
        self.association = result
        hit = result.first_nonzero()
        where = ""
        if hit is not None:
            i, comp = hit
            x = result.generator.ctx.independents[i]
            where = f"; [T^{x}, X] = {comp}"
        super().__init__(f"{result.generator.name} is not associated with the conserved vector{where}")


class NoAssociatedGenerator(LookupError):
    pass


class UnknownGeneratorError(KeyError):
    def __str__(self) -> str:
        return f"unknown generator {self.args[0]!r}"


class ComboSyntaxError(ValueError):
    pass


FIRST = "first"
COMBO = "combo"
EXHAUSTIVE = "exhaustive"
STRATEGIES = (FIRST, COMBO, EXHAUSTIVE)


@dataclass(frozen=True)
class SelectionStrategy:
    """How a stage picks its generator.

    ``combo`` applies at stage 1 only; later stages fall back to the first
    associated generator of the inherited pool.  ``injected`` adds
    generators, written in the stage's own variables, to a stage's pool.
    """

    kind: str = FIRST
    combo: str | None = None
    injected: Mapping[int, Sequence[tuple[str, Mapping[str, str]]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; choose from {', '.join(STRATEGIES)}")
        if self.kind == COMBO and not self.combo:
            raise ValueError("the combo strategy needs a combination expression")


# combinations ------------------------------------------------------------------------------

_TERM = re.compile(r"^(?:(?P<coef>.+)\*)?\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)$")


def _split_terms(text: str) -> list[tuple[int, str]]:
    terms, depth, start = [], 0, 0
    text = text.strip()
    if not text:
        raise ComboSyntaxError("empty combination")
    i = 0
    chunk_sign = 1
    if text[0] in "+-":
        chunk_sign = -1 if text[0] == "-" else 1
        start = i = 1
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ComboSyntaxError(f"unbalanced ')' at column {i + 1}")
        elif ch in "+-" and depth == 0 and text[i - 1] not in "*/^(":
            terms.append((chunk_sign, text[start:i].strip()))
            chunk_sign = -1 if ch == "-" else 1
            start = i + 1
        i += 1
    if depth:
        raise ComboSyntaxError("unbalanced '('")
    terms.append((chunk_sign, text[start:].strip()))
    return terms


def parse_combo(text: str, pool: Sequence[Generator], name: str | None = None) -> Generator:
    """``"X1 + c1*X2 + c2*X3"`` -> the combined generator."""
    if not pool:
        raise ComboSyntaxError("no generators to combine")
    ctx = pool[0].ctx
    by_name = {g.name: g for g in pool}
    terms = []
    for sign, chunk in _split_terms(text):
        m = _TERM.match(chunk)
        if not chunk or m is None:
            raise ComboSyntaxError(f"malformed term {chunk!r} in {text!r}")
        gname = m.group("name")
        if gname not in by_name:
            raise UnknownGeneratorError(gname)
        coef_text = m.group("coef")
        try:
            coef = parse(coef_text, ctx) if coef_text else ONE
        except ValueError as exc:
            raise ComboSyntaxError(f"bad coefficient {coef_text!r}: {exc}") from None
        if any(n in ctx.independents or n in ctx.dependents for n in free_names(coef)):
            raise ComboSyntaxError(f"coefficient {coef_text!r} must be built from parameters and numbers")
        terms.append((coef * sign, by_name[gname]))
    return combine(terms, name or " ".join(text.split()))


# selection ----------------------------------------------------------------------------------


def _free_parameters(T: ConservedVector) -> list[str]:
    used: set[str] = set()
    for eq in T.system.equations:
        used |= free_names(eq.lhs)
    for c in T.components:
        used |= free_names(c)
    return [p for p in T.ctx.parameters if p not in used]


def _supported(X: Generator) -> bool:
    try:
        canonical_coordinates(X)
    except UnsupportedGeneratorError:
        return False
    return True


def select_associated(
    T: ConservedVector, gens: Sequence[Generator], strategy: SelectionStrategy | str = FIRST, stage: int = 1
) -> tuple[Generator, Association]:
    """Pick the stage generator; raises NoAssociatedGenerator if nothing qualifies."""
    if isinstance(strategy, str):
        strategy = SelectionStrategy(strategy)
    if not gens:
        raise NoAssociatedGenerator("no candidate generators")
    if strategy.kind == COMBO and stage == 1:
        X = parse_combo(strategy.combo, gens)
        result = association(T, X)
        if not result.associated:
            raise NoAssociatedGenerator(str(NotAssociatedError(result)))
        return X, result
    verdicts = [(g, association(T, g)) for g in gens]
    good = [(g, a) for g, a in verdicts if a.associated and not g.is_zero]
    if not good:
        names = ", ".join(g.name for g in gens)
        raise NoAssociatedGenerator(f"none of {names} is associated with the stage-{stage} conserved vector")
    if strategy.kind == EXHAUSTIVE and len(good) > 1:
        coefs = _free_parameters(T)
        members = [g for g, _ in good][: len(coefs) + 1]
        while len(members) > 1:
            terms = [(ONE, members[0])] + [
                (parse(c, T.ctx), g) for c, g in zip(coefs, members[1:])
            ]
            X = combine(terms)
            if _supported(X):
                return X, association(T, X)
            members = members[:-1]
    for g, a in good:
        if _supported(g):
            return g, a
    return good[0]


# one reduction ------------------------------------------------------------------------------


@dataclass
class ReductionStep:
    stage: int
    incoming: ConservedVector
    used_generator: Generator
    association: Association
    canonical: CanonicalResult | None
    change: CoordinateChange
    full_system: PdeSystem
    reduced_system: PdeSystem
    full_T: ConservedVector
    reduced_T: ConservedVector
    divergence: DivergenceCheck
    rowrep_agrees: bool
    bracket_vanishes: bool
    inherited: list[Inherited]
    canonical_flux_vanishes: bool = True  # D_q T^q = 0 with the new dependents free of q

    @property
    def canonical_component(self) -> Expr:
        return self.full_T[self.change.canonical]

    @property
    def jacobian(self) -> Expr:
        return self.change.J


def reduce_once(
    system: PdeSystem,
    T: ConservedVector,
    X: Generator,
    others: Sequence[Generator] = (),
    stage: int = 1,
    names: CoordinateNames | None = None,
    change: CoordinateChange | None = None,
) -> ReductionStep:
    """One reduction by an associated X; raises NotAssociatedError otherwise."""
    if len(system.ctx.independents) < 2:
        raise ReductionError("nothing to reduce: only one independent variable")
    result = association(T, X)
    if X.is_zero or not result.associated:
        raise NotAssociatedError(result)
    cr = None
    if change is None:
        cr = canonical_coordinates(X, names, stage)
        change = build_change(cr, system.ctx)
    else:
        _check_canonical(X, change)
    full_system = transform_system(system, change)
    q = change.canonical
    reduced_system = restrict_system(full_system, change.reduced)
    full_T = transform_conserved(T, change, full_system)
    kept = [c for name, c in zip(change.target.independents, full_T.components) if name != q]
    for c in kept:
        if q in free_names(c):
            raise ReductionError(f"transformed conserved vector still depends on {q}: {c}")
    reduced_T = ConservedVector(tuple(kept), reduced_system)
    div = check_divergence(reduced_T)
    if not div.holds:
        raise ReductionError(f"reduced conserved vector fails the divergence check; residual {div.residual}")
    reduced_T = ConservedVector(reduced_T.components, reduced_system, checked=True)
    rowrep = transform_conserved_rowrep(T, change, full_system)
    agrees = all(is_zero_symbolic(a - b) for a, b in zip(full_T.components, rowrep.components))
    br = transformed_bracket(T, X, change)
    vanishes = all(is_zero(reduce_mod_system(c, full_system), change.target) for c in br)
    inherited = [transform_generator(Y, change) for Y in others if Y.name != X.name]
    flux = total_derivative(full_T[q], q, change.target)
    return ReductionStep(
        stage, T, X, result, cr, change, full_system, reduced_system, full_T, reduced_T, div, agrees, vanishes,
        inherited, is_zero(flux, change.target),
    )


def _check_canonical(X: Generator, ch: CoordinateChange) -> None:
    if ch.canonical is None:
        raise DegenerateChangeError("a reduction change must name its canonical variable")
    for name, d in ch.new_independents + ch.new_dependents:
        want = ONE if name == ch.canonical else Expr.lift(0)
        if not is_zero(apply(X, d) - want, ch.source):
            raise DegenerateChangeError(f"{X.name} is not d/d{ch.canonical} in the supplied change ({name} = {d})")


# the full pipeline ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FirstIntegral:
    lhs: Expr
    variable: str
    constant_name: str
    system: PdeSystem
    verified: bool

    def __str__(self) -> str:
        return f"{self.lhs} = {self.constant_name}"


@dataclass
class ReductionTrace:
    system: PdeSystem
    conserved: ConservedVector
    steps: list[ReductionStep]
    first_integral: FirstIntegral | None = None
    residual_system: PdeSystem | None = None
    diagnostic: str = ""
    definitions: list[tuple[str, Expr]] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.first_integral is not None

    @property
    def original_order(self) -> int:
        return self.system.order

    @property
    def final_order(self) -> int | None:
        return max_order(self.first_integral.lhs) if self.first_integral else None

    @property
    def order_drops_by_one(self) -> bool:
        return self.complete and self.final_order == self.original_order - 1

    @property
    def final(self):
        return self.first_integral if self.complete else self.residual_system


def _constant_name(ctx: VariableContext) -> str:
    for name in ("C", "K", "C0", "C1"):
        if name not in ctx:
            return name
    k = 2
    while f"C{k}" in ctx:
        k += 1
    return f"C{k}"


def first_integral(T: ConservedVector) -> FirstIntegral:
    """T^n = C for a single-variable conserved form, verified modulo the ODE."""
    if len(T.ctx.independents) != 1:
        raise ReductionError("first integral needs exactly one independent variable")
    (x,) = T.ctx.independents
    (lhs,) = T.components
    residual = reduce_mod_system(total_derivative(lhs, x, T.ctx), T.system)
    return FirstIntegral(lhs, x, _constant_name(T.ctx), T.system, is_zero(residual, T.ctx))


def back_substitute(steps: Sequence[ReductionStep]) -> list[tuple[str, Expr]]:
    """Final-stage variables written in the original coordinates."""
    if not steps:
        return []
    last = steps[-1].change
    defs = [(n, d) for n, d in last.definitions() if n != last.canonical]
    for step in reversed(steps[:-1]):
        defs = [(n, step.change.to_old(d)) for n, d in defs]
    return defs


def _injected(strategy: SelectionStrategy, stage: int, ctx: VariableContext) -> list[Generator]:
    return [generator_from_coefficients(n, ctx, coeffs) for n, coeffs in strategy.injected.get(stage, ())]


def run_pipeline(
    system: PdeSystem,
    T: ConservedVector,
    gens: Sequence[Generator],
    strategy: SelectionStrategy | str = FIRST,
    changes: Mapping[int, CoordinateChange | Callable[[VariableContext], CoordinateChange]] | None = None,
) -> ReductionTrace:
    """Reduce until one independent variable is left, then take T^n = C.

    Generators combined into a stage's generator are consumed; the others
    travel down as inherited (projected) generators when they stay free of
    the canonical variable.  ``changes`` overrides the automatic canonical
    coordinates of a stage, either directly or as a builder taking the
    stage's context.
    """
    if isinstance(strategy, str):
        strategy = SelectionStrategy(strategy)
    changes = dict(changes or {})
    trace = ReductionTrace(system, T, [])
    pool = list(gens) + _injected(strategy, 1, system.ctx)
    sys_k, T_k = system, T
    stage = 1
    while len(sys_k.ctx.independents) > 1:
        try:
            X, _ = select_associated(T_k, pool, strategy, stage)
        except NoAssociatedGenerator as exc:
            trace.residual_system = sys_k
            trace.diagnostic = f"stage {stage}: {exc}"
            break
        try:
            change = changes.get(stage)
            if callable(change):
                change = change(sys_k.ctx)
            step = reduce_once(sys_k, T_k, X, pool, stage, change=change)
        except (UnsupportedGeneratorError, DegenerateChangeError, ReductionError) as exc:
            trace.residual_system = sys_k
            trace.diagnostic = f"stage {stage}: {exc}"
            break
        trace.steps.append(step)
        consumed = set(X.parts)
        sys_k, T_k = step.reduced_system, step.reduced_T
        stage += 1
        pool = [
            inh.projected for inh in step.inherited if inh.inheritable and not consumed & set(inh.source.parts)
        ] + _injected(strategy, stage, sys_k.ctx)
    else:
        trace.first_integral = first_integral(T_k)
        if not trace.first_integral.verified:
            trace.diagnostic = "total derivative of the first integral does not vanish on the final ODE"
    trace.definitions = back_substitute(trace.steps)
    return trace


__all__ = [
    "COMBO",
    "EXHAUSTIVE",
    "FIRST",
    "ComboSyntaxError",
    "FirstIntegral",
    "NoAssociatedGenerator",
    "NotAssociatedError",
    "ReductionStep",
    "ReductionTrace",
    "SelectionStrategy",
    "UnknownGeneratorError",
    "back_substitute",
    "first_integral",
    "parse_combo",
    "reduce_once",
    "run_pipeline",
    "select_associated",
]
