"""Canonical coordinates, coordinate changes and the transformation laws.

Conventions (rows/columns follow declaration order of old/new independents):

* ``A_inv[i][k] = D_i x~_k``  (old total derivative of a new variable)
* ``A[i][k]     = D~_i x_k``  (new total derivative of an old variable)
* ``J = det(A)``

Old jets are rewritten through ``D_i = A_inv[i][k] D~_k`` applied to the
inverse map of each dependent variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import matrix
from .conservation import ConservedVector, Equation, PdeSystem, bracket
from .expr import (
    ONE,
    ZERO,
    Atom,
    Deriv,
    Exp,
    Expr,
    Var,
    VariableContext,
    exp_,
    free_names,
    from_atom,
    is_zero,
    jets,
    ln_,
    map_atoms,
    max_order,
    partial,
    symbol,
    total_derivative,
)
from .expr.zero import is_zero_symbolic
from .symmetry import Generator, apply


class UnsupportedGeneratorError(ValueError):
    pass


class DegenerateChangeError(ValueError):
    pass


class IncompleteChangeError(ValueError):
    pass


class NotInheritableError(ValueError):
    pass


# naming ------------------------------------------------------------------------------

_POOLS = (
    (("r", "s", "p", "o", "l"), "q", ("w", "z", "h")),
    (("n", "k", "j", "i", "e"), "m", ("v", "b", "a")),
)


@dataclass(frozen=True)
class CoordinateNames:
    invariants: tuple[str, ...]
    canonical: str
    dependents: tuple[str, ...]


def default_names(ctx: VariableContext, stage: int) -> CoordinateNames:
    """Deterministic fresh names; stages 1 and 2 use r,s,q,w and n,m,v."""
    taken = set(ctx.names)
    n_inv = len(ctx.independents) - 1

    def pick(pool: Sequence[str], count: int, fallback: str) -> list[str]:
        out = []
        for name in pool:
            if len(out) == count:
                break
            if name not in taken:
                out.append(name)
                taken.add(name)
        k = 1
        while len(out) < count:
            name = f"{fallback}{stage}_{k}"
            k += 1
            if name not in taken:
                out.append(name)
                taken.add(name)
        return out

    if 1 <= stage <= len(_POOLS):
        inv_pool, canon, dep_pool = _POOLS[stage - 1]
    else:
        inv_pool, canon, dep_pool = (), f"q{stage}", ()
    invariants = pick(inv_pool, n_inv, "z")
    canonical = pick((canon,), 1, "q")[0]
    dependents = pick(dep_pool, len(ctx.dependents), "w")
    return CoordinateNames(tuple(invariants), canonical, tuple(dependents))


# canonical coordinates -----------------------------------------------------------------


@dataclass(frozen=True)
class CanonicalResult:
    """Similarity variables, the canonical variable q (X = d/dq) and new dependents.

    ``context`` is the reduced context: the invariants as independents and the
    new dependents as functions of the invariants only.
    """

    generator: Generator
    invariants: tuple[tuple[str, Expr], ...]
    canonical_var: tuple[str, Expr]
    dependents: tuple[tuple[str, Expr], ...]
    inverse: Mapping[str, Expr]
    context: VariableContext
    source: VariableContext


def _classify(X: Generator, name: str) -> tuple[str, Expr]:
    ctx = X.ctx
    coeff = X.coefficient(name)
    if coeff.is_zero:
        return "translation", ZERO
    if not any(isinstance(a, Deriv) or (isinstance(a, Var) and a.kind == "indep") for a in coeff.walk_atoms()):
        return "translation", coeff
    ratio = coeff * symbol(ctx, name) ** -1
    if ratio.is_constant:
        return "scaling", ratio
    raise UnsupportedGeneratorError(
        f"{X.name}: coefficient {coeff} of d/d{name} is neither constant nor a constant multiple "
        f"of {name}; supply explicit canonical coordinates with a 'change' line"
    )


def canonical_coordinates(
    X: Generator, names: CoordinateNames | None = None, stage: int = 1
) -> CanonicalResult:
    """Closed-form canonical coordinates for commuting translations and scalings."""
    ctx = X.ctx
    names = names or default_names(ctx, stage)
    kinds = {z: _classify(X, z) for z in ctx.independents + ctx.dependents}
    pivot = next((x for x in ctx.independents if kinds[x][0] == "translation" and not kinds[x][1].is_zero), None)
    if pivot is None:
        pivot = next((x for x in ctx.independents if kinds[x][0] == "scaling"), None)
    if pivot is None:
        raise UnsupportedGeneratorError(f"{X.name}: every xi vanishes; no independent variable can be removed")
    if len(names.invariants) != len(ctx.independents) - 1 or len(names.dependents) != len(ctx.dependents):
        raise ValueError("wrong number of names for the new coordinates")

    kind, c = kinds[pivot]
    x_k = symbol(ctx, pivot)
    q_name = names.canonical
    q_new = Expr.lift(from_atom(Var(q_name, "indep")))
    if kind == "translation":
        q_expr = x_k * c**-1
        inverse = {pivot: c * q_new}
    else:
        q_expr = ln_(x_k) * c**-1
        inverse = {pivot: exp_(c * q_new)}

    def invariant(z: str) -> Expr:
        kind_z, c_z = kinds[z]
        if kind_z == "translation":
            return symbol(ctx, z) - c_z * q_expr
        return symbol(ctx, z) * exp_(-c_z * q_expr)

    def inverse_of(z: str, new: Expr) -> Expr:
        kind_z, c_z = kinds[z]
        if kind_z == "translation":
            return new + c_z * q_new
        return new * exp_(c_z * q_new)

    others = [x for x in ctx.independents if x != pivot][::-1]
    invariants = []
    for name, z in zip(names.invariants, others):
        invariants.append((name, invariant(z)))
        inverse[z] = inverse_of(z, from_atom(Var(name, "indep")))
    dependents = []
    for name, u in zip(names.dependents, ctx.dependents):
        dependents.append((name, invariant(u)))
        inverse[u] = inverse_of(u, from_atom(Deriv(name, ())))

    reduced = _new_context(ctx, [n for n, _ in invariants], [n for n, _ in dependents], None)
    result = CanonicalResult(X, tuple(invariants), (q_name, q_expr), tuple(dependents), inverse, reduced, ctx)
    for name, e in invariants + dependents:
        if not is_zero(apply(X, e), ctx):
            raise AssertionError(f"{name} = {e} is not invariant under {X.name}")  # pragma: no cover
    if not is_zero(apply(X, q_expr) - ONE, ctx):
        raise AssertionError(f"X({q_name}) != 1")  # pragma: no cover
    return result


def _new_context(
    old: VariableContext, independents: list[str], dependents: list[str], depends_on: list[str] | None
) -> VariableContext:
    rename = dict(zip(old.dependents, dependents))
    signatures = tuple((f, tuple(rename.get(a, a) for a in sig)) for f, sig in old.signatures)
    depends = tuple((u, tuple(depends_on)) for u in dependents) if depends_on is not None else ()
    return VariableContext(
        independents=tuple(independents),
        dependents=tuple(dependents),
        parameters=old.parameters,
        functions=old.functions,
        signatures=signatures,
        depends=depends,
    )


# coordinate changes ---------------------------------------------------------------------


@dataclass
class CoordinateChange:
    source: VariableContext
    target: VariableContext  # all new independents (canonical one included)
    new_independents: list[tuple[str, Expr]]
    new_dependents: list[tuple[str, Expr]]
    inverse: dict[str, Expr]
    A: matrix.Matrix
    A_inv: matrix.Matrix  # entries in new variables
    A_inv_old: matrix.Matrix  # entries in old variables
    J: Expr  # new variables
    J_old: Expr
    canonical: str | None = None
    reduced: VariableContext | None = None
    _jets: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.new_independents)

    def definitions(self) -> list[tuple[str, Expr]]:
        return self.new_independents + self.new_dependents

    # rewriting --------------------------------------------------------------------------

    def _jet(self, u: str, index: tuple[str, ...]) -> Expr:
        key = (u, index)
        got = self._jets.get(key)
        if got is None:
            if not index:
                got = self.inverse[u]
            else:
                lower = self._jet(u, index[:-1])
                i = self.source.independents.index(index[-1])
                got = ZERO
                for k, (name, _) in enumerate(self.new_independents):
                    coeff = self.A_inv[i][k]
                    if not coeff.is_zero:
                        got = got + coeff * total_derivative(lower, name, self.target)
            self._jets[key] = got
        return got

    def rewrite(self, e: Expr) -> Expr:
        """Express e (old variables and jets) in the new coordinates."""
        src = self.source

        def leaf(a: Atom) -> Expr | None:
            if isinstance(a, Var):
                if a.kind == "indep":
                    if a.name not in self.inverse:
                        raise IncompleteChangeError(f"no inverse for {a.name!r}")
                    return self.inverse[a.name]
                return None
            if a.name in src.dependents:
                return self._jet(a.name, a.index)
            raise IncompleteChangeError(f"{a} is not a jet of the source system")

        out = map_atoms(e, leaf)
        stray = free_names(out) - set(self.target.names)
        if stray:
            raise IncompleteChangeError(f"old variables {sorted(stray)} survive the change")
        return out

    def to_old(self, e: Expr) -> Expr:
        """Substitute the defining expressions of the new variables (no jets)."""
        defs = {name: d for name, d in self.definitions()}

        def leaf(a: Atom) -> Expr | None:
            if isinstance(a, Var) and a.kind == "indep" and a.name in defs:
                return defs[a.name]
            if isinstance(a, Deriv) and a.name in defs:
                if a.index:
                    raise ValueError("jets of new dependents cannot be mapped back without integration")
                return defs[a.name]
            return None

        return map_atoms(e, leaf)


def _check_point_change(source: VariableContext, defs: Sequence[tuple[str, Expr]]) -> None:
    for name, e in defs:
        if any(isinstance(a, Deriv) for a in e.walk_atoms()):
            raise DegenerateChangeError(f"new independent {name} must depend on old independents only")
        for a in e.walk_atoms():
            if isinstance(a, Var) and a.name not in source:
                raise DegenerateChangeError(f"{name} uses undeclared {a.name!r}")


def make_change(
    source: VariableContext,
    new_independents: Sequence[tuple[str, Expr]],
    new_dependents: Sequence[tuple[str, Expr]],
    inverse: Mapping[str, Expr],
    canonical: str | None = None,
    drop_canonical: bool = True,
) -> CoordinateChange:
    """Build A, A^{-1} and J for an explicit point change with known inverse."""
    new_independents = list(new_independents)
    new_dependents = list(new_dependents)
    if len(new_independents) != len(source.independents):
        raise DegenerateChangeError("a change must keep the number of independent variables")
    if len(new_dependents) != len(source.dependents):
        raise DegenerateChangeError("a change must keep the number of dependent variables")
    _check_point_change(source, new_independents)
    names = [n for n, _ in new_independents]
    dep_names = [n for n, _ in new_dependents]
    clash = (set(names) | set(dep_names)) & set(source.names)
    if clash:
        raise DegenerateChangeError(f"new names {sorted(clash)} already used by the old coordinates")
    full = _new_context(source, names, dep_names, None)
    reduced = None
    if canonical is not None:
        if canonical not in names:
            raise DegenerateChangeError(f"canonical variable {canonical!r} is not a new independent")
        keep = [n for n in names if n != canonical]
        if drop_canonical:
            full = _new_context(source, names, dep_names, keep)
        reduced = _new_context(source, keep, dep_names, keep)
    inverse = {k: Expr.lift(v) for k, v in inverse.items()}
    missing = set(source.independents + source.dependents) - set(inverse)
    if missing:
        raise IncompleteChangeError(f"inverse map lacks {sorted(missing)}")

    def to_new(e: Expr) -> Expr:
        out = map_atoms(e, lambda a: inverse[a.name] if isinstance(a, Var) and a.kind == "indep" else None)
        stray = free_names(out) - set(full.names)
        if stray:
            raise IncompleteChangeError(f"old variables {sorted(stray)} survive the change")
        return out

    a_inv_old = [[total_derivative(d, x, source) for _, d in new_independents] for x in source.independents]
    a_inv = [[to_new(v) for v in row] for row in a_inv_old]
    try:
        a, det_inv = matrix.inverse(a_inv)
    except ZeroDivisionError:
        raise DegenerateChangeError("Jacobian determinant vanishes identically") from None
    if is_zero_symbolic(det_inv):
        raise DegenerateChangeError("Jacobian determinant vanishes identically")
    J = matrix.det(a)
    if not is_zero_symbolic(J * det_inv - ONE):  # pragma: no cover
        raise AssertionError("det(A) * det(A^-1) != 1")
    ident = matrix.matmul(a, a_inv)
    for i, row in enumerate(ident):
        for k, v in enumerate(row):
            if not is_zero_symbolic(v - (ONE if i == k else ZERO)):
                raise DegenerateChangeError("inverse map does not invert the change (A A^-1 != I)")
    J_old = matrix.det(a_inv_old) ** -1
    return CoordinateChange(
        source=source,
        target=full,
        new_independents=new_independents,
        new_dependents=new_dependents,
        inverse=inverse,
        A=a,
        A_inv=a_inv,
        A_inv_old=a_inv_old,
        J=J,
        J_old=J_old,
        canonical=canonical,
        reduced=reduced,
    )


def build_change(cr: CanonicalResult, ctx: VariableContext | None = None, drop_canonical: bool = True) -> CoordinateChange:
    ctx = ctx or cr.source
    if ctx != cr.source:
        raise ValueError("canonical coordinates were computed over a different context")
    indeps = list(cr.invariants) + [cr.canonical_var]
    return make_change(ctx, indeps, cr.dependents, cr.inverse, cr.canonical_var[0], drop_canonical)


def direct_jacobian(ch: CoordinateChange) -> matrix.Matrix:
    """A computed straight from the inverse map: D~_i x_k."""
    return [
        [total_derivative(ch.inverse[x], name, ch.target) for x in ch.source.independents]
        for name, _ in ch.new_independents
    ]


def affine_change(
    source: VariableContext,
    new_independents: Sequence[tuple[str, Expr]],
    new_dependents: Sequence[tuple[str, Expr]],
    canonical: str | None = None,
    drop_canonical: bool = True,
) -> CoordinateChange:
    """Change whose independent part is affine with variable-free coefficients and
    whose dependents are affine in the old dependents; the inverse is solved."""
    xs = source.independents
    olds = [symbol(source, x) for x in xs]
    M, b = [], []
    for name, d in new_independents:
        row = [partial(d, Var(x, "indep")) for x in xs]
        for v in row:
            if any(isinstance(a, Deriv) or (isinstance(a, Var) and a.kind == "indep") for a in v.walk_atoms()):
                raise DegenerateChangeError(f"{name} is not affine in the old independents")
        M.append(row)
        b.append(d - sum((c * o for c, o in zip(row, olds)), ZERO))
    try:
        M_inv, _ = matrix.inverse(M)
    except ZeroDivisionError:
        raise DegenerateChangeError("affine change is singular") from None
    new_vars = [from_atom(Var(name, "indep")) for name, _ in new_independents]
    shifted = [nv - bk for nv, bk in zip(new_vars, b)]
    inverse = {x: e for x, e in zip(xs, matrix.matvec(M_inv, shifted))}

    def old_to_new(e: Expr) -> Expr:
        return map_atoms(e, lambda a: inverse[a.name] if isinstance(a, Var) and a.kind == "indep" else None)

    for (wname, d), u in zip(new_dependents, source.dependents):
        u_atom = Deriv(u, ())
        coeff = partial(d, u_atom)
        rest = d - coeff * from_atom(u_atom)
        if jets(rest) or jets(coeff):
            raise DegenerateChangeError(f"{wname} must be affine in {u}")
        inverse[u] = (from_atom(Deriv(wname, ())) - old_to_new(rest)) * old_to_new(coeff) ** -1
    return make_change(source, new_independents, new_dependents, inverse, canonical, drop_canonical)


# transformation laws -----------------------------------------------------------------------


def _strip_canonical(e: Expr, q: str) -> Expr:
    """Divide out a common monomial factor carrying the canonical variable."""
    if not e.terms:
        return e
    first = next(iter(e.terms))
    factor = ONE
    for a, p in first:
        if isinstance(a, Exp) and q in free_names(a.arg):
            factor = factor * from_atom(a) ** -p
    lows = None
    for m in e.terms:
        power = dict(m).get(Var(q, "indep"), 0)
        lows = power if lows is None else min(lows, power)
    if lows:
        factor = factor * from_atom(Var(q, "indep")) ** -lows
    return e * factor


def choose_leading(lhs: Expr, ctx: VariableContext, prefer: str | None = None) -> Deriv:
    """Pick a top-order jet that occurs linearly, preferring pure derivatives and
    monomial coefficients so the solved form stays exact and substitution terminates."""
    top = max_order(lhs)
    candidates = []
    for a in jets(lhs):
        if a.order != top or a.order == 0 or a not in lhs.atoms():
            continue
        coeff = partial(lhs, a)
        if any(x == a for x in coeff.walk_atoms()):
            continue
        if any(isinstance(x, Deriv) and x.order >= top for x in coeff.walk_atoms()):
            continue
        pure = len(set(a.index)) == 1
        rank = (
            a.name != prefer if prefer else False,
            not pure,
            not coeff.is_monomial,
            ctx.independents.index(a.index[0]),
            a.key,
        )
        candidates.append((rank, a))
    if not candidates:
        raise ValueError(f"no jet occurs linearly at top order in {lhs}")
    return min(candidates, key=lambda t: t[0])[1]


def transform_system(system: PdeSystem, ch: CoordinateChange) -> PdeSystem:
    """The system in new coordinates; canonical-variable factors are divided out."""
    equations = []
    rename = dict(zip(ch.source.dependents, ch.target.dependents))
    for eq in system.equations:
        lhs = ch.rewrite(eq.lhs)
        if ch.canonical is not None:
            lhs = _strip_canonical(lhs, ch.canonical)
        equations.append(Equation(lhs, choose_leading(lhs, ch.target, rename.get(eq.leading.name))))
    return PdeSystem(tuple(equations), ch.target)


def restrict_system(system: PdeSystem, ctx: VariableContext) -> PdeSystem:
    """Re-home a system whose expressions do not involve the dropped variable."""
    for eq in system.equations:
        stray = free_names(eq.lhs) - set(ctx.names)
        if stray:
            raise IncompleteChangeError(f"reduced equation still involves {sorted(stray)}: {eq.lhs}")
    return PdeSystem(system.equations, ctx)


def transform_conserved(T: ConservedVector, ch: CoordinateChange, system: PdeSystem | None = None) -> ConservedVector:
    """T~ = J (A^{-1})^T T with everything rewritten in the new coordinates."""
    Ts = [ch.rewrite(c) for c in T.components]
    comps = [ch.J * c for c in matrix.matvec(matrix.transpose(ch.A_inv), Ts)]
    return ConservedVector(tuple(comps), system or transform_system(T.system, ch))


def transform_conserved_rowrep(T: ConservedVector, ch: CoordinateChange, system: PdeSystem | None = None) -> ConservedVector:
    """T~^i = det(A with row i replaced by [T^1..T^n]), A taken from the inverse map."""
    A = direct_jacobian(ch)
    Ts = [ch.rewrite(c) for c in T.components]
    comps = [matrix.det(matrix.replace_row(A, i, Ts)) for i in range(ch.n)]
    return ConservedVector(tuple(comps), system or transform_system(T.system, ch))


def transformed_bracket(T: ConservedVector, X: Generator, ch: CoordinateChange) -> list[Expr]:
    """X(T~) via J (A^{-1})^T [T, X], in the new coordinates."""
    br = [ch.rewrite(c) for c in bracket(T, X)]
    return [ch.J * c for c in matrix.matvec(matrix.transpose(ch.A_inv), br)]


@dataclass(frozen=True)
class Inherited:
    source: Generator
    full: Generator | None
    projected: Generator | None
    inheritable: bool
    reason: str = ""


def transform_generator(Y: Generator, ch: CoordinateChange, project: bool = True) -> Inherited:
    """Push Y forward: xi~^k = Y(x~^k), eta~ = Y(u~), rewritten in new coordinates."""
    try:
        xi = {name: ch.rewrite(apply(Y, d)) for name, d in ch.new_independents}
        eta = {name: ch.rewrite(apply(Y, d)) for name, d in ch.new_dependents}
    except IncompleteChangeError as exc:
        return Inherited(Y, None, None, False, str(exc))
    full_ctx = ch.target.replace(depends=())
    full = Generator(Y.name, full_ctx, xi, eta, Y.parts)
    if not project or ch.canonical is None:
        return Inherited(Y, full, full, True)
    q = ch.canonical
    kept = {k: v for k, v in xi.items() if k != q}
    for label, coeff in list(kept.items()) + list(eta.items()):
        if q in free_names(coeff):
            return Inherited(Y, full, None, False, f"coefficient of d/d{label} depends on {q}: {coeff}")
    projected = Generator(Y.name, ch.reduced, kept, eta, Y.parts)
    return Inherited(Y, full, projected, True)


# identity checks used by tests and the verify command ---------------------------------------


def transport_residual(T: ConservedVector, Tt: ConservedVector, ch: CoordinateChange) -> Expr:
    """J D_i T^i - D~_i T~^i, in new coordinates; zero identically."""
    from .conservation import divergence

    lhs = ch.J * ch.rewrite(divergence(T.components, ch.source))
    return lhs - divergence(Tt.components, ch.target)


def chain_rule_residuals(h: Expr, ch: CoordinateChange) -> list[Expr]:
    """D~_i h - A[i][k] D_k h for each new independent i."""
    h_new = ch.rewrite(h)
    grads = [ch.rewrite(total_derivative(h, x, ch.source)) for x in ch.source.independents]
    out = []
    for i, (name, _) in enumerate(ch.new_independents):
        rhs = sum((ch.A[i][k] * g for k, g in enumerate(grads)), ZERO)
        out.append(total_derivative(h_new, name, ch.target) - rhs)
    return out


def identity_change(ctx: VariableContext, suffix: str = "1") -> CoordinateChange:
    """x~ = x under fresh names (useful as a neutral element in tests)."""
    indeps = [(f"{x}{suffix}", symbol(ctx, x)) for x in ctx.independents]
    deps = [(f"{u}{suffix}", symbol(ctx, u)) for u in ctx.dependents]
    inverse = {x: from_atom(Var(f"{x}{suffix}", "indep")) for x in ctx.independents}
    inverse.update({u: from_atom(Deriv(f"{u}{suffix}", ())) for u in ctx.dependents})
    return make_change(ctx, indeps, deps, inverse)


__all__ = [
    "CanonicalResult",
    "CoordinateChange",
    "CoordinateNames",
    "DegenerateChangeError",
    "IncompleteChangeError",
    "Inherited",
    "NotInheritableError",
    "UnsupportedGeneratorError",
    "affine_change",
    "build_change",
    "canonical_coordinates",
    "chain_rule_residuals",
    "choose_leading",
    "default_names",
    "direct_jacobian",
    "identity_change",
    "make_change",
    "restrict_system",
    "transform_conserved",
    "transform_conserved_rowrep",
    "transform_generator",
    "transform_system",
    "transformed_bracket",
    "transport_residual",
]
