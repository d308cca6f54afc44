"""Line-oriented problem files.

One declaration per line, ``#`` starts a comment::

    vars t x y
    deps u
    params c1 c2
    funcs f(u) g(u)
    pde lead=D(u,t,t): D(u,t,t) - D(f(u)*D(u,x), x) - D(g(u)*D(u,y), y)
    conserved -D(u,t) ; f(u)*D(u,x) ; g(u)*D(u,y)
    sym X1: xi_t=1
    strategy combo: X1 + c1*X2 + c2*X3

Optional extras: ``sym@2 Y: xi_n=n`` injects a generator (written in the
stage-2 variables) into the stage-2 pool; ``change stage=1 canonical=q: r = ...,
q = t, w = u`` together with ``inverse stage=1: t = q, ...`` replaces the
automatic canonical coordinates of that stage.  Without an ``inverse`` line the
change must be affine and is inverted automatically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .conservation import ConservedVector, Equation, PdeSystem, ReductionError
from .coordinates import CoordinateChange, affine_change, choose_leading, make_change
from .expr import Deriv, Expr, ParseError, UndeclaredIdentifier, VariableContext, jets, parse
from .expr.context import ContextError
from .pipeline import STRATEGIES, SelectionStrategy
from .symmetry import Generator, GeneratorError, generator_from_coefficients

BUNDLED = ("wave2p1",)
REQUIRED = ("vars", "deps", "pde", "conserved")
DECLARATIONS = ("vars", "deps", "params", "funcs")


class ProblemError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<problem>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass
class ChangeSpec:
    """A user-supplied change for one stage, kept as text until that stage's
    variables are known."""

    stage: int
    canonical: str | None
    definitions: list[tuple[str, str, int]]
    inverse: list[tuple[str, str, int]] = field(default_factory=list)
    source: str = "<problem>"

    def build(self, ctx: VariableContext) -> CoordinateChange:
        indeps, deps = [], []
        for name, text, line in self.definitions:
            e = _expr(text, ctx, line, self.source)
            (deps if jets(e) else indeps).append((name, e))
        if not self.inverse:
            try:
                return affine_change(ctx, indeps, deps, self.canonical)
            except ValueError as exc:
                raise ProblemError(f"change: {exc}", self.definitions[0][2], self.source) from None
        new_ctx = VariableContext(
            independents=tuple(n for n, _ in indeps),
            dependents=tuple(n for n, _ in deps),
            parameters=ctx.parameters,
            functions=ctx.functions,
        )
        inverse = {name: _expr(text, new_ctx, line, self.source) for name, text, line in self.inverse}
        try:
            return make_change(ctx, indeps, deps, inverse, self.canonical)
        except ValueError as exc:
            raise ProblemError(f"change: {exc}", self.inverse[0][2], self.source) from None


@dataclass
class Problem:
    ctx: VariableContext
    system: PdeSystem
    conserved: ConservedVector
    generators: list[Generator]
    strategy: SelectionStrategy | None = None
    changes: dict[int, ChangeSpec] = field(default_factory=dict)
    source: str = "<problem>"

    def generator(self, name: str) -> Generator:
        for g in self.generators:
            if g.name == name:
                return g
        from .pipeline import UnknownGeneratorError

        raise UnknownGeneratorError(name)

    def summary(self) -> dict[str, int]:
        c = self.ctx
        return {
            "independents": len(c.independents),
            "dependents": len(c.dependents),
            "parameters": len(c.parameters),
            "functions": len(c.functions),
            "generators": len(self.generators),
        }


def _expr(text: str, ctx: VariableContext, line: int, source: str) -> Expr:
    try:
        return parse(text, ctx)
    except UndeclaredIdentifier as exc:
        raise ProblemError(f"undeclared identifier {exc.name!r} in {text.strip()!r}", line, source) from None
    except ParseError as exc:
        raise ProblemError(f"{exc} in {text.strip()!r}", line, source) from None


_FUNC = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\(([^)]*)\)$")


def _options(text: str) -> dict[str, str]:
    return dict(item.partition("=")[::2] for item in text.split())


def _assignments(body: str, line: int, source: str) -> list[tuple[str, str]]:
    out, pieces = [], []
    depth, start = 0, 0
    for i, ch in enumerate(body):
        depth += ch == "("
        depth -= ch == ")"
        if ch == "," and depth == 0:
            pieces.append(body[start:i])
            start = i + 1
    pieces.append(body[start:])
    for piece in pieces:
        if not piece.strip():
            continue
        name, eq, value = piece.partition("=")
        if not eq or not name.strip() or not value.strip():
            raise ProblemError(f"expected 'name = expression', got {piece.strip()!r}", line, source)
        out.append((name.strip(), value.strip()))
    return out


def loads(text: str, source: str = "<problem>") -> Problem:
    decl: dict[str, list] = {"vars": [], "deps": [], "params": [], "funcs": []}
    signatures: list[tuple[str, tuple[str, ...]]] = []
    seen: set[str] = set()
    ctx: VariableContext | None = None
    pdes, conserved, gens, injected = [], None, [], {}
    strategy = None
    changes: dict[int, ChangeSpec] = {}
    pending_inverse: dict[int, list] = {}

    def context(line: int) -> VariableContext:
        nonlocal ctx
        if ctx is None:
            try:
                ctx = VariableContext(
                    independents=tuple(decl["vars"]),
                    dependents=tuple(decl["deps"]),
                    parameters=tuple(decl["params"]),
                    functions=tuple(decl["funcs"]),
                    signatures=tuple(signatures),
                )
            except ContextError as exc:
                raise ProblemError(str(exc), line, source) from None
        return ctx

    for lineno, raw in enumerate(text.splitlines(), 1):
        body_line = raw.split("#", 1)[0].strip()
        if not body_line:
            continue
        rest = body_line.partition(" ")[2]
        keyword = re.match(r"[A-Za-z]*", body_line).group(0)
        if keyword in DECLARATIONS:
            if ctx is not None:
                raise ProblemError(f"'{keyword}' must come before any equation, conserved vector or generator", lineno, source)
            names = rest.split()
            if not names:
                raise ProblemError(f"'{keyword}' needs at least one name", lineno, source)
            for name in names:
                if keyword == "funcs":
                    m = _FUNC.match(name)
                    if not m:
                        raise ProblemError(f"function declarations look like f(u), got {name!r}", lineno, source)
                    name, args = m.group(1), tuple(a.strip() for a in m.group(2).split(",") if a.strip())
                    for a in args:
                        if a not in decl["deps"] and a not in decl["vars"]:
                            raise ProblemError(f"argument {a!r} of {name} is not a declared variable", lineno, source)
                    signatures.append((name, args))
                if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                    raise ProblemError(f"bad identifier {name!r}", lineno, source)
                if name in seen:
                    raise ProblemError(f"{name!r} declared twice", lineno, source)
                seen.add(name)
                decl[keyword].append(name)
            continue

        if keyword == "pde":
            c = context(lineno)
            m = re.match(r"^pde(?:\s+lead=(?P<lead>.+?))?\s*:\s*(?P<body>.+)$", body_line)
            if not m:
                raise ProblemError("expected 'pde lead=D(u,...): expression'", lineno, source)
            lhs = _expr(m.group("body"), c, lineno, source)
            if m.group("lead"):
                lead_e = _expr(m.group("lead"), c, lineno, source)
                lead = lead_e.as_atom()
                if not isinstance(lead, Deriv):
                    raise ProblemError(f"lead must be a single derivative, got {m.group('lead')!r}", lineno, source)
            else:
                try:
                    lead = choose_leading(lhs, c)
                except ValueError as exc:
                    raise ProblemError(str(exc), lineno, source) from None
            pdes.append((Equation(lhs, lead), lineno))
        elif keyword == "conserved":
            c = context(lineno)
            if conserved is not None:
                raise ProblemError("only one conserved vector per problem", lineno, source)
            parts = [p for p in rest.split(";")]
            if len(parts) != len(c.independents):
                raise ProblemError(
                    f"conserved vector needs {len(c.independents)} components separated by ';', got {len(parts)}",
                    lineno,
                    source,
                )
            conserved = ([_expr(p, c, lineno, source) for p in parts], lineno)
        elif keyword == "sym":
            c = context(lineno)
            m = re.match(r"^sym(?:@(?P<stage>\d+))?\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*:\s*(?P<body>.*)$", body_line)
            if not m:
                raise ProblemError("expected 'sym NAME: xi_t = ..., eta_u = ...'", lineno, source)
            assigns = _assignments(m.group("body"), lineno, source)
            name = m.group("name")
            if m.group("stage") and int(m.group("stage")) > 1:
                injected.setdefault(int(m.group("stage")), []).append((name, dict(assigns)))
                continue
            if any(g.name == name for g in gens):
                raise ProblemError(f"generator {name!r} declared twice", lineno, source)
            coeffs = {}
            for label, value in assigns:
                coeffs[label] = _expr(value, c, lineno, source)
            try:
                gens.append(generator_from_coefficients(name, c, coeffs))
            except GeneratorError as exc:
                raise ProblemError(str(exc), lineno, source) from None
        elif keyword == "strategy":
            m = re.match(r"^strategy\s+(?P<kind>[a-z]+)\s*(?::\s*(?P<combo>.+))?$", body_line)
            if not m or m.group("kind") not in STRATEGIES:
                raise ProblemError(f"strategy must be one of {', '.join(STRATEGIES)}", lineno, source)
            strategy = (m.group("kind"), m.group("combo"), lineno)
        elif keyword in ("change", "inverse"):
            context(lineno)
            m = re.match(rf"^{keyword}(?P<opts>(?:\s+[a-z]+=[^\s:]+)*)\s*:\s*(?P<body>.+)$", body_line)
            if not m:
                raise ProblemError(f"expected '{keyword} stage=K ...: name = expression, ...'", lineno, source)
            opts = _options(m.group("opts"))
            unknown = set(opts) - {"stage", "canonical"}
            if unknown:
                raise ProblemError(f"unknown option(s) {sorted(unknown)}", lineno, source)
            stage = int(opts.get("stage", "1"))
            items = [(n, v, lineno) for n, v in _assignments(m.group("body"), lineno, source)]
            if keyword == "change":
                if stage in changes:
                    raise ProblemError(f"two changes for stage {stage}", lineno, source)
                changes[stage] = ChangeSpec(stage, opts.get("canonical"), items, source=source)
            else:
                pending_inverse.setdefault(stage, []).extend(items)
        else:
            raise ProblemError(f"unknown keyword {keyword!r}", lineno, source)

    present = {"vars": decl["vars"], "deps": decl["deps"], "pde": pdes, "conserved": conserved}
    missing = [s for s in REQUIRED if not present[s]]
    if missing:
        raise ProblemError(f"missing required section(s): {', '.join(missing)}", None, source)
    for stage, items in pending_inverse.items():
        if stage not in changes:
            raise ProblemError(f"inverse given for stage {stage} without a change", items[0][2], source)
        changes[stage].inverse = items
    c = context(0)
    try:
        system = PdeSystem(tuple(eq for eq, _ in pdes), c)
        system.solved()
    except ReductionError as exc:
        raise ProblemError(str(exc), pdes[0][1], source) from None
    comps, _ = conserved
    T = ConservedVector(tuple(comps), system)
    strat = None
    if strategy is not None or injected:
        kind, combo, line = strategy or ("first", None, None)
        try:
            strat = SelectionStrategy(kind, combo, injected)
        except ValueError as exc:
            raise ProblemError(str(exc), line, source) from None
    return Problem(c, system, T, gens, strat, changes, source)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files(__package__).joinpath("data", f"{name}.problem")))


def load(path: str | Path) -> Problem:
    """Read a problem file; a bare bundled name such as ``wave2p1`` also works."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemError(f"cannot read problem file: {exc.strerror}", None, str(path)) from None
    return loads(text, str(path))


__all__ = ["BUNDLED", "ChangeSpec", "Problem", "ProblemError", "bundled_path", "load", "loads"]
