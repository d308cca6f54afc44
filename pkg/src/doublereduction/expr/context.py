"""Variable declarations shared by every expression operation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

INDEPENDENT = "independent-variable"
DEPENDENT = "dependent-variable"
PARAMETER = "parameter"
FUNCTION = "arbitrary-function"

RESERVED = frozenset({"D", "ln", "exp"})


class ContextError(ValueError):
    pass


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str
    # dependents: the independents they depend on; functions: argument names
    signature: tuple[str, ...] = ()


@dataclass(frozen=True)
class VariableContext:
    """Ordered declarations of x^1..x^n, u^1..u^m, parameters and functions.

    The order of ``independents`` is the canonical multi-index order and the
    row/column order of every Jacobian built downstream.  ``depends`` maps a
    dependent to the independents it is a function of; dependents missing
    from the map depend on all of them.
    """

    independents: tuple[str, ...]
    dependents: tuple[str, ...]
    parameters: tuple[str, ...] = ()
    functions: tuple[str, ...] = ()
    signatures: tuple[tuple[str, tuple[str, ...]], ...] = ()
    depends: tuple[tuple[str, tuple[str, ...]], ...] = ()
    _kinds: Mapping[str, str] = field(init=False, repr=False, compare=False, hash=False)
    _position: Mapping[str, int] = field(init=False, repr=False, compare=False, hash=False)
    _args: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        for attr in ("independents", "dependents", "parameters", "functions"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        object.__setattr__(self, "signatures", tuple((k, tuple(v)) for k, v in self.signatures))
        object.__setattr__(self, "depends", tuple((k, tuple(v)) for k, v in self.depends))
        kinds: dict[str, str] = {}
        groups = (
            (self.independents, INDEPENDENT),
            (self.dependents, DEPENDENT),
            (self.parameters, PARAMETER),
            (self.functions, FUNCTION),
        )
        for names, kind in groups:
            for name in names:
                if not name.isidentifier():
                    raise ContextError(f"invalid identifier {name!r}")
                if name in RESERVED:
                    raise ContextError(f"{name!r} is reserved")
                if name in kinds:
                    raise ContextError(f"{name!r} declared twice")
                kinds[name] = kind
        object.__setattr__(self, "_kinds", kinds)
        object.__setattr__(self, "_position", {x: i for i, x in enumerate(self.independents)})
        args = {u: self.independents for u in self.dependents}
        for u, xs in self.depends:
            if u not in args:
                raise ContextError(f"{u!r} is not a dependent variable")
            for x in xs:
                if x not in self._position:
                    raise ContextError(f"{x!r} is not an independent variable")
            args[u] = tuple(sorted(xs, key=self._position.__getitem__))
        object.__setattr__(self, "_args", args)
        for f, sig in self.signatures:
            if self._kinds.get(f) != FUNCTION:
                raise ContextError(f"{f!r} is not a declared function")
            for a in sig:
                if self._kinds.get(a) != DEPENDENT:
                    raise ContextError(f"argument {a!r} of {f!r} is not a dependent variable")

    # lookups -------------------------------------------------------------

    def kind(self, name: str) -> str | None:
        return self._kinds.get(name)

    def symbol(self, name: str) -> Symbol:
        kind = self._kinds.get(name)
        if kind is None:
            raise ContextError(f"undeclared identifier {name!r}")
        if kind == DEPENDENT:
            return Symbol(name, kind, self._args[name])
        if kind == FUNCTION:
            return Symbol(name, kind, dict(self.signatures).get(name, ()))
        return Symbol(name, kind)

    def __contains__(self, name: str) -> bool:
        return name in self._kinds

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._kinds)

    def args_of(self, dependent: str) -> tuple[str, ...]:
        try:
            return self._args[dependent]
        except KeyError:
            raise ContextError(f"{dependent!r} is not a dependent variable") from None

    def sort_index(self, index: Iterable[str]) -> tuple[str, ...]:
        pos = self._position
        try:
            return tuple(sorted(index, key=pos.__getitem__))
        except KeyError as exc:
            raise ContextError(f"{exc.args[0]!r} is not an independent variable") from None

    def replace(self, **changes) -> "VariableContext":
        fields = dict(
            independents=self.independents,
            dependents=self.dependents,
            parameters=self.parameters,
            functions=self.functions,
            signatures=self.signatures,
            depends=self.depends,
        )
        fields.update(changes)
        return VariableContext(**fields)

    def describe(self) -> str:
        deps = " ".join(
            u if self._args[u] == self.independents else f"{u}({','.join(self._args[u])})"
            for u in self.dependents
        )
        parts = [f"vars {' '.join(self.independents)}", f"deps {deps}"]
        if self.parameters:
            parts.append(f"params {' '.join(self.parameters)}")
        if self.functions:
            parts.append(f"funcs {' '.join(self.functions)}")
        return "; ".join(parts)
