"""Randomized numeric verification of symbolic identities.

Dependents are bound to random multivariate polynomials, arbitrary functions
to random univariate polynomials, parameters to random rationals, and the
point is drawn from [-2, 2]^n.  Jets are evaluated by differentiating the
bound polynomials directly, so nothing here goes through the symbolic
total-derivative code being checked.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable

from .expr.calculus import max_order
from .expr.context import VariableContext
from .expr.core import Expr, Func
from .expr.numeric import SingularPoint, UnboundSymbol, Value, eval_numeric

TOLERANCE = 1e-9


class Poly:
    """Multivariate polynomial with rational coefficients over named variables."""

    def __init__(self, names: tuple[str, ...], coeffs: dict[tuple[int, ...], Fraction]):
        self.names = tuple(names)
        self.coeffs = {k: Fraction(v) for k, v in coeffs.items() if v}

    def diff(self, name: str) -> "Poly":
        if name not in self.names:
            return Poly(self.names, {})
        i = self.names.index(name)
        out = {}
        for exps, c in self.coeffs.items():
            if exps[i]:
                new = list(exps)
                new[i] -= 1
                out[tuple(new)] = c * exps[i]
        return Poly(self.names, out)

    def __call__(self, point: dict[str, Value]) -> Value:
        xs = [point[n] for n in self.names]
        total: Value = Fraction(0)
        for exps, c in self.coeffs.items():
            term: Value = c
            for x, k in zip(xs, exps):
                if k:
                    term = term * x**k
            total = total + term
        return total


def _univariate(coeffs: list[Fraction], order: int, x: Value) -> Value:
    cs = list(coeffs)
    for _ in range(order):
        cs = [c * k for k, c in enumerate(cs)][1:]
    total: Value = Fraction(0)
    for c in reversed(cs):
        total = total * x + c
    return total


@dataclass
class NumericBinding:
    dependent_bindings: dict[str, Poly]
    function_bindings: dict[str, list[Fraction]]
    parameter_values: dict[str, Value]
    point: dict[str, Value]
    seed: int = 0
    _jets: dict = field(default_factory=dict, repr=False)

    def value_of(self, name: str) -> Value:
        if name in self.point:
            return self.point[name]
        if name in self.parameter_values:
            return self.parameter_values[name]
        raise UnboundSymbol(name)

    def jet(self, name: str, index: tuple[str, ...]) -> Value:
        key = (name, index)
        if key not in self._jets:
            try:
                poly = self.dependent_bindings[name]
            except KeyError:
                raise UnboundSymbol(name) from None
            for x in index:
                poly = poly.diff(x)
            self._jets[key] = poly(self.point)
        return self._jets[key]

    def function(self, name: str, order: int, x: Value) -> Value:
        try:
            coeffs = self.function_bindings[name]
        except KeyError:
            raise UnboundSymbol(name) from None
        return _univariate(coeffs, order, x)


def _rational(rng: random.Random, bound: int = 8, denom: int = 4) -> Fraction:
    return Fraction(rng.randint(-bound * denom, bound * denom), denom)


def _point_value(rng: random.Random) -> Fraction:
    # dyadic, so float conversion is exact
    return Fraction(rng.randint(-128, 128), 64)


def random_binding(
    ctx: VariableContext,
    rng: random.Random,
    degree: int = 4,
    function_degree: int = 3,
    seed: int = 0,
) -> NumericBinding:
    deps = {}
    for u in ctx.dependents:
        names = ctx.args_of(u)
        coeffs = {}
        for exps in product(range(degree + 1), repeat=len(names)):
            if sum(exps) <= degree:
                coeffs[exps] = _rational(rng)
        deps[u] = Poly(names, coeffs)
    funcs = {f: [_rational(rng) for _ in range(function_degree + 1)] for f in ctx.functions}
    params = {p: _point_value(rng) for p in ctx.parameters}
    point = {x: _point_value(rng) for x in ctx.independents}
    return NumericBinding(deps, funcs, params, point, seed)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    max_abs_residual: float
    evaluated: int
    inconclusive: bool = False

    def __bool__(self) -> bool:
        return self.passed


def _degrees(e: Expr) -> tuple[int, int]:
    order = max_order(e)
    primes = max((a.order for a in e.walk_atoms() if isinstance(a, Func)), default=0)
    return max(4, order + 1), max(3, primes + 1)


def verify_zero(
    e: Expr,
    ctx: VariableContext,
    samples: int = 20,
    seed: int = 0,
    tol: float = TOLERANCE,
) -> Verdict:
    """Evaluate e at ``samples`` random bindings; pass iff every |value| <= tol.

    Singular draws are redrawn.  If no draw is usable the verdict is
    inconclusive, which never counts as a pass.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    degree, fdegree = _degrees(e)
    rng = random.Random(seed)
    worst = 0.0
    done = 0
    attempts = 0
    while done < samples and attempts < 20 * samples:
        attempts += 1
        binding = random_binding(ctx, rng, degree, fdegree, seed)
        try:
            value = eval_numeric(e, binding)
        except SingularPoint:
            continue
        except OverflowError:
            continue
        worst = max(worst, abs(float(value)))
        done += 1
    if done == 0:
        return Verdict(False, float("nan"), 0, inconclusive=True)
    return Verdict(worst <= tol, worst, done)


def verify_equal(a: Expr, b: Expr, ctx: VariableContext, samples: int = 20, seed: int = 0,
                 tol: float = TOLERANCE) -> Verdict:
    return verify_zero(a - b, ctx, samples, seed, tol)


def verify_all_zero(exprs: Iterable[Expr], ctx: VariableContext, samples: int = 20, seed: int = 0,
                    tol: float = TOLERANCE) -> Verdict:
    """Combined verdict over several expressions (worst residual, all must pass)."""
    verdicts = [verify_zero(e, ctx, samples, seed + i, tol) for i, e in enumerate(exprs)]
    if not verdicts:
        return Verdict(True, 0.0, 0)
    worst = max((v.max_abs_residual for v in verdicts if not v.inconclusive), default=float("nan"))
    return Verdict(
        all(v.passed for v in verdicts),
        worst,
        min(v.evaluated for v in verdicts),
        inconclusive=any(v.inconclusive for v in verdicts),
    )
