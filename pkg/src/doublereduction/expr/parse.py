"""Pratt parser for the expression language.

Binding powers, loosest first::

    + -    (binary)  10
    * /              20
    -      (unary)   30
    ^      (right)   40, exponent must be an integer constant

``D(e, x, y, ...)`` is the repeated total derivative; on a bare dependent
(or one of its jets) it yields the derivative atom, otherwise the total
derivative is expanded at parse time.  ``f(e)``, ``f'(e)``, ``f''(e)`` apply a
declared arbitrary function or its derivatives.  When every independent
variable has a one-letter name, ``u_tx`` abbreviates ``D(u,t,x)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .calculus import derivative, symbol, total_derivatives
from .context import DEPENDENT, FUNCTION, INDEPENDENT, ContextError, VariableContext
from .core import Deriv, Expr, Var, const, exp_, func, ln_


class ParseError(ValueError):
    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        self.text = text
        where = f" at column {pos + 1}" if pos is not None else ""
        super().__init__(f"{message}{where}")


class UndeclaredIdentifier(ParseError):
    def __init__(self, name: str, pos: int | None = None, text: str | None = None):
        self.name = name
        super().__init__(f"undeclared identifier {name!r}", pos, text)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)|(?P<op>[-+*/^(),]))"
)


@dataclass
class Token:
    kind: str  # num, ident, op, end
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY = 30


class _Parser:
    def __init__(self, text: str, ctx: VariableContext):
        self.text = text
        self.ctx = ctx
        self.tokens = tokenize(text)
        self.i = 0
        self.short = all(len(x) == 1 for x in ctx.independents)

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op: str) -> Token:
        tok = self.next()
        if tok.text != op or tok.kind != "op":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ParseError(f"expected {op!r}, found {found}", tok.pos, self.text)
        return tok

    def error(self, msg: str, tok: Token) -> ParseError:
        return ParseError(msg, tok.pos, self.text)

    def parse(self) -> Expr:
        e = self.expr(0)
        tok = self.peek()
        if tok.kind != "end":
            raise self.error(f"unexpected {tok.text!r}", tok)
        return e

    def expr(self, rbp: int) -> Expr:
        left = self.prefix(self.next())
        while True:
            tok = self.peek()
            lbp = _INFIX.get(tok.text, 0) if tok.kind == "op" else 0
            if lbp <= rbp:
                return left
            self.next()
            left = self.infix(tok, left)

    def prefix(self, tok: Token) -> Expr:
        if tok.kind == "num":
            return const(Fraction(tok.text))
        if tok.kind == "op":
            if tok.text == "(":
                e = self.expr(0)
                self.expect(")")
                return e
            if tok.text == "-":
                return -self.expr(_UNARY)
            if tok.text == "+":
                return self.expr(_UNARY)
            raise self.error(f"unexpected {tok.text!r}", tok)
        if tok.kind == "end":
            raise self.error("unexpected end of input", tok)
        return self.identifier(tok)

    def infix(self, tok: Token, left: Expr) -> Expr:
        op = tok.text
        if op == "^":
            right = self.expr(_INFIX["^"] - 1)
            if not right.is_constant or right.constant_value.denominator != 1:
                raise self.error("exponent must be an integer constant", tok)
            try:
                return left ** int(right.constant_value)
            except ZeroDivisionError:
                raise self.error("zero raised to a negative power", tok) from None
        right = self.expr(_INFIX[op])
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if right.is_zero:
            raise self.error("division by zero", tok)
        return left / right

    def identifier(self, tok: Token) -> Expr:
        raw = tok.text
        name = raw.rstrip("'")
        primes = len(raw) - len(name)
        nxt = self.peek()
        calls = nxt.kind == "op" and nxt.text == "("
        if primes and not (calls and self.ctx.kind(name) == FUNCTION):
            raise self.error(f"primes are only allowed on function applications, got {raw!r}", tok)
        if name == "D" and calls:
            return self.derivative_op(tok)
        if name in ("ln", "exp") and calls:
            self.next()
            arg = self.expr(0)
            self.expect(")")
            try:
                return ln_(arg) if name == "ln" else exp_(arg)
            except ValueError as exc:
                raise self.error(str(exc), tok) from None
        kind = self.ctx.kind(name)
        if kind == FUNCTION:
            if not calls:
                raise self.error(f"function {name!r} needs an argument", tok)
            self.next()
            arg = self.expr(0)
            self.expect(")")
            return func(name, arg, primes)
        if kind is not None:
            return symbol(self.ctx, name)
        if "_" in name and self.short:
            base, _, suffix = name.partition("_")
            if self.ctx.kind(base) == DEPENDENT and suffix and all(
                self.ctx.kind(c) == INDEPENDENT for c in suffix
            ):
                return derivative(self.ctx, base, tuple(suffix))
        raise UndeclaredIdentifier(name, tok.pos, self.text)

    def derivative_op(self, tok: Token) -> Expr:
        self.expect("(")
        target = self.expr(0)
        index = []
        while self.peek().text == ",":
            self.next()
            v = self.next()
            if v.kind != "ident":
                raise self.error("expected an independent variable name", v)
            if self.ctx.kind(v.text) is None:
                raise UndeclaredIdentifier(v.text, v.pos, self.text)
            if self.ctx.kind(v.text) != INDEPENDENT:
                raise self.error(f"{v.text!r} is not an independent variable", v)
            index.append(v.text)
        self.expect(")")
        atom = target.as_atom()
        if isinstance(atom, Var):
            raise self.error(f"derivative of non-dependent symbol {atom.name!r}", tok)
        if isinstance(atom, Deriv):
            return derivative(self.ctx, atom.name, atom.index + tuple(index))
        try:
            return total_derivatives(target, index, self.ctx)
        except ContextError as exc:
            raise self.error(str(exc), tok) from None


def parse(text: str, ctx: VariableContext) -> Expr:
    """Parse ``text`` against the declarations in ``ctx``."""
    try:
        return _Parser(text, ctx).parse()
    except ContextError as exc:
        raise ParseError(str(exc), None, text) from None
