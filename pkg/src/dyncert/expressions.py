"""Tiny arithmetic expression language for user-supplied structures.

Grammar (infix, left-associative, ``^`` right-associative):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Variables are ``x1..xn`` and ``p1..pn``; functions are exp, log, sin, cos,
sqrt and pow; constants pi and e.  Compiled expressions evaluate on floats
or jets, so parsed fields and integrals are differentiable.
"""

from __future__ import annotations

import math
import re
from typing import Callable

from . import jets
from .core import IntegrabilityStructure, ScalarField, VectorField

__all__ = ["ExpressionError", "parse_expression", "structure_from_dict"]


class ExpressionError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
                    r"|([A-Za-z_][A-Za-z_0-9]*)"
                    r"|(\*\*)"
                    r"|([-+*/^(),]))")

_FUNCTIONS: dict[str, Callable] = {
    "exp": jets.exp,
    "log": jets.log,
    "sin": jets.sin,
    "cos": jets.cos,
    "sqrt": jets.sqrt,
    "pow": jets.power,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"bad character at position {pos}: "
                                  f"{text[pos:pos + 10]!r}")
        number, name, dstar, op = m.groups()
        if number is not None:
            tokens.append(m.group(0).strip())
        elif name is not None:
            tokens.append(name)
        elif dstar is not None:
            tokens.append("^")
        else:
            tokens.append(op)
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of expression")
        if expected is not None and tok != expected:
            raise ExpressionError(f"expected {expected!r}, got {tok!r}")
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.peek() is not None:
            raise ExpressionError(f"trailing input near {self.peek()!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            node = (("add" if op == "+" else "sub"), node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.factor()
            node = (("mul" if op == "*" else "div"), node, rhs)
        return node

    def factor(self):
        if self.peek() == "-":
            self.take()
            return ("neg", self.factor())
        if self.peek() == "+":
            self.take()
            return self.factor()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.take()
            return ("pow", base, self.factor())
        return base

    def atom(self):
        tok = self.take()
        if tok == "(":
            node = self.expr()
            self.take(")")
            return node
        if re.fullmatch(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?", tok):
            return ("num", float(tok))
        if re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok):
            if self.peek() == "(":
                self.take("(")
                args = [self.expr()]
                while self.peek() == ",":
                    self.take(",")
                    args.append(self.expr())
                self.take(")")
                if tok not in _FUNCTIONS:
                    raise ExpressionError(f"unknown function {tok!r}")
                return ("call", tok, tuple(args))
            if tok in _CONSTANTS:
                return ("num", _CONSTANTS[tok])
            return ("var", tok)
        raise ExpressionError(f"unexpected token {tok!r}")


def _check_vars(node, dim: int, momentum: bool):
    kind = node[0]
    if kind == "var":
        m = re.fullmatch(r"([xp])(\d+)", node[1])
        if not m or (m.group(1) == "p" and not momentum):
            raise ExpressionError(f"unknown variable {node[1]!r}")
        idx = int(m.group(2))
        if not 1 <= idx <= dim:
            raise ExpressionError(
                f"variable {node[1]!r} out of range for dimension {dim}")
    elif kind == "call":
        for a in node[2]:
            _check_vars(a, dim, momentum)
    elif kind in ("add", "sub", "mul", "div", "pow"):
        _check_vars(node[1], dim, momentum)
        _check_vars(node[2], dim, momentum)
    elif kind == "neg":
        _check_vars(node[1], dim, momentum)


def _evaluate(node, env: dict):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return env[node[1]]
    if kind == "neg":
        return -_evaluate(node[1], env)
    if kind == "add":
        return _evaluate(node[1], env) + _evaluate(node[2], env)
    if kind == "sub":
        return _evaluate(node[1], env) - _evaluate(node[2], env)
    if kind == "mul":
        return _evaluate(node[1], env) * _evaluate(node[2], env)
    if kind == "div":
        return _evaluate(node[1], env) / _evaluate(node[2], env)
    if kind == "pow":
        return jets.power(_evaluate(node[1], env), _evaluate(node[2], env))
    if kind == "call":
        return _FUNCTIONS[node[1]](*[_evaluate(a, env) for a in node[2]])
    raise ExpressionError(f"bad node {kind!r}")


def parse_expression(text: str, dim: int,
                     momentum: bool = False) -> Callable:
    """Compile an expression over x1..xn (and p1..pn when ``momentum``)
    into a callable on points."""
    node = _Parser(_tokenize(text)).parse()
    half = dim // 2 if momentum else dim
    _check_vars(node, half, momentum)

    def ev(point):
        env = {}
        if momentum:
            for i in range(half):
                env[f"x{i + 1}"] = point[i]
                env[f"p{i + 1}"] = point[half + i]
        else:
            for i in range(dim):
                env[f"x{i + 1}"] = point[i]
        return _evaluate(node, env)

    return ev


def structure_from_dict(data: dict) -> IntegrabilityStructure:
    """Build a structure from {dim, fields: [[expr, ...], ...],
    integrals: [expr, ...], momentum: bool}."""
    try:
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError) as err:
        raise ExpressionError("structure file needs an integer 'dim'") from err
    momentum = bool(data.get("momentum", False))
    fields = []
    for i, comps in enumerate(data.get("fields", [])):
        if len(comps) != dim:
            raise ExpressionError(
                f"field {i + 1} has {len(comps)} components, expected {dim}")
        evs = [parse_expression(c, dim, momentum) for c in comps]

        def ev(x, _evs=tuple(evs)):
            return [e(x) for e in _evs]

        fields.append(VectorField(dim=dim, func=ev, name=f"X{i + 1}"))
    integrals = []
    for i, expr in enumerate(data.get("integrals", [])):
        ev = parse_expression(expr, dim, momentum)
        integrals.append(ScalarField(dim=dim, func=ev, name=f"F{i + 1}"))
    return IntegrabilityStructure(dim=dim, fields=tuple(fields),
                                  integrals=tuple(integrals))
