"""Expression language for Lagrangians ``L(t, y0, y1, ..., yr)``.

``yi`` stands for the i-th delta derivative of the unknown.  Grammar, loosest
binding first::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-assoc, exponent must be constant
    atom   := NUMBER | 't' | 'y<k>' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | exp | log | sqrt

Evaluation accepts scalars or numpy arrays for the variables, so one tree walk
evaluates a Lagrangian at every node of a grid.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Union

import numpy as np

from .errors import (
    DomainError,
    OrderMismatch,
    ParseError,
    UnboundVariable,
    UnknownIdentifier,
)

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
_VAR_RE = re.compile(r"y(0|[1-9][0-9]*)$")


class Expr:
    """Base of the expression tree.  Nodes are immutable and compare structurally."""

    prec = 5

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    prec = 3


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def prec(self) -> int:
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[self.op]


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr


Number = Union[float, np.ndarray]


# -- printing ---------------------------------------------------------------

def _fmt_const(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 or s.startswith("-") else s


def to_string(e: Expr) -> str:
    """Canonical text form; parsing it back yields an equal tree."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        return f"-({inner})" if e.arg.prec < Neg.prec else f"-{inner}"
    assert isinstance(e, BinOp)
    left, right = to_string(e.left), to_string(e.right)
    if e.op == "^":
        if e.left.prec <= 4:
            left = f"({left})"
        if e.right.prec < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if e.left.prec < e.prec:
        left = f"({left})"
    if e.right.prec <= e.prec:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# -- parsing ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            col = pos + len(src[pos:]) - len(src[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {src[col - 1]!r}", col)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    tokens.append(("end", "", len(src) + 1))
    return tokens


class _Parser:
    def __init__(self, src: str, order: int | None):
        self.tokens = _tokenize(src)
        self.i = 0
        self.order = order

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, val, col = self.take()
        if val != text or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {text!r}, found {what}", col)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, col = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", col)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            col = self.take()[2]
            exponent = self.unary()
            if free_variables(exponent):
                raise ParseError("exponent must be a constant", col + 1)
            base = BinOp("^", base, Const(float(evaluate(exponent, {}))))
        return base

    def atom(self) -> Expr:
        kind, val, col = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val == "t":
                return Var("t")
            m = _VAR_RE.match(val)
            if m is None:
                raise UnknownIdentifier(f"unknown identifier {val!r}", col)
            if self.order is not None and int(m.group(1)) > self.order:
                raise OrderMismatch(
                    f"variable {val} at column {col} exceeds declared order {self.order}"
                )
            return Var(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", col)


def parse_expression(src: str, order: int | None = None) -> Expr:
    """Parse ``src``; with ``order`` given, reject variables ``yk`` with ``k > order``."""
    if not src or not src.strip():
        raise ParseError("empty expression", 1)
    return _Parser(src, order).parse()


# -- evaluation -------------------------------------------------------------

def free_variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Neg, Call)):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


def evaluate(e: Expr, env: Mapping[str, Number]):
    """Evaluate ``e``; variables may be bound to floats or equally-shaped arrays."""
    out = _eval(e, env)
    if np.ndim(out) == 0:
        return float(out)
    return out


eval_expr = evaluate


def _eval(e: Expr, env):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariable(f"variable {e.name!r} is not bound") from None
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, Call):
        x = np.asarray(_eval(e.arg, env), dtype=float)
        if e.fn == "log" and np.any(x <= 0):
            raise DomainError("log of a non-positive value", to_string(e))
        if e.fn == "sqrt" and np.any(x < 0):
            raise DomainError("sqrt of a negative value", to_string(e))
        with np.errstate(over="raise"):
            try:
                return getattr(np, e.fn)(x)
            except FloatingPointError:
                raise DomainError("overflow", to_string(e)) from None
    x = np.asarray(_eval(e.left, env), dtype=float)
    y = np.asarray(_eval(e.right, env), dtype=float)
    op = e.op
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if op == "/":
        if np.any(y == 0):
            raise DomainError("division by zero", to_string(e))
        return x / y
    # power: exponent is a constant
    p = float(y)
    if not float(p).is_integer() and np.any(x < 0):
        raise DomainError("fractional power of a negative value", to_string(e))
    if p < 0 and np.any(x == 0):
        raise DomainError("negative power of zero", to_string(e))
    with np.errstate(over="raise"):
        try:
            return np.power(x, p)
        except FloatingPointError:
            raise DomainError("overflow", to_string(e)) from None


# -- differentiation ----------------------------------------------------------

ZERO, ONE = Const(0.0), Const(1.0)


def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    return BinOp("-", a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(b, Const):
        a, b = b, a
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return BinOp("/", a, b)


def _pow(a: Expr, p: float) -> Expr:
    if p == 0:
        return ONE
    if p == 1:
        return a
    if isinstance(a, Const):
        try:
            return Const(float(evaluate(BinOp("^", a, Const(p)), {})))
        except DomainError:
            pass
    return BinOp("^", a, Const(p))


def fold(e: Expr) -> Expr:
    """Constant-fold without any further simplification."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return _neg(fold(e.arg))
    if isinstance(e, Call):
        arg = fold(e.arg)
        if isinstance(arg, Const):
            try:
                return Const(float(evaluate(Call(e.fn, arg), {})))
            except DomainError:
                pass
        return Call(e.fn, arg)
    left, right = fold(e.left), fold(e.right)
    if e.op == "^":
        return _pow(left, right.value)
    return {"+": _add, "-": _sub, "*": _mul, "/": _div}[e.op](left, right)


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative with respect to ``var``, constant-folded."""
    return fold(_d(e, var))


def _d(e: Expr, v: str) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Neg):
        return _neg(_d(e.arg, v))
    if isinstance(e, Call):
        u, du = e.arg, _d(e.arg, v)
        if du == ZERO:
            return ZERO
        outer = {
            "sin": lambda: Call("cos", u),
            "cos": lambda: _neg(Call("sin", u)),
            "exp": lambda: Call("exp", u),
            "log": lambda: _div(ONE, u),
            "sqrt": lambda: _div(ONE, _mul(Const(2.0), Call("sqrt", u))),
        }[e.fn]()
        return _mul(outer, du)
    a, b = e.left, e.right
    da, db = _d(a, v), _d(b, v)
    if e.op == "+":
        return _add(da, db)
    if e.op == "-":
        return _sub(da, db)
    if e.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if e.op == "/":
        return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, 2.0))
    p = b.value
    return _mul(_mul(Const(p), _pow(a, p - 1.0)), da)


# -- Lagrangians --------------------------------------------------------------

BUILTINS = {
    "quadratic-velocity": ("y1^2", 1),
    "quadratic-acceleration": ("y2^2", 2),
    "harmonic": ("y1^2 - y0^2", 1),
}


def variable_names(r: int) -> list[str]:
    return [f"y{i}" for i in range(r + 1)]


@dataclass(frozen=True, eq=False)
class Lagrangian:
    """``L(t, y0, ..., yr)`` together with its symbolic partials ``dL/dyi``."""

    order: int
    body: Expr
    source: str = ""

    def __post_init__(self):
        if self.order < 1:
            raise OrderMismatch("order must be at least 1")
        allowed = {"t", *variable_names(self.order)}
        extra = free_variables(self.body) - allowed
        if extra:
            raise OrderMismatch(
                f"variables {sorted(extra)} exceed declared order {self.order}"
            )

    @cached_property
    def partials(self) -> tuple[Expr, ...]:
        return tuple(differentiate(self.body, name) for name in variable_names(self.order))

    @cached_property
    def second_partials(self) -> tuple[tuple[Expr, ...], ...]:
        names = variable_names(self.order)
        return tuple(tuple(differentiate(p, n) for n in names) for p in self.partials)

    def _env(self, t, z) -> dict:
        t = np.asarray(t, dtype=float)
        z = np.asarray(z, dtype=float)
        if z.shape[0] != self.order + 1:
            raise ValueError(f"expected {self.order + 1} rows of derivative data")
        env = {"t": t}
        env.update({f"y{i}": z[i] for i in range(self.order + 1)})
        return env

    def _vec(self, e: Expr, env, shape) -> np.ndarray:
        return np.broadcast_to(np.asarray(_eval(e, env), dtype=float), shape).copy()

    def value(self, t, z) -> np.ndarray:
        """L at each column of ``z`` (shape ``(r+1, M)``) with times ``t``."""
        env = self._env(t, z)
        return self._vec(self.body, env, np.shape(t))

    def gradient(self, t, z) -> np.ndarray:
        """``dL/dyi`` stacked into shape ``(r+1, M)``."""
        env = self._env(t, z)
        return np.stack([self._vec(p, env, np.shape(t)) for p in self.partials])

    def hessian(self, t, z) -> np.ndarray:
        """Second partials, shape ``(r+1, r+1, M)``."""
        env = self._env(t, z)
        return np.stack(
            [np.stack([self._vec(q, env, np.shape(t)) for q in row]) for row in self.second_partials]
        )

    def __call__(self, t: float, *u: float) -> float:
        return float(self.value(np.float64(t), np.array(u, dtype=float)))

    def __repr__(self) -> str:
        return f"Lagrangian(order={self.order}, body={to_string(self.body)!r})"


def make_lagrangian(src: str, r: int) -> Lagrangian:
    """Parse ``src`` as a Lagrangian of order ``r``; builtin names are accepted too."""
    if r < 1:
        raise OrderMismatch("order must be at least 1")
    if src in BUILTINS:
        body_src, min_order = BUILTINS[src]
        if r < min_order:
            raise OrderMismatch(f"builtin {src!r} needs order >= {min_order}")
        src = body_src
    lag = Lagrangian(r, parse_expression(src, order=r), src)
    lag.partials
    return lag
