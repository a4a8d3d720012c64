"""Expression language for w(r, s) and phi(r, s).

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('-')? power
    power  := atom ('^' number)?
    atom   := number | 'r' | 's' | func '(' expr ')' | '(' expr ')'
    func   := sqrt | exp | log | sin | cos

Unary minus binds looser than ``^`` so ``-s^2`` is ``-(s^2)``.  Exponents
are numeric literals (an optional leading ``-`` is accepted); write
``exp(g*log(f))`` for a variable exponent.  There is no implicit
multiplication: ``2s`` is a syntax error.

One tree evaluates over floats, numpy arrays and :class:`~finslerwarp.jets.Jet`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import jets
from .errors import DomainError, NonConstantExponentError, ParseError, SingularDivisionError, UnknownIdentifierError

FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos")
VARIABLES = ("r", "s")
MAX_DEPTH = 100  # parenthesis / call nesting
MAX_TREE_DEPTH = 400  # printing and comparison recurse over the tree


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    def __str__(self):
        return f"-({self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float

    def __str__(self):
        return f"({self.base})^{self.exponent!r}"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def __str__(self):
        return f"{self.func}({self.arg})"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


def variables(e: Expr) -> set:
    """Names of the variables an expression mentions."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return variables(e.operand if isinstance(e, Neg) else e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.left) | variables(e.right)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value or kind == "end":
            raise ParseError(f"expected {value!r}", pos)
        return self.take()

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", pos)
        return e

    def expr(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("expression nested too deeply", self.peek()[2])
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        self.depth -= 1
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.power())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, text, pos = self.peek()
            sign = 1.0
            if text == "-" and kind == "op":
                self.take()
                sign = -1.0
                kind, text, pos = self.peek()
            if kind != "num":
                if kind == "end":
                    raise ParseError("expected exponent", pos)
                raise NonConstantExponentError("exponent must be a number literal", pos)
            self.take()
            return Pow(base, sign * float(text))
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos)
        if text == "(" and kind == "op":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected {text!r}", pos)


def parse(text) -> Expr:
    """Parse ``text`` (str or ASCII bytes) into an expression tree."""
    if isinstance(text, (bytes, bytearray)):
        for off, b in enumerate(text):
            if b > 127:
                raise ParseError("non-ASCII byte", off)
        text = text.decode("ascii")
    if not isinstance(text, str):
        raise ParseError("expression must be a string", 0)
    for off, ch in enumerate(text):
        if ord(ch) > 127:
            raise ParseError("non-ASCII character", len(text[:off].encode("utf-8")))
    if not text.strip():
        raise ParseError("empty expression", 0)
    e = _Parser(text).parse()
    if _tree_depth(e) > MAX_TREE_DEPTH:
        raise ParseError(f"expression tree deeper than {MAX_TREE_DEPTH}", 0)
    return e


def _tree_depth(e) -> int:
    deepest, stack = 0, [(e, 1)]
    while stack:
        node, d = stack.pop()
        deepest = max(deepest, d)
        for child in (getattr(node, k, None) for k in ("left", "right", "operand", "base", "arg")):
            if child is not None:
                stack.append((child, d + 1))
    return deepest


# ---------------------------------------------------------------------------
# evaluation


class _ScalarOps:
    @staticmethod
    def div(a, b, node):
        if b == 0:
            raise SingularDivisionError(f"division by zero in {node}", subexpr=str(node))
        return a / b

    @staticmethod
    def pow(a, p, node):
        if a == 0 and p < 0:
            raise SingularDivisionError(f"division by zero in {node}", subexpr=str(node))
        if a < 0 and not float(p).is_integer():
            raise DomainError(f"non-integer power of negative base in {node}", subexpr=str(node))
        try:
            return a**p
        except OverflowError as exc:
            raise DomainError(f"overflow in {node}", subexpr=str(node)) from exc

    @staticmethod
    def call(func, a, node):
        if func == "sqrt":
            if a < 0:
                raise DomainError(f"sqrt of negative value in {node}", subexpr=str(node))
            return math.sqrt(a)
        if func == "log":
            if a <= 0:
                raise DomainError(f"log of non-positive value in {node}", subexpr=str(node))
            return math.log(a)
        try:
            return getattr(math, func)(a)
        except OverflowError as exc:
            raise DomainError(f"overflow in {node}", subexpr=str(node)) from exc


class _ArrayOps:
    @staticmethod
    def div(a, b, node):
        if np.any(np.asarray(b) == 0):
            raise SingularDivisionError(f"division by zero in {node}", subexpr=str(node))
        return a / b

    @staticmethod
    def pow(a, p, node):
        a = np.asarray(a)
        if a.dtype.kind != "f":
            a = a.astype(float)
        if p < 0 and np.any(a == 0):
            raise SingularDivisionError(f"division by zero in {node}", subexpr=str(node))
        if not float(p).is_integer() and np.any(a < 0):
            raise DomainError(f"non-integer power of negative base in {node}", subexpr=str(node))
        return a**p

    @staticmethod
    def call(func, a, node):
        if func == "sqrt" and np.any(a < 0):
            raise DomainError(f"sqrt of negative value in {node}", subexpr=str(node))
        if func == "log" and np.any(a <= 0):
            raise DomainError(f"log of non-positive value in {node}", subexpr=str(node))
        with np.errstate(over="ignore"):
            return getattr(np, func)(a)


class _JetOps:
    @staticmethod
    def div(a, b, node):
        if not isinstance(a, jets.Jet) and not isinstance(b, jets.Jet):
            return _ScalarOps.div(a, b, node)
        try:
            return a / b
        except SingularDivisionError as exc:
            raise SingularDivisionError(f"division by zero in {node}", subexpr=str(node)) from exc

    @staticmethod
    def pow(a, p, node):
        if not isinstance(a, jets.Jet):
            return _ScalarOps.pow(a, p, node)
        try:
            return jets.jet_apply("pow_real", a, p)
        except (DomainError, SingularDivisionError) as exc:
            raise type(exc)(f"{exc.message} in {node}", subexpr=str(node)) from exc

    @staticmethod
    def call(func, a, node):
        if not isinstance(a, jets.Jet):
            return _ScalarOps.call(func, a, node)
        try:
            return jets.jet_apply(func, a)
        except DomainError as exc:
            raise DomainError(f"{exc.message} in {node}", subexpr=str(node)) from exc


def _evaluate(e, ops, r, s):
    # iterative post-order walk: user trees may be deep
    stack = [(e, False)]
    values = []
    while stack:
        node, done = stack.pop()
        if isinstance(node, Num):
            values.append(node.value)
        elif isinstance(node, Var):
            values.append(r if node.name == "r" else s)
        elif not done:
            stack.append((node, True))
            if isinstance(node, BinOp):
                stack.append((node.right, False))
                stack.append((node.left, False))
            elif isinstance(node, Neg):
                stack.append((node.operand, False))
            elif isinstance(node, Pow):
                stack.append((node.base, False))
            else:
                stack.append((node.arg, False))
        elif isinstance(node, BinOp):
            b = values.pop()
            a = values.pop()
            if node.op == "+":
                values.append(a + b)
            elif node.op == "-":
                values.append(a - b)
            elif node.op == "*":
                values.append(a * b)
            else:
                values.append(ops.div(a, b, node))
        elif isinstance(node, Neg):
            values.append(-values.pop())
        elif isinstance(node, Pow):
            values.append(ops.pow(values.pop(), node.exponent, node))
        else:
            values.append(ops.call(node.func, values.pop(), node))
    return values[0]


def eval_scalar(e: Expr, r: float, s: float) -> float:
    """Evaluate in binary64 at one point."""
    v = _evaluate(e, _ScalarOps, float(r), float(s))
    if not math.isfinite(v):
        raise DomainError(f"non-finite value of {e}", subexpr=str(e))
    return float(v)


def eval_array(e: Expr, r, s, dtype=float):
    """Vectorised evaluation over broadcastable arrays of r and s.

    ``dtype=np.longdouble`` carries the whole evaluation in extended precision.
    """
    r = np.asarray(r, dtype=dtype)
    s = np.asarray(s, dtype=dtype)
    v = _evaluate(e, _ArrayOps, r, s)
    v = np.broadcast_to(np.asarray(v, dtype=dtype), np.broadcast(r, s).shape)
    if not np.all(np.isfinite(v)):
        raise DomainError(f"non-finite value of {e}", subexpr=str(e))
    return np.array(v)


def eval_jet(e: Expr, r0, s0, order: jets.JetOrder = jets.DEFAULT_ORDER) -> jets.Jet:
    """Evaluate with r and s replaced by variable seeds at (r0, s0)."""
    r, s = jets.seed_pair(r0, s0, order)
    return eval_seeded(e, r, s)


def eval_seeded(e: Expr, r: jets.Jet, s: jets.Jet) -> jets.Jet:
    """Evaluate on caller-supplied r and s seed jets."""
    v = _evaluate(e, _JetOps, r, s)
    if not isinstance(v, jets.Jet):
        v = r.constant_like(v)
    if not np.all(np.isfinite(v.coeff)):
        raise DomainError(f"non-finite Taylor coefficients of {e}", subexpr=str(e))
    return v
