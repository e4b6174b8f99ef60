"""Small expression language for analytic functions of one complex variable.

Grammar (whitespace ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := atom ('^' signed_int)?
    atom    := number | complex | 'lambda' | 'pi' | func '(' expr ')' | '(' expr ')'
    complex := '(' number ',' number ')'
    func    := 'exp' | 'sin' | 'cos' | 'log'

Exponents are integer literals only. Derivatives are built symbolically.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

FUNCS = ("exp", "sin", "cos", "log")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprEvalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Node:
    kind: str  # const | var | add | sub | mul | div | pow | neg | exp | sin | cos | log
    args: tuple = ()
    value: complex = 0j
    power: int = 0


def const(v) -> Node:
    return Node("const", value=complex(v))


VAR = Node("var")


# ---------------------------------------------------------------- parsing

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = self._lex(text)
        self.i = 0

    @staticmethod
    def _lex(text):
        toks = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit() or (ch == "." and i + 1 < len(text) and text[i + 1].isdigit()):
                j = i
                while j < len(text) and (text[j].isdigit() or text[j] == "."):
                    j += 1
                if j < len(text) and text[j] in "eE":
                    k = j + 1
                    if k < len(text) and text[k] in "+-":
                        k += 1
                    if k < len(text) and text[k].isdigit():
                        while k < len(text) and text[k].isdigit():
                            k += 1
                        j = k
                try:
                    float(text[i:j])
                except ValueError:
                    raise ExprSyntaxError(f"malformed number {text[i:j]!r}", i) from None
                toks.append(("num", text[i:j], i))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                toks.append(("id", text[i:j], i))
                i = j
            elif ch in "+-*/^(),":
                toks.append((ch, ch, i))
                i += 1
            else:
                raise ExprSyntaxError(f"unexpected character {ch!r}", i)
        toks.append(("end", "", len(text)))
        return toks

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            want = "end of input" if kind == "end" else repr(kind)
            raise ExprSyntaxError(f"expected {want}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        self.take("end")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            rhs = self.term()
            node = Node("add" if op == "+" else "sub", (node, rhs))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            node = Node("mul" if op == "*" else "div", (node, rhs))
        return node

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            return Node("neg", (self.unary(),))
        if self.peek()[0] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            sign = 1
            if self.peek()[0] in "+-":
                sign = -1 if self.take()[0] == "-" else 1
            tok = self.peek()
            if tok[0] != "num":
                raise ExprSyntaxError("expected integer exponent", tok[2])
            self.take()
            if not tok[1].isdigit():
                raise ExprSyntaxError(f"non-integer exponent {tok[1]!r}", tok[2])
            return Node("pow", (base,), power=sign * int(tok[1]))
        return base

    def atom(self):
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            return const(float(tok[1]))
        if tok[0] == "id":
            self.take()
            name = tok[1]
            if name == "lambda":
                return VAR
            if name == "pi":
                return const(math.pi)
            if name in FUNCS:
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Node(name, (arg,))
            raise ExprSyntaxError(f"unknown identifier {name!r}", tok[2])
        if tok[0] == "(":
            self.take()
            first = self.expr()
            if self.peek()[0] == ",":
                self.take()
                second = self.expr()
                self.take(")")
                if first.kind != "const" or second.kind != "const":
                    raise ExprSyntaxError("complex literal needs numeric parts", tok[2])
                return const(complex(first.value.real, second.value.real))
            self.take(")")
            return first
        raise ExprSyntaxError(f"unexpected {tok[1] or 'end of input'!r}", tok[2])


class AnalyticExpr:
    """Parsed expression with vectorised complex evaluation."""

    def __init__(self, root: Node, text: str | None = None):
        self.root = root
        self.text = text if text is not None else to_text(root)

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        return f"AnalyticExpr({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, AnalyticExpr) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    @property
    def is_constant(self) -> bool:
        return "var" not in _kinds(self.root)


def _kinds(node):
    out = {node.kind}
    for a in node.args:
        out |= _kinds(a)
    return out


def parse(text: str) -> AnalyticExpr:
    return AnalyticExpr(_Parser(text).parse(), text)


# ---------------------------------------------------------------- evaluation

def _ev(node: Node, z):
    k = node.kind
    if k == "const":
        return node.value if np.ndim(z) == 0 else np.full(np.shape(z), node.value, dtype=complex)
    if k == "var":
        return z
    if k in ("add", "sub", "mul", "div"):
        a = _ev(node.args[0], z)
        b = _ev(node.args[1], z)
        if k == "add":
            return a + b
        if k == "sub":
            return a - b
        if k == "mul":
            return a * b
        if np.any(b == 0):
            raise ExprEvalError("division by zero (pole)")
        return a / b
    if k == "neg":
        return -_ev(node.args[0], z)
    if k == "pow":
        a = _ev(node.args[0], z)
        if node.power < 0 and np.any(a == 0):
            raise ExprEvalError("negative power of zero (pole)")
        if np.ndim(a) == 0:
            return complex(a) ** node.power
        return np.asarray(a, dtype=complex) ** node.power
    a = _ev(node.args[0], z)
    if k == "log" and np.any(a == 0):
        raise ExprEvalError("log(0)")
    if np.ndim(a) == 0:
        return getattr(cmath, k)(complex(a))
    return getattr(np, k)(np.asarray(a, dtype=complex))


def evaluate(expr: AnalyticExpr, z):
    """Value of ``expr`` at complex ``z`` (scalar or array)."""
    if np.ndim(z) == 0:
        return complex(_ev(expr.root, complex(z)))
    return np.asarray(_ev(expr.root, np.asarray(z, dtype=complex)), dtype=complex)


eval = evaluate  # noqa: A001  (public name used by callers)


# ---------------------------------------------------------------- derivatives

def _is(node, v):
    return node.kind == "const" and node.value == v


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if a.kind == "const" and b.kind == "const":
        return const(a.value + b.value)
    return Node("add", (a, b))


def _sub(a, b):
    if _is(b, 0):
        return a
    if a.kind == "const" and b.kind == "const":
        return const(a.value - b.value)
    if _is(a, 0):
        return _neg(b)
    return Node("sub", (a, b))


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return const(0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if a.kind == "const" and b.kind == "const":
        return const(a.value * b.value)
    return Node("mul", (a, b))


def _div(a, b):
    if _is(a, 0):
        return const(0)
    if _is(b, 1):
        return a
    return Node("div", (a, b))


def _neg(a):
    if a.kind == "const":
        return const(-a.value)
    if a.kind == "neg":
        return a.args[0]
    return Node("neg", (a,))


def _pow(a, n):
    if n == 0:
        return const(1)
    if n == 1:
        return a
    if a.kind == "const":
        return const(a.value ** n)
    return Node("pow", (a,), power=n)


def _d(node: Node) -> Node:
    k = node.kind
    if k == "const":
        return const(0)
    if k == "var":
        return const(1)
    if k == "add":
        return _add(_d(node.args[0]), _d(node.args[1]))
    if k == "sub":
        return _sub(_d(node.args[0]), _d(node.args[1]))
    if k == "neg":
        return _neg(_d(node.args[0]))
    if k == "mul":
        a, b = node.args
        return _add(_mul(_d(a), b), _mul(a, _d(b)))
    if k == "div":
        a, b = node.args
        return _div(_sub(_mul(_d(a), b), _mul(a, _d(b))), _pow(b, 2))
    if k == "pow":
        a = node.args[0]
        n = node.power
        return _mul(_mul(const(n), _pow(a, n - 1)), _d(a))
    a = node.args[0]
    da = _d(a)
    if k == "exp":
        return _mul(node, da)
    if k == "sin":
        return _mul(Node("cos", (a,)), da)
    if k == "cos":
        return _neg(_mul(Node("sin", (a,)), da))
    if k == "log":
        return _div(da, a)
    raise ValueError(f"unknown node kind {k}")


def derivative(expr: AnalyticExpr, order: int = 1) -> AnalyticExpr:
    """Exact derivative AST of ``expr`` (order 1 or 2; higher orders by repetition)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    node = expr.root
    for _ in range(order):
        node = _d(node)
    return AnalyticExpr(node)


# ---------------------------------------------------------------- printing

def _num(v: complex) -> str:
    if v.imag == 0:
        r = v.real
        return repr(r) if r >= 0 else f"({r!r})"
    return f"({v.real!r},{v.imag!r})"


def to_text(node: Node) -> str:
    """Fully parenthesised text that parses back to an equivalent expression."""
    k = node.kind
    if k == "const":
        return _num(node.value)
    if k == "var":
        return "lambda"
    if k in ("add", "sub", "mul", "div"):
        op = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[k]
        return f"({to_text(node.args[0])}{op}{to_text(node.args[1])})"
    if k == "neg":
        return f"(-{to_text(node.args[0])})"
    if k == "pow":
        return f"({to_text(node.args[0])}^{node.power})" if node.power >= 0 else \
            f"({to_text(node.args[0])}^-{-node.power})"
    return f"{k}({to_text(node.args[0])})"
