"""Small arithmetic expression language for user-defined potentials.

The grammar supports ``+ - * /``, right-associative ``^`` (``**`` is accepted
as a synonym), unary minus, parentheses, numeric literals and the functions
``exp, log, sqrt, abs, sin, cos, pow, min, max``.  Precedence, tightest
first: ``^``, unary minus, ``* /``, ``+ -``.

Evaluation returns the value together with exact first and second
derivatives with respect to the radius variable ``r``, computed by
second-order forward-mode dual arithmetic (no finite differences).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Constant",
    "Variable",
    "Unary",
    "Binary",
    "Call",
    "ExprSyntaxError",
    "EvalDomainError",
    "FUNCTIONS",
    "parse",
    "to_text",
    "evaluate",
    "eval_with_derivatives",
]

#: supported call-style functions and their arity
FUNCTIONS = {
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "abs": 1,
    "sin": 1,
    "cos": 1,
    "pow": 2,
    "min": 2,
    "max": 2,
}


class ExprSyntaxError(ValueError):
    """Raised on malformed expression text; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(ValueError):
    """Raised when evaluation leaves a function's domain; carries the radius."""

    def __init__(self, message: str, r: float):
        super().__init__(f"{message} (at r={r!r})")
        self.r = r


# ----------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "-"
    child: object


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


# ----------------------------------------------------------------------
# Tokenizer

_OPERATORS = {"+", "-", "*", "/", "^", "(", ")", ","}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(("number", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        if text.startswith("**", i):
            tokens.append(("op", "^", i))
            i += 2
            continue
        if ch in _OPERATORS:
            tokens.append(("op", ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


# ----------------------------------------------------------------------
# Recursive-descent parser


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", off)
        self.advance()

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = Binary(val, node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = Binary(val, node, self.unary())
            else:
                return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Unary("-", self.unary())
        if kind == "op" and val == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            # right associative; exponent may carry a unary minus (r^-2)
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.advance()
        if kind == "number":
            return Constant(float(val))
        if kind == "name":
            nkind, nval, _ = self.peek()
            if nkind == "op" and nval == "(":
                if val not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {val!r}", off)
                self.advance()
                args = [self.expr()]
                while True:
                    akind, aval, aoff = self.peek()
                    if akind == "op" and aval == ",":
                        self.advance()
                        args.append(self.expr())
                    elif akind == "op" and aval == ")":
                        self.advance()
                        break
                    else:
                        raise ExprSyntaxError("expected ',' or ')'", aoff)
                if len(args) != FUNCTIONS[val]:
                    raise ExprSyntaxError(
                        f"{val} takes {FUNCTIONS[val]} argument(s), got {len(args)}", off
                    )
                return Call(val, tuple(args))
            return Variable(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError("expected number, name or '('", off)


def parse(text: str):
    """Parse expression text into an AST.

    Raises :class:`ExprSyntaxError` (with byte offset) on malformed input.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


# ----------------------------------------------------------------------
# Pretty printer (parse . to_text . parse is a fixpoint)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "u-": 3, "^": 4}


def _prec(node) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary):
        return _PREC["u-"]
    return 9


def to_text(node) -> str:
    """Render an AST back to parseable text with minimal parentheses."""
    if isinstance(node, Constant):
        return repr(node.value)
    if isinstance(node, Variable):
        return node.name
    if isinstance(node, Unary):
        inner = to_text(node.child)
        if _prec(node.child) < _PREC["u-"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Binary):
        op = node.op
        lp, rp = to_text(node.left), to_text(node.right)
        if op == "^":
            # right associative and tighter than unary minus
            if _prec(node.left) <= _PREC["^"]:
                lp = f"({lp})"
            if _prec(node.right) < _PREC["u-"]:
                rp = f"({rp})"
        else:
            if _prec(node.left) < _PREC[op]:
                lp = f"({lp})"
            # left associative: equal precedence on the right needs parens
            if _prec(node.right) <= _PREC[op]:
                rp = f"({rp})"
        return f"{lp}{op}{rp}"
    if isinstance(node, Call):
        return f"{node.func}({','.join(to_text(a) for a in node.args)})"
    raise TypeError(f"not an AST node: {node!r}")


# ----------------------------------------------------------------------
# Second-order dual arithmetic
#
# A dual triple (f, f', f'') propagates through the usual calculus rules;
# second derivatives come out exact to roundoff.


def _d_add(x, y):
    return (x[0] + y[0], x[1] + y[1], x[2] + y[2])


def _d_sub(x, y):
    return (x[0] - y[0], x[1] - y[1], x[2] - y[2])


def _d_mul(x, y):
    return (
        x[0] * y[0],
        x[1] * y[0] + x[0] * y[1],
        x[2] * y[0] + 2.0 * x[1] * y[1] + x[0] * y[2],
    )


def _d_div(x, y, r):
    if y[0] == 0.0:
        raise EvalDomainError("division by zero", r)
    h = x[0] / y[0]
    h1 = (x[1] - h * y[1]) / y[0]
    h2 = (x[2] - 2.0 * h1 * y[1] - h * y[2]) / y[0]
    return (h, h1, h2)


def _d_pow(x, y, r):
    xf, x1, x2 = x
    if y[1] == 0.0 and y[2] == 0.0:
        n = y[0]
        if xf == 0.0:
            if n == 0.0:
                return (1.0, 0.0, 0.0)
            if n == 1.0:
                return x
            if n >= 2.0:
                return (0.0, 0.0, 0.0)
            raise EvalDomainError(f"0.0 raised to power {n}", r)
        if xf < 0.0 and n != round(n):
            raise EvalDomainError(f"negative base {xf} with non-integer exponent {n}", r)
        f = xf**n
        g = n * xf ** (n - 1.0)
        h = n * (n - 1.0) * xf ** (n - 2.0)
        return (f, g * x1, h * x1 * x1 + g * x2)
    if xf <= 0.0:
        raise EvalDomainError(f"non-positive base {xf} with variable exponent", r)
    return _d_exp(_d_mul(y, _d_log(x, r)))


def _d_exp(x):
    e = math.exp(x[0])
    return (e, e * x[1], e * (x[1] * x[1] + x[2]))


def _d_log(x, r):
    if x[0] <= 0.0:
        raise EvalDomainError(f"log of non-positive value {x[0]}", r)
    g = x[1] / x[0]
    return (math.log(x[0]), g, x[2] / x[0] - g * g)


def _d_sqrt(x, r):
    if x[0] < 0.0:
        raise EvalDomainError(f"sqrt of negative value {x[0]}", r)
    if x[0] == 0.0:
        if x[1] == 0.0 and x[2] == 0.0:
            return (0.0, 0.0, 0.0)
        raise EvalDomainError("sqrt not differentiable at 0", r)
    s = math.sqrt(x[0])
    s1 = x[1] / (2.0 * s)
    s2 = (x[2] - 2.0 * s1 * s1) / (2.0 * s)
    return (s, s1, s2)


def _d_abs(x):
    # sign(0) = 0 by convention; |V| only appears where V does not vanish
    s = 0.0 if x[0] == 0.0 else math.copysign(1.0, x[0])
    return (abs(x[0]), s * x[1], s * x[2])


def _eval_dual(node, r: float, bindings: dict) -> tuple[float, float, float]:
    if isinstance(node, Constant):
        return (node.value, 0.0, 0.0)
    if isinstance(node, Variable):
        if node.name == "r":
            return (r, 1.0, 0.0)
        try:
            return (float(bindings[node.name]), 0.0, 0.0)
        except KeyError:
            raise EvalDomainError(f"unbound variable {node.name!r}", r) from None
    if isinstance(node, Unary):
        f, f1, f2 = _eval_dual(node.child, r, bindings)
        return (-f, -f1, -f2)
    if isinstance(node, Binary):
        x = _eval_dual(node.left, r, bindings)
        y = _eval_dual(node.right, r, bindings)
        if node.op == "+":
            return _d_add(x, y)
        if node.op == "-":
            return _d_sub(x, y)
        if node.op == "*":
            return _d_mul(x, y)
        if node.op == "/":
            return _d_div(x, y, r)
        return _d_pow(x, y, r)
    if isinstance(node, Call):
        x = _eval_dual(node.args[0], r, bindings)
        if node.func == "exp":
            return _d_exp(x)
        if node.func == "log":
            return _d_log(x, r)
        if node.func == "sqrt":
            return _d_sqrt(x, r)
        if node.func == "abs":
            return _d_abs(x)
        if node.func == "sin":
            s, c = math.sin(x[0]), math.cos(x[0])
            return (s, c * x[1], -s * x[1] * x[1] + c * x[2])
        if node.func == "cos":
            s, c = math.sin(x[0]), math.cos(x[0])
            return (c, -s * x[1], -c * x[1] * x[1] - s * x[2])
        y = _eval_dual(node.args[1], r, bindings)
        if node.func == "pow":
            return _d_pow(x, y, r)
        if node.func == "min":
            return x if x[0] <= y[0] else y  # ties take the left branch
        if node.func == "max":
            return x if x[0] >= y[0] else y
    raise TypeError(f"not an AST node: {node!r}")


def eval_with_derivatives(node, r: float, bindings: dict | None = None) -> tuple[float, float, float]:
    """Evaluate an AST at radius ``r``, returning ``(V, V', V'')``.

    Parameters
    ----------
    node : AST
        Result of :func:`parse`.
    r : float
        Value bound to the variable ``r``.
    bindings : dict, optional
        Values for the remaining free variables.

    Raises
    ------
    EvalDomainError
        On domain violations (``log``/``sqrt`` of a negative value,
        division by zero, unbound variable); carries the offending ``r``.
    """
    return _eval_dual(node, r, bindings or {})


def evaluate(node, r: float, bindings: dict | None = None) -> float:
    """Plain evaluation; equals the first component of the dual result."""
    return _eval_dual(node, r, bindings or {})[0]
