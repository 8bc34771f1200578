"""Smooth scalar expressions over chart coordinates.

Expressions are immutable trees built from constants, coordinate variables,
a fixed set of elementary functions and the four arithmetic operators plus
``^`` with a constant exponent.  Every derivative used by the geometry code
is produced here by exact symbolic differentiation.

Structural equality is cheap: each node caches its hash, and ``==`` compares
node kind and children.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Pow",
    "SourceSpan",
    "ExprError",
    "ExprSyntaxError",
    "DomainError",
    "UNARY_FUNCTIONS",
    "parse_expr",
    "to_text",
    "normalize",
    "differentiate",
    "derivative_table",
    "evaluate",
    "evaluate_batch",
    "compile_batch",
    "max_var_index",
    "const",
    "var",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "apply",
]

UNARY_FUNCTIONS = ("neg", "exp", "ln", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt")
_CALLABLE = UNARY_FUNCTIONS[1:]
BINARY_OPS = ("add", "sub", "mul", "div")
_ALIASES = ("x", "y", "z", "t")
_NAMED_CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------------------
# Nodes


class Expr:
    """Base class of expression nodes."""

    __slots__ = ("_hash",)

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def __str__(self) -> str:
        return to_text(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        object.__setattr__(self, "value", float(value))

    def _key(self):
        # -0.0 and 0.0 are the same constant
        return (self.value + 0.0,)

    def __repr__(self):
        return f"Const({self.value!r})"


class Var(Expr):
    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("variable index must be non-negative")
        object.__setattr__(self, "index", int(index))

    def _key(self):
        return (self.index,)

    def __repr__(self):
        return f"Var({self.index})"


class Unary(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn not in UNARY_FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.fn, self.arg)

    def __repr__(self):
        return f"Unary({self.fn!r}, {self.arg!r})"


class Binary(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expr, right: Expr):
        if op not in BINARY_OPS:
            raise ValueError(f"unknown operator {op!r}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def _key(self):
        return (self.op, self.left, self.right)

    def __repr__(self):
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


class Pow(Expr):
    """``base ^ exponent`` with a constant real exponent."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: float):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", float(exponent))

    def _key(self):
        return (self.base, self.exponent + 0.0)

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent!r})"


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def max_var_index(e: Expr) -> int:
    """Largest variable index used by ``e`` (-1 for constant expressions)."""
    best = -1
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            best = max(best, node.index)
        stack.extend(children(node))
    return best


# ---------------------------------------------------------------------------
# Simplifying constructors (constant folding and 0/1 identities only)


def const(value: float) -> Const:
    return Const(value)


ZERO = Const(0.0)
ONE = Const(1.0)


def var(index: int) -> Var:
    return Var(index)


def _is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Binary("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if a is b:
        return ZERO
    return Binary("sub", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.fn == "neg":
        return a.arg
    return Unary("neg", a)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const) and not isinstance(a, Const):
        a, b = b, a
    if isinstance(a, Const):
        if isinstance(b, Const):
            return Const(a.value * b.value)
        if a.value == 0.0:
            return ZERO
        if a.value == 1.0:
            return b
        if a.value == -1.0:
            return neg(b)
        if isinstance(b, Binary) and b.op == "mul" and isinstance(b.left, Const):
            return mul(Const(a.value * b.left.value), b.right)
    return Binary("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if isinstance(a, Const) and b.value != 0.0:
            return Const(a.value / b.value)
        if b.value == 1.0:
            return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    return Binary("div", a, b)


def power(base: Expr, exponent: float) -> Expr:
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if isinstance(base, Const):
        try:
            value = _scalar_pow(base.value, exponent)
        except (ValueError, ZeroDivisionError, OverflowError):
            return Pow(base, exponent)
        return Const(value)
    if isinstance(base, Pow) and exponent.is_integer() and base.exponent.is_integer():
        return power(base.base, base.exponent * exponent)
    return Pow(base, exponent)


def apply(fn: str, a: Expr) -> Expr:
    if fn == "neg":
        return neg(a)
    if isinstance(a, Const):
        try:
            value = _SCALAR[fn](a.value)
        except (ValueError, ZeroDivisionError, OverflowError):
            return Unary(fn, a)
        if math.isfinite(value):
            return Const(value)
    return Unary(fn, a)


def normalize(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the simplifying constructors."""
    return _normalize(e)


@lru_cache(maxsize=1 << 16)
def _normalize(e: Expr) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Unary):
        return apply(e.fn, _normalize(e.arg))
    if isinstance(e, Pow):
        return power(_normalize(e.base), e.exponent)
    left, right = _normalize(e.left), _normalize(e.right)
    return {"add": add, "sub": sub, "mul": mul, "div": div}[e.op](left, right)


# ---------------------------------------------------------------------------
# Parsing


@dataclass(frozen=True)
class SourceSpan:
    """Half-open byte range ``[start, end)`` into the parsed text."""

    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span {self.start}..{self.end}")

    def line_col(self, text: str) -> tuple[int, int]:
        """1-based line and column of ``start`` in ``text``."""
        raw = text.encode("utf-8")[: self.start].decode("utf-8", errors="replace")
        line = raw.count("\n") + 1
        col = len(raw) - (raw.rfind("\n") + 1) + 1
        return line, col


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Parse failure carrying the offending span of the input."""

    def __init__(self, message: str, span: SourceSpan, text: str):
        self.message = message
        self.span = span
        self.text = text
        self.line, self.column = span.line_col(text)
        super().__init__(f"line {self.line}, column {self.column}: {message}")


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the real domain of a subexpression."""

    def __init__(self, message: str, subexpr: Expr, point: Sequence[float]):
        self.subexpr = subexpr
        self.point = tuple(float(v) for v in point)
        super().__init__(f"{message} in '{to_text(subexpr)}' at point {self.point}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num | name | op | end
    text: str
    start: int  # byte offsets
    end: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    # byte offsets: track running utf-8 length of the consumed prefix
    byte_pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            ch = text[pos]
            width = len(ch.encode("utf-8"))
            raise ExprSyntaxError(
                f"unexpected character {ch!r}", SourceSpan(byte_pos, byte_pos + width), text
            )
        piece = m.group(0)
        width = len(piece.encode("utf-8"))
        if m.lastgroup != "ws":
            tok = piece if piece != "**" else "^"
            tokens.append(_Token(m.lastgroup, tok, byte_pos, byte_pos + width))
        pos = m.end()
        byte_pos += width
    tokens.append(_Token("end", "", byte_pos, byte_pos))
    return tokens


class _Parser:
    # precedence: ^ > unary minus > * / > + -
    def __init__(self, text: str, dim: int, names: Mapping[str, int]):
        self.text = text
        self.dim = dim
        self.names = names
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str, start: int, end: int) -> ExprSyntaxError:
        return ExprSyntaxError(message, SourceSpan(start, end), self.text)

    def expect(self, text: str) -> _Token:
        tok = self.tok
        if tok.text != text or tok.kind == "end":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}", tok.start, tok.end)
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e, _ = self.additive()
        if self.tok.kind != "end":
            raise self.error(f"unexpected token {self.tok.text!r}", self.tok.start, self.tok.end)
        return e

    def additive(self) -> tuple[Expr, int]:
        left, start = self.multiplicative()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = "add" if self.tok.text == "+" else "sub"
            self.i += 1
            right, _ = self.multiplicative()
            left = Binary(op, left, right)
        return left, start

    def multiplicative(self) -> tuple[Expr, int]:
        left, start = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = "mul" if self.tok.text == "*" else "div"
            self.i += 1
            right, _ = self.unary()
            left = Binary(op, left, right)
        return left, start

    def unary(self) -> tuple[Expr, int]:
        tok = self.tok
        if tok.kind == "op" and tok.text in ("-", "+"):
            self.i += 1
            operand, _ = self.unary()
            return (Unary("neg", operand) if tok.text == "-" else operand), tok.start
        return self.power()

    def power(self) -> tuple[Expr, int]:
        base, start = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            exp_start = self.tok.start
            exponent, _ = self.unary()
            exp_end = self.tokens[self.i - 1].end
            folded = normalize(exponent)
            if not isinstance(folded, Const):
                raise self.error("exponent of '^' must be a constant", exp_start, exp_end)
            return Pow(base, folded.value), start
        return base, start

    def primary(self) -> tuple[Expr, int]:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text)), tok.start
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            inner, _ = self.additive()
            self.expect(")")
            return inner, tok.start
        if tok.kind == "name":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                if tok.text not in _CALLABLE:
                    raise self.error(f"unknown function {tok.text!r}", tok.start, tok.end)
                self.i += 1
                arg, _ = self.additive()
                self.expect(")")
                return Unary(tok.text, arg), tok.start
            return self.identifier(tok), tok.start
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self.error(f"unexpected {found}", tok.start, max(tok.end, tok.start))

    def identifier(self, tok: _Token) -> Expr:
        name = tok.text
        if name in self.names:
            return Var(self.names[name])
        m = re.fullmatch(r"x([1-9][0-9]*)", name)
        if m:
            index = int(m.group(1))
            if index > self.dim:
                raise self.error(
                    f"variable index out of range: {name} (dimension {self.dim})",
                    tok.start,
                    tok.end,
                )
            return Var(index - 1)
        if name in _NAMED_CONSTANTS:
            return Const(_NAMED_CONSTANTS[name])
        if name in _CALLABLE:
            raise self.error(f"function {name!r} needs an argument list", tok.start, tok.end)
        raise self.error(f"unknown identifier {name!r}", tok.start, tok.end)


def parse_expr(text: str, dim: int, names: Sequence[str] | None = None) -> Expr:
    """Parse ``text`` into an expression over ``dim`` coordinates.

    Coordinates are always available as ``x1`` .. ``x<dim>``.  For ``dim <= 4``
    the aliases ``x, y, z, t`` name them positionally, unless ``names``
    supplies chart-specific coordinate names, which replace the aliases.

    Raises
    ------
    ExprSyntaxError
        On any lexical or grammatical error, an unknown identifier, an
        out-of-range variable, or a non-constant exponent.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    mapping: dict[str, int] = {}
    if names is None and dim <= len(_ALIASES):
        mapping.update({a: i for i, a in enumerate(_ALIASES[:dim])})
    if names is not None:
        if len(names) != dim:
            raise ValueError(f"expected {dim} coordinate names, got {len(names)}")
        for i, name in enumerate(names):
            mapping[name] = i
    return _Parser(text, dim, mapping).parse()


# ---------------------------------------------------------------------------
# Printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.fn == "neg":
        return _PREC["neg"]
    if isinstance(e, Pow):
        return _PREC["pow"]
    if isinstance(e, Const) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return _PREC["neg"]
    return 10


def to_text(e: Expr) -> str:
    """Render ``e`` in the parser's grammar; re-parsing gives an equivalent tree."""
    if isinstance(e, Const):
        if not math.isfinite(e.value):
            raise ValueError(f"cannot print non-finite constant {e.value}")
        return _format_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Unary):
        if e.fn == "neg":
            inner = to_text(e.arg)
            if _prec(e.arg) <= _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.fn}({to_text(e.arg)})"
    if isinstance(e, Pow):
        base = to_text(e.base)
        if _prec(e.base) <= _PREC["pow"]:
            base = f"({base})"
        exponent = _format_number(e.exponent)
        if e.exponent < 0:
            exponent = f"({exponent})"
        return f"{base}^{exponent}"
    p = _PREC[e.op]
    symbol = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[e.op]
    left, right = to_text(e.left), to_text(e.right)
    if _prec(e.left) < p or _prec(e.left) == _PREC["neg"]:
        left = f"({left})"
    if _prec(e.right) <= p or _prec(e.right) == _PREC["neg"]:
        right = f"({right})"
    return f"{left} {symbol} {right}"


# ---------------------------------------------------------------------------
# Differentiation


def differentiate(e: Expr, i: int) -> Expr:
    """Exact partial derivative of ``e`` with respect to coordinate ``i`` (0-based)."""
    if i < 0:
        raise ValueError("coordinate index must be non-negative")
    return _diff(e, i)


@lru_cache(maxsize=1 << 18)
def _diff(e: Expr, i: int) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Pow):
        db = _diff(e.base, i)
        if _is_const(db, 0.0):
            return ZERO
        return mul(mul(Const(e.exponent), power(e.base, e.exponent - 1.0)), db)
    if isinstance(e, Unary):
        u = e.arg
        du = _diff(u, i)
        if _is_const(du, 0.0):
            return ZERO
        fn = e.fn
        if fn == "neg":
            return neg(du)
        if fn == "exp":
            outer = e
        elif fn == "ln":
            return div(du, u)
        elif fn == "sin":
            outer = apply("cos", u)
        elif fn == "cos":
            outer = neg(apply("sin", u))
        elif fn == "tan":
            outer = power(apply("cos", u), -2.0)
        elif fn == "sinh":
            outer = apply("cosh", u)
        elif fn == "cosh":
            outer = apply("sinh", u)
        elif fn == "tanh":
            outer = power(apply("cosh", u), -2.0)
        else:  # sqrt
            return div(du, mul(Const(2.0), e))
        return mul(outer, du)
    a, b = e.left, e.right
    da, db = _diff(a, i), _diff(b, i)
    if e.op == "add":
        return add(da, db)
    if e.op == "sub":
        return sub(da, db)
    if e.op == "mul":
        return add(mul(da, b), mul(a, db))
    # quotient: a'/b - a b'/b^2
    if _is_const(db, 0.0):
        return div(da, b)
    return sub(div(da, b), div(mul(a, db), power(b, 2.0)))


def derivative_table(e: Expr, max_order: int, dim: int | None = None) -> dict[tuple[int, ...], Expr]:
    """All mixed partials of ``e`` up to ``max_order``.

    Keys are non-decreasing index tuples (``()`` is ``e`` itself); since
    partials commute, ``table[tuple(sorted(idx))]`` serves any ordering.
    ``dim`` defaults to one more than the largest variable index in ``e``.
    """
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must be in 0..4")
    if dim is None:
        dim = max(max_var_index(e) + 1, 1)
    table: dict[tuple[int, ...], Expr] = {(): e}
    for order in range(1, max_order + 1):
        for idx in itertools.combinations_with_replacement(range(dim), order):
            table[idx] = _diff(table[idx[:-1]], idx[-1])
    return table


# ---------------------------------------------------------------------------
# Evaluation


def _scalar_pow(base: float, exponent: float) -> float:
    if base < 0 and not exponent.is_integer():
        raise ValueError("negative base with non-integer exponent")
    if base == 0 and exponent < 0:
        raise ZeroDivisionError("zero to a negative power")
    return math.pow(base, exponent)


def _checked(fn: Callable[[float], float], ok: Callable[[float], bool], what: str):
    def wrapped(x: float) -> float:
        if not ok(x):
            raise ValueError(what)
        return fn(x)

    return wrapped


_SCALAR: dict[str, Callable[[float], float]] = {
    "neg": lambda x: -x,
    "exp": math.exp,
    "ln": _checked(math.log, lambda x: x > 0, "logarithm of a non-positive value"),
    "sin": math.sin,
    "cos": math.cos,
    "tan": _checked(math.tan, lambda x: math.cos(x) != 0.0, "tangent at a pole"),
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "sqrt": _checked(math.sqrt, lambda x: x >= 0, "square root of a negative value"),
}


def evaluate(e: Expr, p: Sequence[float]) -> float:
    """Value of ``e`` at the point ``p`` in double precision.

    Raises :class:`DomainError` naming the failing subexpression when the
    point lies outside the real domain (log of non-positive, division by
    zero, overflow, ...).
    """
    point = [float(v) for v in p]
    need = max_var_index(e) + 1
    if need > len(point):
        raise ValueError(f"point has {len(point)} coordinates, expression needs {need}")
    cache: dict[int, float] = {}
    return _eval(e, point, cache)


def _eval(e: Expr, p: list[float], cache: dict[int, float]) -> float:
    key = id(e)
    if key in cache:
        return cache[key]
    if isinstance(e, Const):
        value = e.value
    elif isinstance(e, Var):
        value = p[e.index]
    else:
        try:
            if isinstance(e, Unary):
                value = _SCALAR[e.fn](_eval(e.arg, p, cache))
            elif isinstance(e, Pow):
                value = _scalar_pow(_eval(e.base, p, cache), e.exponent)
            else:
                a = _eval(e.left, p, cache)
                b = _eval(e.right, p, cache)
                if e.op == "add":
                    value = a + b
                elif e.op == "sub":
                    value = a - b
                elif e.op == "mul":
                    value = a * b
                else:
                    if b == 0.0:
                        raise ZeroDivisionError("division by zero")
                    value = a / b
        except DomainError:
            raise
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(str(exc), e, p) from None
        if not math.isfinite(value):
            raise DomainError("non-finite result", e, p)
    cache[key] = value
    return value


_NUMPY_NAMES = {
    "exp": "np.exp",
    "ln": "np.log",
    "sin": "np.sin",
    "cos": "np.cos",
    "tan": "np.tan",
    "sinh": "np.sinh",
    "cosh": "np.cosh",
    "tanh": "np.tanh",
    "sqrt": "np.sqrt",
}


class _Compiler:
    def __init__(self):
        self.lines: list[str] = []
        self.names: dict[Expr, str] = {}
        self.consts: list[float] = []

    def emit(self, e: Expr) -> str:
        # iterative post-order keeps deep trees off the Python stack
        stack: list[tuple[Expr, bool]] = [(e, False)]
        while stack:
            node, ready = stack.pop()
            if node in self.names:
                continue
            if not ready:
                stack.append((node, True))
                stack.extend((c, False) for c in children(node) if c not in self.names)
                continue
            self.names[node] = self._line(node)
        return self.names[e]

    def _line(self, node: Expr) -> str:
        if isinstance(node, Const):
            self.consts.append(node.value)
            return f"_c[{len(self.consts) - 1}]"
        if isinstance(node, Var):
            return f"_x[{node.index}]"
        name = f"_t{len(self.lines)}"
        if isinstance(node, Unary):
            a = self.names[node.arg]
            rhs = f"-{a}" if node.fn == "neg" else f"{_NUMPY_NAMES[node.fn]}({a})"
        elif isinstance(node, Pow):
            a = self.names[node.base]
            if node.exponent == 2.0:
                rhs = f"{a} * {a}"
            elif node.exponent == -1.0:
                rhs = f"1.0 / {a}"
            else:
                rhs = f"np.power({a}, {node.exponent!r})"
        else:
            symbol = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[node.op]
            rhs = f"{self.names[node.left]} {symbol} {self.names[node.right]}"
        self.lines.append(f"    {name} = {rhs}")
        return name


def compile_batch(exprs: Sequence[Expr]) -> Callable[[np.ndarray], np.ndarray]:
    """Compile several expressions into one vectorized numpy function.

    The returned callable takes points of shape ``(P, dim)`` and returns an
    array of shape ``(len(exprs), P)``.  Shared subexpressions are computed
    once.  Non-finite results raise :class:`DomainError` located by the
    scalar evaluator.
    """
    exprs = list(exprs)
    comp = _Compiler()
    outputs = [comp.emit(e) for e in exprs]
    body = "\n".join(comp.lines) if comp.lines else "    pass"
    src = (
        "def _batch(_x, _c, _out):\n"
        f"{body}\n"
        + "".join(f"    _out[{k}] = {name}\n" for k, name in enumerate(outputs))
    )
    namespace: dict = {"np": np}
    exec(compile(src, "<exprlang-batch>", "exec"), namespace)
    fn = namespace["_batch"]
    consts = np.array(comp.consts, dtype=float)

    def run(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((len(exprs), pts.shape[0]))
        with np.errstate(all="ignore"):
            fn(pts.T, consts, out)
        if not np.all(np.isfinite(out)):
            k, j = np.argwhere(~np.isfinite(out))[0]
            evaluate(exprs[k], pts[j])  # raises DomainError with a precise location
            raise DomainError("non-finite result", exprs[k], pts[j])
        return out

    return run


def evaluate_batch(e: Expr, points: Iterable[Sequence[float]]) -> np.ndarray:
    """Vectorized :func:`evaluate` over an array of points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return compile_batch([e])(pts)[0]

