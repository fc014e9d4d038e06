"""Scalar expressions over product-space variables t1..tm, x1..xn.

The grammar is fixed and closed: every operator in it has a certified
interval extension, so any parsed expression can be evaluated both at
points and as a rigorous enclosure over a box.

    expr   := term { ("+"|"-") term }
    term   := factor { ("*"|"/") factor }
    factor := ["-"] atom [ "^" atom ]
    atom   := number | ident | ident "(" expr { "," expr } ")" | "(" expr ")"
    ident  := "t"digits | "x"digits | "t" | "x" | "pi" | "e" | function-name
    function-name in { sin, cos, exp, log, sqrt, abs, min, max }

Whitespace is insignificant; "^" binds tighter than unary minus.  The
aliases "t" and "x" are accepted only when the corresponding factor is
one-dimensional.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import intervals as iv
from .errors import DimensionMismatchError, EvalDomainError, ParseError
from .intervals import Box, Interval

__all__ = [
    "Expr",
    "parse",
    "eval_point",
    "eval_interval",
    "eval_array",
    "pointwise_max",
    "substitute",
]

# ---------------------------------------------------------------------------
# AST nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    factor: str  # "t" | "x"
    index: int  # 1-based


@dataclass(frozen=True)
class Unary:
    op: str  # neg abs exp log sqrt sin cos
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Extremum:
    op: str  # max | min
    args: tuple["Node", ...]


Node = Union[Const, Var, Unary, Binary, Extremum]

_UNARY_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")
_FUNCTIONS = _UNARY_FUNCTIONS + ("min", "max")


@dataclass(frozen=True)
class Expr:
    """An immutable expression tree with declared dimensions (m, n)."""

    root: Node
    m: int
    n: int

    def __str__(self) -> str:
        return to_source(self.root)

    def __call__(self, t: Sequence[float], x: Sequence[float] = ()) -> float:
        return eval_point(self, t, x)

    def free_indices(self) -> tuple[set[int], set[int]]:
        """Sets of used t-indices and x-indices."""
        ts: set[int] = set()
        xs: set[int] = set()

        def walk(node: Node) -> None:
            if isinstance(node, Var):
                (ts if node.factor == "t" else xs).add(node.index)
            elif isinstance(node, Unary):
                walk(node.arg)
            elif isinstance(node, Binary):
                walk(node.left)
                walk(node.right)
            elif isinstance(node, Extremum):
                for a in node.args:
                    walk(a)

        walk(self.root)
        return ts, xs


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, m: int, n: int):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.m = m
        self.n = n

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> None:
        kind, value, offset = self.peek()
        if kind != "op" or value != text:
            raise ParseError(f"expected {text!r}, found {value or 'end of input'!r}", offset)
        self.advance()

    def at_op(self, *texts: str) -> bool:
        kind, value, _ = self.peek()
        return kind == "op" and value in texts

    def parse(self) -> Node:
        node = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {value!r}", offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.at_op("+", "-"):
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.at_op("*", "/"):
            op = self.advance()[1]
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Node:
        negate = False
        if self.at_op("-"):
            self.advance()
            negate = True
        node = self.atom()
        if self.at_op("^"):
            self.advance()
            node = Binary("^", node, self.atom())
        if negate:
            # "^" binds tighter than unary minus; fold a bare negated literal.
            if isinstance(node, Const):
                node = Const(-node.value)
            else:
                node = Unary("neg", node)
        return node

    def atom(self) -> Node:
        kind, value, offset = self.peek()
        if kind == "number":
            self.advance()
            return Const(float(value))
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            self.advance()
            if self.at_op("("):
                return self.call(value, offset)
            return self.identifier(value, offset)
        raise ParseError(f"expected a number, identifier or '(', found {value or 'end of input'!r}", offset)

    def call(self, name: str, offset: int) -> Node:
        if name not in _FUNCTIONS:
            raise ParseError(f"{name!r} is not a function", offset)
        self.expect_op("(")
        args = [self.expr()]
        while self.at_op(","):
            self.advance()
            args.append(self.expr())
        self.expect_op(")")
        if name in _UNARY_FUNCTIONS:
            if len(args) != 1:
                raise ParseError(
                    f"{name} takes exactly 1 argument, got {len(args)}", offset
                )
            return Unary(name, args[0])
        return Extremum(name, tuple(args))

    def identifier(self, name: str, offset: int) -> Node:
        if name == "pi":
            return Const(math.pi)
        if name == "e":
            return Const(math.e)
        if name in _FUNCTIONS:
            raise ParseError(f"expected '(' after function name {name!r}", offset)
        m = re.fullmatch(r"([tx])(\d*)", name)
        if m is None:
            raise ParseError(f"unknown identifier {name!r}", offset)
        factor, digits = m.groups()
        dim = self.m if factor == "t" else self.n
        if digits == "":
            if dim != 1:
                raise ParseError(
                    f"alias {factor!r} needs a one-dimensional factor, "
                    f"declared dimension is {dim}",
                    offset,
                )
            index = 1
        else:
            index = int(digits)
            if not 1 <= index <= dim:
                raise ParseError(
                    f"variable index out of range: {name} with declared "
                    f"dimension {dim}",
                    offset,
                )
        return Var(factor, index)


def parse(source: str, m: int, n: int) -> Expr:
    """Parse `source` into an expression over t1..tm, x1..xn."""
    if m < 0 or n < 0:
        raise ValueError("dimensions must be nonnegative")
    return Expr(_Parser(source, m, n).parse(), m, n)


# ---------------------------------------------------------------------------
# Printing (round-trips through parse)
# ---------------------------------------------------------------------------

_LEVEL_ADD = 1
_LEVEL_MUL = 2
_LEVEL_NEG = 3
_LEVEL_POW = 4
_LEVEL_ATOM = 5


def _level(node: Node) -> int:
    if isinstance(node, Const):
        # sign-bit test: -0.0 prints with a leading minus too
        negative = math.copysign(1.0, node.value) < 0
        return _LEVEL_NEG if negative else _LEVEL_ATOM
    if isinstance(node, (Var, Extremum)):
        return _LEVEL_ATOM
    if isinstance(node, Unary):
        return _LEVEL_NEG if node.op == "neg" else _LEVEL_ATOM
    if node.op in ("+", "-"):
        return _LEVEL_ADD
    if node.op in ("*", "/"):
        return _LEVEL_MUL
    return _LEVEL_POW


def _wrap(node: Node, min_level: int) -> str:
    text = to_source(node)
    return f"({text})" if _level(node) < min_level else text


def to_source(node: Node) -> str:
    """Render a tree as grammar-conforming source with minimal parentheses."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return f"{node.factor}{node.index}"
    if isinstance(node, Unary):
        if node.op == "neg":
            return "-" + _wrap(node.arg, _LEVEL_POW)
        return f"{node.op}({to_source(node.arg)})"
    if isinstance(node, Extremum):
        return f"{node.op}({', '.join(to_source(a) for a in node.args)})"
    if node.op in ("+", "-"):
        return f"{_wrap(node.left, _LEVEL_ADD)} {node.op} {_wrap(node.right, _LEVEL_MUL)}"
    if node.op in ("*", "/"):
        return f"{_wrap(node.left, _LEVEL_MUL)} {node.op} {_wrap(node.right, _LEVEL_NEG)}"
    return f"{_wrap(node.left, _LEVEL_ATOM)}^{_wrap(node.right, _LEVEL_ATOM)}"


# ---------------------------------------------------------------------------
# Point evaluation
# ---------------------------------------------------------------------------


def _as_int_exponent(node: Node) -> int | None:
    if isinstance(node, Const) and float(node.value).is_integer() and abs(node.value) <= 2**31:
        return int(node.value)
    return None


def _domain_error(node: Node, why: str) -> EvalDomainError:
    return EvalDomainError(f"{why} in subexpression {to_source(node)!r}")


def _eval_node(node: Node, t: Sequence[float], x: Sequence[float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        vec = t if node.factor == "t" else x
        return float(vec[node.index - 1])
    if isinstance(node, Unary):
        v = _eval_node(node.arg, t, x)
        if node.op == "neg":
            return -v
        if node.op == "abs":
            return abs(v)
        if node.op == "exp":
            try:
                return math.exp(v)
            except OverflowError:
                return math.inf
        if node.op == "log":
            if v <= 0.0:
                raise _domain_error(node, f"log of nonpositive value {v!r}")
            return math.log(v)
        if node.op == "sqrt":
            if v < 0.0:
                raise _domain_error(node, f"sqrt of negative value {v!r}")
            return math.sqrt(v)
        if node.op == "sin":
            return math.sin(v)
        return math.cos(v)
    if isinstance(node, Binary):
        a = _eval_node(node.left, t, x)
        b = _eval_node(node.right, t, x)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            if b == 0.0:
                raise _domain_error(node, "division by zero")
            out = a / b
        else:
            k = _as_int_exponent(node.right)
            if k is None and a < 0.0:
                raise _domain_error(node, f"negative base {a!r} with non-integer exponent")
            if a == 0.0 and b < 0.0:
                raise _domain_error(node, "zero base with negative exponent")
            try:
                out = math.pow(a, b)
            except OverflowError:
                out = math.inf
            except ValueError as exc:
                raise _domain_error(node, str(exc)) from exc
        if math.isnan(out):
            raise _domain_error(node, "indeterminate result")
        return out
    values = [_eval_node(a, t, x) for a in node.args]
    return max(values) if node.op == "max" else min(values)


def eval_point(e: Expr, t: Sequence[float], x: Sequence[float] = ()) -> float:
    """Evaluate at a point; raises EvalDomainError outside natural domains."""
    if len(t) != e.m or len(x) != e.n:
        raise DimensionMismatchError(
            f"expression over ({e.m}, {e.n}) dimensions evaluated at vectors "
            f"of length ({len(t)}, {len(x)})"
        )
    return _eval_node(e.root, t, x)


# ---------------------------------------------------------------------------
# Interval evaluation
# ---------------------------------------------------------------------------


def _interval_node(node: Node, box: Box) -> Interval:
    if isinstance(node, Const):
        return Interval.point(node.value)
    if isinstance(node, Var):
        return box.coordinate(node.factor, node.index)
    if isinstance(node, Unary):
        a = _interval_node(node.arg, box)
        return {
            "neg": iv.ineg,
            "abs": iv.iabs,
            "exp": iv.iexp,
            "log": iv.ilog,
            "sqrt": iv.isqrt,
            "sin": iv.isin,
            "cos": iv.icos,
        }[node.op](a)
    if isinstance(node, Binary):
        a = _interval_node(node.left, box)
        if node.op == "^":
            k = _as_int_exponent(node.right)
            if k is not None:
                return iv.ipow_int(a, k)
            return iv.ipow_general(a, _interval_node(node.right, box))
        b = _interval_node(node.right, box)
        return {"+": iv.iadd, "-": iv.isub, "*": iv.imul, "/": iv.idiv}[node.op](a, b)
    parts = [_interval_node(a, box) for a in node.args]
    return iv.imax(parts) if node.op == "max" else iv.imin(parts)


def eval_interval(e: Expr, box: Box) -> Interval:
    """Rigorous enclosure of e over the box.

    The result contains every point value reachable inside the box,
    including floating-point evaluation noise (outward rounding).  Raises
    DomainAmbiguityError when a subexpression's enclosure touches a
    singular set, rather than returning an unsound interval.
    """
    if len(box.t) != e.m or len(box.x) != e.n:
        raise DimensionMismatchError(
            f"expression over ({e.m}, {e.n}) dimensions evaluated on a box "
            f"with ({len(box.t)}, {len(box.x)}) coordinates"
        )
    return _interval_node(e.root, box)


# ---------------------------------------------------------------------------
# Vectorized evaluation
# ---------------------------------------------------------------------------


def _array_node(node: Node, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    if isinstance(node, Const):
        return np.full(t.shape[0], node.value)
    if isinstance(node, Var):
        arr = t if node.factor == "t" else x
        return arr[:, node.index - 1]
    if isinstance(node, Unary):
        a = _array_node(node.arg, t, x)
        if node.op == "neg":
            return -a
        if node.op == "log" and np.any(a <= 0.0):
            raise _domain_error(node, "log of nonpositive value")
        if node.op == "sqrt" and np.any(a < 0.0):
            raise _domain_error(node, "sqrt of negative value")
        return {
            "abs": np.abs, "exp": np.exp, "log": np.log,
            "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos,
        }[node.op](a)
    if isinstance(node, Binary):
        a = _array_node(node.left, t, x)
        if node.op == "^":
            k = _as_int_exponent(node.right)
            if k is not None:
                if k < 0 and np.any(a == 0.0):
                    raise _domain_error(node, "zero base with negative exponent")
                return np.power(a, float(k))
            b = _array_node(node.right, t, x)
            if np.any(a < 0.0):
                raise _domain_error(node, "negative base with non-integer exponent")
            return np.power(a, b)
        b = _array_node(node.right, t, x)
        if node.op == "/":
            if np.any(b == 0.0):
                raise _domain_error(node, "division by zero")
            return a / b
        op: Callable = {"+": np.add, "-": np.subtract, "*": np.multiply}[node.op]
        return op(a, b)
    parts = [_array_node(a, t, x) for a in node.args]
    fn = np.maximum if node.op == "max" else np.minimum
    out = parts[0]
    for p in parts[1:]:
        out = fn(out, p)
    return out


def eval_array(e: Expr, t: np.ndarray, x: np.ndarray | None = None) -> np.ndarray:
    """Evaluate at many points at once.

    t has shape (N, m) and x shape (N, n); returns shape (N,).  Agrees
    with eval_point up to last-place rounding of the vector math kernels.
    """
    t = np.atleast_2d(np.asarray(t, dtype=float))
    x = np.zeros((t.shape[0], 0)) if x is None else np.atleast_2d(np.asarray(x, dtype=float))
    if t.shape[1] != e.m or x.shape[1] != e.n:
        raise DimensionMismatchError(
            f"expression over ({e.m}, {e.n}) dimensions evaluated on arrays "
            f"with ({t.shape[1]}, {x.shape[1]}) columns"
        )
    with np.errstate(over="ignore", under="ignore"):
        out = _array_node(e.root, t, x)
    if np.isnan(out).any():
        raise EvalDomainError("indeterminate result in vectorized evaluation")
    return np.asarray(out, dtype=float)


# ---------------------------------------------------------------------------
# Structural operations
# ---------------------------------------------------------------------------


def pointwise_max(es: Sequence[Expr]) -> Expr:
    """Expression computing the pointwise maximum of a finite family."""
    if not es:
        raise ValueError("pointwise_max of an empty family")
    m, n = es[0].m, es[0].n
    for e in es[1:]:
        if (e.m, e.n) != (m, n):
            raise DimensionMismatchError(
                f"family members disagree on dimensions: ({m}, {n}) vs ({e.m}, {e.n})"
            )
    return Expr(Extremum("max", tuple(e.root for e in es)), m, n)


def substitute(e: Expr, t_args: Sequence[Expr], x_args: Sequence[Expr]) -> Expr:
    """Compose e with argument expressions, one per variable.

    Every argument must share the same (m, n); the result is an expression
    over those dimensions with each t_i / x_j replaced by its argument's
    tree.
    """
    if len(t_args) != e.m or len(x_args) != e.n:
        raise DimensionMismatchError(
            f"substitution needs {e.m} t-arguments and {e.n} x-arguments, "
            f"got {len(t_args)} and {len(x_args)}"
        )
    dims = {(a.m, a.n) for a in (*t_args, *x_args)}
    if len(dims) > 1:
        raise DimensionMismatchError(f"argument dimensions disagree: {sorted(dims)}")
    m, n = dims.pop() if dims else (0, 0)

    def walk(node: Node) -> Node:
        if isinstance(node, Const):
            return node
        if isinstance(node, Var):
            args = t_args if node.factor == "t" else x_args
            return args[node.index - 1].root
        if isinstance(node, Unary):
            return Unary(node.op, walk(node.arg))
        if isinstance(node, Binary):
            return Binary(node.op, walk(node.left), walk(node.right))
        return Extremum(node.op, tuple(walk(a) for a in node.args))

    return Expr(walk(e.root), m, n)
