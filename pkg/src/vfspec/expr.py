"""Real expressions in n coordinate variables.

Expressions are immutable trees built from :class:`Const`, :class:`Var`,
:class:`Neg`, :class:`BinOp` and :class:`Call` nodes. They can be parsed from
text, printed back (``parse(to_string(e)) == e`` structurally), evaluated at
a point, and differentiated to first order with dual numbers.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' factor)?
    atom   := number | ident | ident '(' expr (',' expr)* ')'
            | '(' expr ')' | '-' factor

Coordinates are named ``x, y, z`` when the dimension is at most 3 and
``x1 .. xn`` otherwise (``x1 ..`` is accepted in low dimensions too).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import EvalDomainError, ParseError

__all__ = [
    "Expr", "Const", "Var", "Neg", "BinOp", "Call", "DualValue",
    "FUNCTIONS", "parse_scalar", "to_string", "evaluate", "eval_dual",
    "variable_names", "substitute", "diff", "is_constant", "integer_exponent",
    "const", "depth",
]

# name -> arity
FUNCTIONS = {
    "sin": 1, "cos": 1, "tan": 1, "exp": 1, "log": 1, "sqrt": 1,
    "atan": 1, "abs": 1, "atan2": 2, "pow": 2,
}


@dataclass(frozen=True, slots=True)
class Const:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v < 0 or math.copysign(1.0, v) < 0:
            raise ValueError("Const holds a finite non-negative value; use const() for signed values")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True, slots=True)
class Var:
    index: int


@dataclass(frozen=True, slots=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Call:
    name: str
    args: tuple

    def __post_init__(self):
        if FUNCTIONS.get(self.name) != len(self.args):
            raise ValueError(f"bad call {self.name}/{len(self.args)}")


Expr = Union[Const, Var, Neg, BinOp, Call]


def const(value: float) -> Expr:
    """Signed constant; negative values become ``Neg(Const(-v))``."""
    value = float(value)
    if value < 0:
        return Neg(Const(-value))
    return Const(abs(value))


def variable_names(dim: int) -> list[str]:
    if dim <= 3:
        return ["x", "y", "z"][:dim]
    return [f"x{i + 1}" for i in range(dim)]


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}",
                             len(text) - len(text[pos:].lstrip()))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.i = 0
        names = variable_names(dim)
        self.vars = {name: k for k, name in enumerate(names)}
        self.vars.update({f"x{k + 1}": k for k in range(dim)})

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            found = tok[1] or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            return Const(float(value))
        if kind == "ident":
            self.take()
            if self.peek()[1] == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", pos)
                self.take("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                if len(args) != FUNCTIONS[value]:
                    raise ParseError(
                        f"{value} expects {FUNCTIONS[value]} argument(s), got {len(args)}", pos)
                return Call(value, tuple(args))
            if value == "pi":
                return Const(math.pi)
            if value in self.vars:
                return Var(self.vars[value])
            if value in FUNCTIONS:
                raise ParseError(f"function {value!r} used without arguments", pos)
            if re.fullmatch(r"x\d+|[xyz]", value):
                raise ParseError(f"variable {value!r} outside dimension {self.dim}", pos)
            raise ParseError(f"unknown identifier {value!r}", pos)
        if value == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if value == "-":
            self.take()
            return Neg(self.factor())
        raise ParseError(f"unexpected {value or 'end of input'!r}", pos)


def parse_scalar(text: str, dim: int) -> Expr:
    """Parse ``text`` into an expression over ``dim`` coordinates.

    Raises :class:`ParseError` (with the character position) on syntax
    errors, unknown identifiers and arity mismatches.
    """
    if dim < 0:
        raise ValueError("dimension must be non-negative")
    return _Parser(text, dim).parse()


# --------------------------------------------------------------- printing

def to_string(e: Expr, dim: int | None = None) -> str:
    """Fully parenthesised text form; parses back to a structurally equal tree."""
    if dim is None:
        dim = max(_max_var(e) + 1, 1)
    names = variable_names(dim)
    return _fmt(e, names)


def _fmt(e: Expr, names) -> str:
    if isinstance(e, Const):
        v = e.value
        return str(int(v)) if v.is_integer() and v < 1e15 else repr(v)
    if isinstance(e, Var):
        return names[e.index]
    if isinstance(e, Neg):
        return f"(-{_fmt(e.arg, names)})"
    if isinstance(e, BinOp):
        return f"({_fmt(e.left, names)}{e.op}{_fmt(e.right, names)})"
    return f"{e.name}({','.join(_fmt(a, names) for a in e.args)})"


def _max_var(e: Expr) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Const):
        return -1
    return max((_max_var(c) for c in _children(e)), default=-1)


def _children(e: Expr) -> tuple:
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, Call):
        return e.args
    return ()


def depth(e: Expr) -> int:
    return 1 + max((depth(c) for c in _children(e)), default=0)


def is_constant(e: Expr) -> bool:
    return _max_var(e) < 0


def integer_exponent(e: Expr) -> int | None:
    """The exponent as an int when it is a variable-free integral constant."""
    if not is_constant(e):
        return None
    try:
        v = evaluate(e, ())
    except EvalDomainError:
        return None
    if v == int(v) and abs(v) < 2**31:
        return int(v)
    return None


# ------------------------------------------------------------- evaluation

def _fail(reason: str, node: Expr):
    raise EvalDomainError(reason, node)


def evaluate(e: Expr, p: Sequence[float]) -> float:
    """Evaluate ``e`` at point ``p`` in double precision.

    Raises :class:`EvalDomainError` naming the offending sub-expression on a
    pole, a branch violation or an overflow.
    """
    try:
        return _eval(e, p)
    except EvalDomainError as exc:
        if exc.point is None:
            raise EvalDomainError(exc.reason, exc.node, p) from None
        raise


def _eval(e: Expr, p) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return float(p[e.index])
    if isinstance(e, Neg):
        return -_eval(e.arg, p)
    if isinstance(e, BinOp):
        a = _eval(e.left, p)
        if e.op == "^":
            return _pow(a, e.right, p, e)
        b = _eval(e.right, p)
        if e.op == "+":
            r = a + b
        elif e.op == "-":
            r = a - b
        elif e.op == "*":
            r = a * b
        else:
            if b == 0.0:
                _fail("division by zero", e)
            r = a / b
        if not math.isfinite(r):
            _fail("non-finite result", e)
        return r
    args = [_eval(a, p) for a in e.args]
    if e.name == "pow":
        return _pow(args[0], e.args[1], p, e, exponent_value=args[1])
    return _call(e, args)


def _pow(a, exponent: Expr, p, node, exponent_value=None):
    n = integer_exponent(exponent)
    if n is not None:
        if a == 0.0 and n < 0:
            _fail("zero base with negative exponent", node)
        try:
            r = a ** n
        except OverflowError:
            _fail("non-finite result", node)
    else:
        b = _eval(exponent, p) if exponent_value is None else exponent_value
        if a <= 0.0:
            _fail("non-positive base with non-integer exponent", node)
        try:
            r = math.pow(a, b)
        except OverflowError:
            _fail("non-finite result", node)
    if not math.isfinite(r):
        _fail("non-finite result", node)
    return r


def _call(e: Call, args) -> float:
    name = e.name
    u = args[0]
    try:
        if name == "sin":
            r = math.sin(u)
        elif name == "cos":
            r = math.cos(u)
        elif name == "tan":
            r = math.tan(u)
        elif name == "exp":
            r = math.exp(u)
        elif name == "log":
            if u <= 0.0:
                _fail("log of non-positive value", e)
            r = math.log(u)
        elif name == "sqrt":
            if u < 0.0:
                _fail("sqrt of negative value", e)
            r = math.sqrt(u)
        elif name == "atan":
            r = math.atan(u)
        elif name == "abs":
            r = abs(u)
        else:  # atan2
            if u == 0.0 and args[1] == 0.0:
                _fail("atan2(0, 0) is undefined", e)
            r = math.atan2(u, args[1])
    except OverflowError:
        _fail("non-finite result", e)
    if not math.isfinite(r):
        _fail("non-finite result", e)
    return r


# ----------------------------------------------------------- dual numbers

class DualValue:
    """A value together with its gradient with respect to the coordinates.

    ``nondiff`` is set when ``abs`` was differentiated at exactly zero (the
    derivative is then reported as 0).
    """

    __slots__ = ("value", "partials", "nondiff")

    def __init__(self, value: float, partials, nondiff: bool = False):
        self.value = float(value)
        self.partials = np.asarray(partials, dtype=float)
        self.nondiff = nondiff

    def __repr__(self):
        return f"DualValue({self.value!r}, {self.partials.tolist()!r})"

    def _join(self, other, value, partials):
        return DualValue(value, partials, self.nondiff or other.nondiff)

    def __add__(self, o):
        return self._join(o, self.value + o.value, self.partials + o.partials)

    def __sub__(self, o):
        return self._join(o, self.value - o.value, self.partials - o.partials)

    def __mul__(self, o):
        return self._join(o, self.value * o.value,
                          self.value * o.partials + o.value * self.partials)

    def __truediv__(self, o):
        v = self.value / o.value
        return self._join(o, v, (self.partials - v * o.partials) / o.value)

    def __neg__(self):
        return DualValue(-self.value, -self.partials, self.nondiff)

    def scale(self, value, factor):
        """Chain rule for a unary function with value ``value`` and slope ``factor``."""
        return DualValue(value, factor * self.partials, self.nondiff)


def eval_dual(e: Expr, p: Sequence[float]) -> DualValue:
    """Value and exact first partial derivatives of ``e`` at ``p``."""
    try:
        return _dual(e, [float(v) for v in p], len(p))
    except EvalDomainError as exc:
        if exc.point is None:
            raise EvalDomainError(exc.reason, exc.node, p) from None
        raise


def _check(d: DualValue, node) -> DualValue:
    if not (math.isfinite(d.value) and np.all(np.isfinite(d.partials))):
        _fail("non-finite result", node)
    return d


def _dual(e: Expr, p, n) -> DualValue:
    if isinstance(e, Const):
        return DualValue(e.value, np.zeros(n))
    if isinstance(e, Var):
        g = np.zeros(n)
        g[e.index] = 1.0
        return DualValue(p[e.index], g)
    if isinstance(e, Neg):
        return -_dual(e.arg, p, n)
    if isinstance(e, BinOp):
        a = _dual(e.left, p, n)
        if e.op == "^":
            return _dual_pow(a, e.right, p, n, e)
        b = _dual(e.right, p, n)
        if e.op == "+":
            r = a + b
        elif e.op == "-":
            r = a - b
        elif e.op == "*":
            r = a * b
        else:
            if b.value == 0.0:
                _fail("division by zero", e)
            r = a / b
        return _check(r, e)
    if e.name == "pow":
        return _dual_pow(_dual(e.args[0], p, n), e.args[1], p, n, e)
    args = [_dual(a, p, n) for a in e.args]
    return _check(_dual_call(e, args), e)


def _dual_pow(a: DualValue, exponent: Expr, p, n, node) -> DualValue:
    k = integer_exponent(exponent)
    try:
        if k is not None:
            if a.value == 0.0 and k < 0:
                _fail("zero base with negative exponent", node)
            if k == 0:
                return DualValue(1.0, np.zeros(n), a.nondiff)
            r = a.scale(a.value ** k, k * a.value ** (k - 1))
        else:
            if a.value <= 0.0:
                _fail("non-positive base with non-integer exponent", node)
            b = _dual(exponent, p, n)
            v = math.pow(a.value, b.value)
            r = DualValue(v, v * (b.partials * math.log(a.value) + b.value * a.partials / a.value),
                          a.nondiff or b.nondiff)
    except OverflowError:
        _fail("non-finite result", node)
    return _check(r, node)


def _dual_call(e: Call, args) -> DualValue:
    u = args[0]
    x = u.value
    name = e.name
    try:
        if name == "sin":
            return u.scale(math.sin(x), math.cos(x))
        if name == "cos":
            return u.scale(math.cos(x), -math.sin(x))
        if name == "tan":
            t = math.tan(x)
            return u.scale(t, 1.0 + t * t)
        if name == "exp":
            v = math.exp(x)
            return u.scale(v, v)
        if name == "log":
            if x <= 0.0:
                _fail("log of non-positive value", e)
            return u.scale(math.log(x), 1.0 / x)
        if name == "sqrt":
            if x < 0.0:
                _fail("sqrt of negative value", e)
            if x == 0.0:
                _fail("sqrt is not differentiable at 0", e)
            s = math.sqrt(x)
            return u.scale(s, 0.5 / s)
        if name == "atan":
            return u.scale(math.atan(x), 1.0 / (1.0 + x * x))
        if name == "abs":
            if x == 0.0:
                return DualValue(0.0, np.zeros_like(u.partials), True)
            return u.scale(abs(x), math.copysign(1.0, x))
        # atan2(y, x)
        v = args[1]
        yv, xv = u.value, v.value
        r2 = xv * xv + yv * yv
        if r2 == 0.0:
            _fail("atan2(0, 0) is undefined", e)
        return DualValue(math.atan2(yv, xv), (xv * u.partials - yv * v.partials) / r2,
                         u.nondiff or v.nondiff)
    except OverflowError:
        _fail("non-finite result", e)


# ---------------------------------------------------- tree transformations

def substitute(e: Expr, replacements: Sequence[Expr]) -> Expr:
    """Replace every ``Var(i)`` by ``replacements[i]`` (function composition)."""
    if isinstance(e, Var):
        return replacements[e.index]
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, replacements))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, replacements), substitute(e.right, replacements))
    return Call(e.name, tuple(substitute(a, replacements) for a in e.args))


_ZERO = Const(0.0)
_ONE = Const(1.0)


def _add(a, b):
    if a == _ZERO:
        return b
    if b == _ZERO:
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if b == _ZERO:
        return a
    if a == _ZERO:
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if a == _ZERO or b == _ZERO:
        return _ZERO
    if a == _ONE:
        return b
    if b == _ONE:
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if a == _ZERO:
        return _ZERO
    return BinOp("/", a, b)


def diff(e: Expr, i: int) -> Expr:
    """Partial derivative of ``e`` with respect to coordinate ``i``, as an expression.

    Only used where a derivative has to be differentiated again (the image of
    an eigenfunction under a second field). No simplification beyond dropping
    zeros and unit factors.
    """
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.index == i else _ZERO
    if isinstance(e, Neg):
        d = diff(e.arg, i)
        return _ZERO if d == _ZERO else Neg(d)
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        if e.op == "+":
            return _add(diff(a, i), diff(b, i))
        if e.op == "-":
            return _sub(diff(a, i), diff(b, i))
        if e.op == "*":
            return _add(_mul(diff(a, i), b), _mul(a, diff(b, i)))
        if e.op == "/":
            num = _sub(_mul(diff(a, i), b), _mul(a, diff(b, i)))
            return _div(num, BinOp("^", b, Const(2.0)))
        return _diff_pow(a, b, i, e)
    if e.name == "pow":
        return _diff_pow(e.args[0], e.args[1], i, e)
    u = e.args[0]
    du = diff(u, i)
    if e.name == "atan2":
        x = e.args[1]
        num = _sub(_mul(x, du), _mul(u, diff(x, i)))
        return _div(num, BinOp("+", BinOp("^", x, Const(2.0)), BinOp("^", u, Const(2.0))))
    if du == _ZERO:
        return _ZERO
    outer = {
        "sin": lambda: Call("cos", (u,)),
        "cos": lambda: Neg(Call("sin", (u,))),
        "tan": lambda: BinOp("+", _ONE, BinOp("^", Call("tan", (u,)), Const(2.0))),
        "exp": lambda: e,
        "log": lambda: BinOp("/", _ONE, u),
        "sqrt": lambda: BinOp("/", Const(0.5), e),
        "atan": lambda: BinOp("/", _ONE, BinOp("+", _ONE, BinOp("^", u, Const(2.0)))),
        "abs": lambda: BinOp("/", u, e),
    }[e.name]()
    return _mul(outer, du)


def _diff_pow(a, b, i, node):
    k = integer_exponent(b)
    da = diff(a, i)
    if k is not None:
        if k == 0 or da == _ZERO:
            return _ZERO
        lower = a if k == 2 else BinOp("^", a, const(k - 1))
        return _mul(_mul(const(k), lower), da)
    db = diff(b, i)
    term = _add(_mul(db, Call("log", (a,))), _mul(b, _div(da, a)))
    return _mul(node, term)
