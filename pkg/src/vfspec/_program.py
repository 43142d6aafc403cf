"""Flatten expression trees into postfix programs for the evaluation kernels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import BinOp, Const, Expr, Neg, Var, integer_exponent

# opcodes; must agree with _ckernels.pyx
CONST, VAR, NEG, ADD, SUB, MUL, DIV, POW, POWI = range(9)
SIN, COS, TAN, EXP, LOG, SQRT, ATAN, ATAN2, ABS = range(9, 18)

_BINARY = {"+": ADD, "-": SUB, "*": MUL, "/": DIV}
_UNARY = {"sin": SIN, "cos": COS, "tan": TAN, "exp": EXP, "log": LOG,
          "sqrt": SQRT, "atan": ATAN, "abs": ABS}

# kernel status codes
STATUS_REASONS = {
    1: "division by zero",
    2: "log of non-positive value",
    3: "sqrt of negative value",
    4: "non-positive base with non-integer exponent",
    5: "atan2(0, 0) is undefined",
    6: "non-finite result",
    7: "sqrt is not differentiable at 0",
    8: "zero base with negative exponent",
}


@dataclass(frozen=True, eq=False)
class Program:
    """Several expressions packed back to back as one postfix instruction stream.

    Output ``j`` occupies instructions ``starts[j]:starts[j+1]``; ``nodes[k]`` is
    the sub-expression instruction ``k`` finishes (for error messages).
    """

    ops: np.ndarray
    iargs: np.ndarray
    fargs: np.ndarray
    starts: np.ndarray
    depth: int
    dim: int
    nodes: tuple

    @property
    def n_outputs(self) -> int:
        return len(self.starts) - 1


def compile_exprs(exprs: Sequence[Expr], dim: int) -> Program:
    ops: list[int] = []
    iargs: list[int] = []
    fargs: list[float] = []
    nodes: list[Expr] = []
    starts = [0]
    max_depth = 1

    def emit(op, node, iarg=0, farg=0.0):
        ops.append(op)
        iargs.append(iarg)
        fargs.append(farg)
        nodes.append(node)

    def walk(e: Expr, sp: int) -> int:
        # returns the stack height after e is pushed
        nonlocal max_depth
        if isinstance(e, Const):
            emit(CONST, e, farg=e.value)
            sp += 1
        elif isinstance(e, Var):
            if e.index >= dim:
                raise ValueError(f"variable index {e.index} outside dimension {dim}")
            emit(VAR, e, iarg=e.index)
            sp += 1
        elif isinstance(e, Neg):
            sp = walk(e.arg, sp)
            emit(NEG, e)
        elif isinstance(e, BinOp) and e.op != "^":
            sp = walk(e.left, sp)
            sp = walk(e.right, sp)
            emit(_BINARY[e.op], e)
            sp -= 1
        elif isinstance(e, BinOp) or e.name == "pow":
            base, expo = (e.left, e.right) if isinstance(e, BinOp) else e.args
            k = integer_exponent(expo)
            sp = walk(base, sp)
            if k is not None:
                emit(POWI, e, iarg=k)
            else:
                sp = walk(expo, sp)
                emit(POW, e)
                sp -= 1
        elif e.name == "atan2":
            sp = walk(e.args[0], sp)
            sp = walk(e.args[1], sp)
            emit(ATAN2, e)
            sp -= 1
        else:
            sp = walk(e.args[0], sp)
            emit(_UNARY[e.name], e)
        max_depth = max(max_depth, sp)
        return sp

    for e in exprs:
        walk(e, 0)
        starts.append(len(ops))
    return Program(
        ops=np.asarray(ops, dtype=np.int32),
        iargs=np.asarray(iargs, dtype=np.int64),
        fargs=np.asarray(fargs, dtype=np.float64),
        starts=np.asarray(starts, dtype=np.int64),
        depth=max_depth,
        dim=dim,
        nodes=tuple(nodes),
    )
