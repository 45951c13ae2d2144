"""Trip-count analysis for ``for`` loops.

A loop is *counted* when its trip count is an affine function of values that
are fixed on loop entry::

    for (i = a; i REL b; i = i +/- k)   with k a positive integer literal

where REL agrees with the step direction, ``i`` is an int that the body never
assigns, and ``b`` only reads scalars the body never writes.
"""

import math
from typing import Callable, NamedTuple, Optional

from . import nodes as n

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}
_PURE_CALLS = {"in_len", "in_text_len", "int", "float", "abs", "min", "max", "exp", "sqrt"}


class CountedLoop(NamedTuple):
    var: str
    op: str  # relation with the loop variable on the left
    bound: object  # expression node
    step: int


def _assigned_names(block: n.Block) -> set:
    out = set()
    for _, node in n.walk(block):
        if isinstance(node, n.Assign):
            out.add(node.target.name)
        elif isinstance(node, n.Decl):
            out.add(node.name)
    return out


def _has_user_call(block: n.Block, user_functions: set) -> bool:
    return any(isinstance(node, n.Call) and node.name in user_functions
               for _, node in n.walk(block))


def _step_of(step: n.Assign, var: str) -> Optional[int]:
    if not isinstance(step.target, n.Var) or step.target.name != var:
        return None
    v = step.value
    if not isinstance(v, n.Binary) or v.op not in ("+", "-"):
        return None
    if isinstance(v.left, n.Var) and v.left.name == var and isinstance(v.right, n.IntLit):
        k = v.right.value
    elif v.op == "+" and isinstance(v.right, n.Var) and v.right.name == var and isinstance(v.left, n.IntLit):
        k = v.left.value
    else:
        return None
    if k <= 0:
        return None
    return k if v.op == "+" else -k


def counted_loop(loop, var_type: Callable[[str], Optional[str]], globals_: set,
                 user_functions: set) -> Optional[CountedLoop]:
    """Return the counted-loop description of ``loop`` or None."""
    if not isinstance(loop, n.For):
        return None
    init = loop.init
    if isinstance(init, n.Decl):
        if init.dims or init.init is None:
            return None
        var = init.name
    elif isinstance(init.target, n.Var):
        var = init.target.name
    else:
        return None
    if var_type(var) != n.INT:
        return None
    cond = loop.cond
    if not isinstance(cond, n.Binary) or cond.op not in _FLIP:
        return None
    if isinstance(cond.left, n.Var) and cond.left.name == var:
        op, bound = cond.op, cond.right
    elif isinstance(cond.right, n.Var) and cond.right.name == var:
        op, bound = _FLIP[cond.op], cond.left
    else:
        return None
    step = _step_of(loop.step, var)
    if step is None or (step > 0) != (op in ("<", "<=")):
        return None
    written = _assigned_names(loop.body)
    if var in written:
        return None
    calls_user = _has_user_call(loop.body, user_functions)
    for _, node in n.walk(bound):
        if isinstance(node, n.Index):
            return None
        if isinstance(node, n.Var):
            if node.name == var or node.name in written:
                return None
            if node.name in globals_ and calls_user:
                return None
        if isinstance(node, n.Call) and node.name not in _PURE_CALLS:
            return None
    return CountedLoop(var, op, bound, step)


def trip_count(start, op: str, bound, step: int) -> int:
    """Number of iterations of ``for (v = start; v op bound; v += step)``."""
    if op in ("<", ">"):
        span = (bound - start) if op == "<" else (start - bound)
        k = abs(step)
        if isinstance(span, int):
            return max(0, -(-span // k))
        return max(0, math.ceil(span / k))
    span = (bound - start) if op == "<=" else (start - bound)
    k = abs(step)
    if isinstance(span, int):
        return max(0, span // k + 1)
    return max(0, math.floor(span / k) + 1)


def truncated_count(trips: int, factor: float) -> int:
    """Iterations kept when the last ``factor`` share of ``trips`` is dropped."""
    # rounding guards against 0.7 * 10 landing a hair above 7
    return math.ceil(round((1.0 - factor) * trips, 9))
