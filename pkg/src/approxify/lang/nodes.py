"""Syntax tree for ApproxC.

Nodes are frozen dataclasses. Source positions are kept for diagnostics but
excluded from equality, so two trees compare equal iff they are structurally
identical. A node's NodePath is the sequence of child indices leading to it
from its function's body block (see :func:`children` and :func:`walk`).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Optional, Tuple, Union

Pos = Tuple[int, int]
NodePath = Tuple[int, ...]

INT = "int"
FLOAT = "float"
VOID = "void"


def _pos() -> Pos:
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Node:
    pass


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit(Node):
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class FloatLit(Node):
    value: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class Var(Node):
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Index(Node):
    name: str
    indices: Tuple["Expr", ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary(Node):
    op: str  # "-" or "!"
    operand: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call(Node):
    """Call of a user function, an intrinsic, an input or an emit builtin."""

    name: str
    args: Tuple["Expr", ...]
    pos: Pos = _pos()


Expr = Union[IntLit, FloatLit, Var, Index, Unary, Binary, Call]

# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Block(Node):
    stmts: Tuple["Stmt", ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Decl(Node):
    type: str
    name: str
    dims: Tuple[int, ...] = ()
    init: Optional[Expr] = None
    array_init: Tuple[Union[int, float], ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign(Node):
    target: Union[Var, Index]
    value: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Perforation:
    """Loop perforation annotation attached to a loop by a transform.

    ``technique`` is one of ``truncate``, ``sample``, ``random``.
    """

    technique: str
    param: Union[int, float]
    seed: int = 0


@dataclass(frozen=True)
class For(Node):
    init: Union[Decl, Assign]
    cond: Expr
    step: Assign
    body: Block
    approx: Optional[Perforation] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class While(Node):
    cond: Expr
    body: Block
    approx: Optional[Perforation] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: Block
    orelse: Optional[Block] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Return(Node):
    value: Optional[Expr] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class ExprStmt(Node):
    expr: Call
    pos: Pos = _pos()


Stmt = Union[Decl, Assign, For, While, If, Return, ExprStmt]

# -- top level ---------------------------------------------------------------


@dataclass(frozen=True)
class Memo:
    """Tolerance memoization annotation attached to a function."""

    tolerance: float
    capacity: int = 16


@dataclass(frozen=True)
class Param:
    name: str
    type: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class FunctionDecl(Node):
    name: str
    params: Tuple[Param, ...]
    ret: str
    body: Block
    memo: Optional[Memo] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class OutputKind:
    kind: str  # "numeric" | "text" | "image"
    rows: int = 0
    cols: int = 0


NUMERIC_OUTPUT = OutputKind("numeric")
TEXT_OUTPUT = OutputKind("text")


@dataclass(frozen=True)
class Program(Node):
    functions: Tuple[FunctionDecl, ...]
    globals: Tuple[Decl, ...] = ()
    string_table: Tuple[str, ...] = ()
    output_decl: OutputKind = NUMERIC_OUTPUT

    def function(self, name: str) -> FunctionDecl:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)


# -- traversal ---------------------------------------------------------------


def children(node: Node) -> list:
    """Child nodes in canonical order; indices into this list form NodePaths."""
    out = []
    for f in fields(node):
        if f.name == "pos":
            continue
        v = getattr(node, f.name)
        if isinstance(v, Node):
            out.append(v)
        elif isinstance(v, tuple) and v and isinstance(v[0], Node):
            out.extend(v)
    return out


def walk(node: Node, path: NodePath = ()) -> Iterator[Tuple[NodePath, Node]]:
    """Pre-order traversal yielding ``(path, node)``."""
    yield path, node
    for i, child in enumerate(children(node)):
        yield from walk(child, path + (i,))


def node_at(fn: FunctionDecl, path: NodePath) -> Node:
    node: Node = fn.body
    for i in path:
        node = children(node)[i]
    return node


def replace_at(node: Node, path: NodePath, new: Node) -> Node:
    """Return a copy of ``node`` with the descendant at ``path`` replaced."""
    if not path:
        return new
    idx, rest = path[0], path[1:]
    counter = 0
    changes = {}
    for f in fields(node):
        if f.name == "pos":
            continue
        v = getattr(node, f.name)
        if isinstance(v, Node):
            if counter == idx:
                changes[f.name] = replace_at(v, rest, new)
            counter += 1
        elif isinstance(v, tuple) and v and isinstance(v[0], Node):
            if counter <= idx < counter + len(v):
                items = list(v)
                items[idx - counter] = replace_at(v[idx - counter], rest, new)
                changes[f.name] = tuple(items)
            counter += len(v)
    if not changes:
        raise IndexError(f"no child {idx}")
    return replace(node, **changes)
