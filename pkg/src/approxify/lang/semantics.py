"""Name resolution and type checking.

Scoping is deliberately flat: every local (including loop variables declared in
a ``for`` header) lives in one function-wide scope and must be declared before
its first textual use. Locals may not reuse the name of a parameter, a global
or a function.
"""

from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Tuple

from . import nodes as n
from .errors import SemanticError

INTRINSICS = {"abs": 1, "min": 2, "max": 2, "exp": 1, "sqrt": 1}
CASTS = {"int": n.INT, "float": n.FLOAT}
INPUTS = {
    "in_num": ((n.INT,), n.FLOAT),
    "in_pixel": ((n.INT, n.INT), n.INT),
    "in_len": ((), n.INT),
    "in_char": ((n.INT,), n.INT),
    "in_text_len": ((), n.INT),
}
EMITS = {
    "emit_num": ((n.FLOAT,), "numeric"),
    "emit_pixel": ((n.INT, n.INT, n.FLOAT), "image"),
    "emit_word": ((n.INT,), "text"),
}
BUILTINS = set(INTRINSICS) | set(CASTS) | set(INPUTS) | set(EMITS)

ARITH = {"+", "-", "*", "/", "%"}
COMPARE = {"<", "<=", ">", ">=", "==", "!="}
LOGIC = {"&&", "||"}

INT_MIN, INT_MAX = -(2**63), 2**63 - 1


class VarInfo(NamedTuple):
    name: str
    type: str
    dims: Tuple[int, ...]
    is_global: bool
    slot: int

    @property
    def size(self) -> int:
        s = 1
        for d in self.dims:
            s *= d
        return s


@dataclass
class FuncInfo:
    decl: n.FunctionDecl
    locals: Dict[str, VarInfo] = field(default_factory=dict)

    @property
    def nslots(self) -> int:
        return len(self.locals)


@dataclass
class ProgramInfo:
    program: n.Program
    globals: Dict[str, VarInfo]
    functions: Dict[str, FuncInfo]

    def lookup(self, fn: FuncInfo, name: str) -> Optional[VarInfo]:
        v = fn.locals.get(name)
        if v is None:
            v = self.globals.get(name)
        return v


def _err(msg: str, node) -> SemanticError:
    line, col = getattr(node, "pos", (0, 0))
    return SemanticError(msg, line, col)


def _const_value(e):
    if isinstance(e, (n.IntLit, n.FloatLit)):
        return e.value
    if isinstance(e, n.Unary) and e.op == "-" and isinstance(e.operand, (n.IntLit, n.FloatLit)):
        return -e.operand.value
    return None


def promote(a: str, b: str) -> str:
    return n.FLOAT if n.FLOAT in (a, b) else n.INT


class Checker:
    def __init__(self, program: n.Program):
        self.program = program
        self.info = ProgramInfo(program, {}, {})

    def run(self) -> ProgramInfo:
        p = self.program
        out = p.output_decl
        if out.kind not in ("numeric", "text", "image"):
            raise SemanticError(f"unknown output kind {out.kind!r}")
        if out.kind == "image" and (out.rows <= 0 or out.cols <= 0):
            raise SemanticError("image output dimensions must be positive")
        seen = set()
        for fn in p.functions:
            if fn.name in seen:
                raise _err(f"duplicate function {fn.name!r}", fn)
            if fn.name in BUILTINS:
                raise _err(f"function {fn.name!r} shadows a builtin", fn)
            seen.add(fn.name)
        if "main" not in seen:
            raise SemanticError("program has no function named 'main'")
        if p.function("main").params:
            raise _err("main must take no parameters", p.function("main"))
        for d in p.globals:
            self._check_decl_shape(d)
            if d.name in seen or d.name in BUILTINS or d.name in self.info.globals:
                raise _err(f"duplicate global {d.name!r}", d)
            if d.init is not None:
                v = _const_value(d.init)
                if v is None:
                    raise _err("global initializer must be a constant", d)
                if d.type == n.INT and isinstance(v, float):
                    raise _err("type mismatch: float initializer for int global", d)
            self.info.globals[d.name] = VarInfo(d.name, d.type, d.dims, True, len(self.info.globals))
        for fn in p.functions:
            self.info.functions[fn.name] = FuncInfo(fn)
        for fn in p.functions:
            self._check_function(self.info.functions[fn.name])
        return self.info

    def _check_decl_shape(self, d: n.Decl):
        if d.type not in (n.INT, n.FLOAT):
            raise _err(f"unknown type {d.type!r}", d)
        if len(d.dims) > 2:
            raise _err("arrays have at most two dimensions", d)
        for k in d.dims:
            if not isinstance(k, int) or k <= 0:
                raise _err("array dimension must be a positive integer constant", d)
        if d.array_init:
            size = 1
            for k in d.dims:
                size *= k
            if len(d.array_init) > size:
                raise _err("too many array initializers", d)
            if d.type == n.INT and any(isinstance(v, float) for v in d.array_init):
                raise _err("type mismatch: float in int array initializer", d)

    def _check_function(self, fi: FuncInfo):
        fn = fi.decl
        if fn.memo is not None:
            if fn.memo.tolerance < 0 or fn.memo.capacity < 1:
                raise _err("invalid @memo parameters", fn)
        for prm in fn.params:
            if prm.name in fi.locals:
                raise _err(f"duplicate parameter {prm.name!r}", prm)
            if prm.name in self.info.globals or prm.name in self.info.functions:
                raise _err(f"parameter {prm.name!r} shadows a global name", prm)
            fi.locals[prm.name] = VarInfo(prm.name, prm.type, (), False, len(fi.locals))
        self._block(fi, fn.body, loop_depth=0)

    def _declare(self, fi: FuncInfo, d: n.Decl):
        self._check_decl_shape(d)
        if d.name in fi.locals:
            is_param = any(p.name == d.name for p in fi.decl.params)
            what = "shadows parameter" if is_param else "redeclares"
            raise _err(f"variable {d.name!r} {what} {d.name!r}", d)
        if d.name in self.info.globals or d.name in self.info.functions or d.name in BUILTINS:
            raise _err(f"variable {d.name!r} shadows a global name", d)
        if d.init is not None:
            t = self.expr(fi, d.init)
            if d.type == n.INT and t == n.FLOAT:
                raise _err("type mismatch: cannot assign float to int (use int(...))", d)
        fi.locals[d.name] = VarInfo(d.name, d.type, d.dims, False, len(fi.locals))

    def _block(self, fi: FuncInfo, block: n.Block, loop_depth: int):
        for s in block.stmts:
            self._stmt(fi, s, loop_depth)

    def _stmt(self, fi: FuncInfo, s, loop_depth: int):
        if isinstance(s, n.Decl):
            self._declare(fi, s)
        elif isinstance(s, n.Assign):
            self._assign(fi, s)
        elif isinstance(s, n.For):
            if isinstance(s.init, n.Decl):
                if s.init.dims:
                    raise _err("for-loop variable must be scalar", s.init)
                self._declare(fi, s.init)
            else:
                self._assign(fi, s.init)
            self._cond(fi, s.cond)
            self._assign(fi, s.step)
            self._check_perforation(s)
            self._block(fi, s.body, loop_depth + 1)
        elif isinstance(s, n.While):
            self._cond(fi, s.cond)
            self._check_perforation(s)
            self._block(fi, s.body, loop_depth + 1)
        elif isinstance(s, n.If):
            self._cond(fi, s.cond)
            self._block(fi, s.then, loop_depth)
            if s.orelse is not None:
                self._block(fi, s.orelse, loop_depth)
        elif isinstance(s, n.Return):
            ret = fi.decl.ret
            if s.value is None:
                if ret != n.VOID:
                    raise _err(f"return without value in function returning {ret}", s)
            else:
                if ret == n.VOID:
                    raise _err("return with a value in void function", s)
                t = self.expr(fi, s.value)
                if ret == n.INT and t == n.FLOAT:
                    raise _err("type mismatch: returning float from int function", s)
        elif isinstance(s, n.ExprStmt):
            self.call(fi, s.expr, statement=True)
        else:
            raise _err(f"unexpected statement {type(s).__name__}", s)

    def _check_perforation(self, loop):
        a = loop.approx
        if a is None:
            return
        if a.technique == "truncate":
            ok = isinstance(loop, n.For) and 0.0 <= a.param < 1.0
        elif a.technique == "sample":
            ok = isinstance(a.param, int) and a.param >= 1
        elif a.technique == "random":
            ok = 0.0 <= a.param < 1.0
        else:
            ok = False
        if not ok:
            raise _err(f"invalid perforation annotation {a}", loop)

    def _cond(self, fi, e):
        self.expr(fi, e)

    def _assign(self, fi: FuncInfo, s: n.Assign):
        target_t = self.lvalue(fi, s.target)
        t = self.expr(fi, s.value)
        if target_t == n.INT and t == n.FLOAT:
            raise _err("type mismatch: cannot assign float to int (use int(...))", s)

    def lvalue(self, fi: FuncInfo, target) -> str:
        v = self.info.lookup(fi, target.name)
        if v is None:
            raise _err(f"undeclared identifier {target.name!r}", target)
        if isinstance(target, n.Var):
            if v.dims:
                raise _err(f"array {target.name!r} used without index", target)
            return v.type
        return self._index(fi, target, v)

    def _index(self, fi, e: n.Index, v: VarInfo) -> str:
        if len(e.indices) != len(v.dims):
            raise _err(f"{e.name!r} expects {len(v.dims)} indices", e)
        for ix in e.indices:
            if self.expr(fi, ix) != n.INT:
                raise _err("array index must be int", ix)
        return v.type

    def expr(self, fi: FuncInfo, e) -> str:
        if isinstance(e, n.IntLit):
            if not INT_MIN <= e.value <= INT_MAX:
                raise _err("integer literal out of 64-bit range", e)
            return n.INT
        if isinstance(e, n.FloatLit):
            return n.FLOAT
        if isinstance(e, n.Var):
            v = self.info.lookup(fi, e.name)
            if v is None:
                raise _err(f"undeclared identifier {e.name!r}", e)
            if v.dims:
                raise _err(f"array {e.name!r} used without index", e)
            return v.type
        if isinstance(e, n.Index):
            v = self.info.lookup(fi, e.name)
            if v is None:
                raise _err(f"undeclared identifier {e.name!r}", e)
            if not v.dims:
                raise _err(f"{e.name!r} is not an array", e)
            return self._index(fi, e, v)
        if isinstance(e, n.Unary):
            t = self.expr(fi, e.operand)
            return t if e.op == "-" else n.INT
        if isinstance(e, n.Binary):
            lt, rt = self.expr(fi, e.left), self.expr(fi, e.right)
            if e.op in ARITH:
                if e.op == "%" and (lt, rt) != (n.INT, n.INT):
                    raise _err("type mismatch: % needs int operands", e)
                return promote(lt, rt)
            if e.op in COMPARE or e.op in LOGIC:
                return n.INT
            raise _err(f"unknown operator {e.op!r}", e)
        if isinstance(e, n.Call):
            t = self.call(fi, e, statement=False)
            return t
        raise _err(f"unexpected expression {type(e).__name__}", e)

    def _args(self, fi, call: n.Call, expected: tuple):
        if len(call.args) != len(expected):
            raise _err(f"{call.name!r} takes {len(expected)} argument(s)", call)
        for a, want in zip(call.args, expected):
            t = self.expr(fi, a)
            if want == n.INT and t == n.FLOAT:
                raise _err(f"type mismatch in argument to {call.name!r}", a)

    def call(self, fi: FuncInfo, c: n.Call, statement: bool) -> str:
        name = c.name
        if name in EMITS:
            types, kind = EMITS[name]
            if not statement:
                raise _err(f"{name} has no value", c)
            if self.program.output_decl.kind != kind:
                raise _err(f"{name} requires '{kind}' output", c)
            self._args(fi, c, types)
            if name == "emit_word" and isinstance(c.args[0], n.IntLit):
                if not 0 <= c.args[0].value < len(self.program.string_table):
                    raise _err("word index outside the words table", c)
            return n.VOID
        if name in INPUTS:
            types, ret = INPUTS[name]
            self._args(fi, c, types)
            return ret
        if name in CASTS:
            if len(c.args) != 1:
                raise _err(f"{name}() takes 1 argument", c)
            self.expr(fi, c.args[0])
            return CASTS[name]
        if name in INTRINSICS:
            if len(c.args) != INTRINSICS[name]:
                raise _err(f"{name} takes {INTRINSICS[name]} argument(s)", c)
            ts = [self.expr(fi, a) for a in c.args]
            if name in ("exp", "sqrt"):
                return n.FLOAT
            return promote(*ts) if len(ts) == 2 else ts[0]
        target = self.info.functions.get(name)
        if target is None:
            raise _err(f"undeclared identifier {name!r}", c)
        self._args(fi, c, tuple(p.type for p in target.decl.params))
        if target.decl.ret == n.VOID and not statement:
            raise _err(f"void function {name!r} used as a value", c)
        return target.decl.ret


def check(program: n.Program) -> ProgramInfo:
    return Checker(program).run()


def expr_type(info: ProgramInfo, fi: FuncInfo, e) -> str:
    """Static type of an already-checked expression."""
    if isinstance(e, n.IntLit):
        return n.INT
    if isinstance(e, n.FloatLit):
        return n.FLOAT
    if isinstance(e, (n.Var, n.Index)):
        return info.lookup(fi, e.name).type
    if isinstance(e, n.Unary):
        return expr_type(info, fi, e.operand) if e.op == "-" else n.INT
    if isinstance(e, n.Binary):
        if e.op in ARITH:
            return promote(expr_type(info, fi, e.left), expr_type(info, fi, e.right))
        return n.INT
    if isinstance(e, n.Call):
        if e.name in EMITS:
            return n.VOID
        if e.name in INPUTS:
            return INPUTS[e.name][1]
        if e.name in CASTS:
            return CASTS[e.name]
        if e.name in INTRINSICS:
            if e.name in ("exp", "sqrt"):
                return n.FLOAT
            ts = [expr_type(info, fi, a) for a in e.args]
            return promote(*ts) if len(ts) == 2 else ts[0]
        return info.functions[e.name].decl.ret
    raise TypeError(e)
