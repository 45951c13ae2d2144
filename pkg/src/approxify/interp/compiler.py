"""Lower a checked Program to per-function instruction lists.

Instructions are ``(opcode, a, b, cycles)`` tuples. Cycle costs come from the
PlatformModel and are attached to the instruction that models the tree node
they belong to, so executing the list charges exactly the per-node costs.
Control-flow glue (unconditional jumps, implicit int->float widening, the
back-edge trigger marker) is free.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..lang import nodes as n
from ..lang.errors import SemanticError
from ..lang.loops import counted_loop
from ..lang.semantics import FuncInfo, ProgramInfo, check, expr_type
from .platform import PlatformModel

# opcodes
(CONST, LOADL, LOADG, STOREL, STOREG, LOADEL, STOREEL, BINI, BINF, CMP, NEG,
 NOT, JF, JT, JMP, TOBOOL, TOFLOAT, CALL, RET, INTR, CASTI, CASTF, IN_NUM,
 IN_PIX, IN_LEN, IN_CHAR, IN_TLEN, EMIT_NUM, EMIT_PIX, EMIT_WORD, POP, TRIGGER,
 ARRINIT, TRUNC_INIT, TRUNC_GUARD, SAMPLE_GUARD, RAND_GUARD, SETL) = range(38)

OPNAMES = {v: k for k, v in list(globals().items()) if k.isupper() and isinstance(v, int)}


@dataclass
class CompiledFunction:
    name: str
    index: int
    params: Tuple[str, ...]
    param_float: Tuple[bool, ...]
    ret: str
    memo: Optional[n.Memo]
    code: List[tuple] = field(default_factory=list)
    paths: List[tuple] = field(default_factory=list)
    local_init: list = field(default_factory=list)

    def new_locals(self) -> list:
        return [list(v) if isinstance(v, list) else v for v in self.local_init]


@dataclass
class CompiledProgram:
    program: n.Program
    platform: PlatformModel
    functions: List[CompiledFunction]
    fn_index: Dict[str, int]
    global_init: list
    output: n.OutputKind
    string_table: Tuple[str, ...]
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def main(self) -> CompiledFunction:
        return self.functions[self.fn_index["main"]]

    def new_globals(self) -> list:
        return [list(v) if isinstance(v, list) else v for v in self.global_init]


def _zero(ty: str):
    return 0.0 if ty == n.FLOAT else 0


def _storage(ty: str, dims: tuple, values=()):
    if not dims:
        return _zero(ty)
    size = 1
    for d in dims:
        size *= d
    arr = [_zero(ty)] * size
    conv = float if ty == n.FLOAT else int
    for i, v in enumerate(values):
        arr[i] = conv(v)
    return arr


class _Label:
    __slots__ = ("at",)

    def __init__(self):
        self.at = None


class _FunctionCompiler:
    def __init__(self, pc: "Compiler", fi: FuncInfo, cf: CompiledFunction):
        self.pc = pc
        self.info = pc.info
        self.fi = fi
        self.cf = cf
        self.cost = pc.platform.cycle_costs
        self.is_main = fi.decl.name == "main"
        self.code = cf.code
        self.paths = cf.paths
        self.fixups: List[Tuple[int, _Label]] = []
        self.path: tuple = ()
        self.nslots = fi.nslots

    # -- helpers ---------------------------------------------------------------

    def op(self, opcode, a=None, b=None, cost=0):
        self.code.append((opcode, a, b, cost))
        self.paths.append(self.path)

    def jump(self, opcode, label: _Label, cost=0, b=None):
        self.fixups.append((len(self.code), label))
        self.op(opcode, None, b, cost)

    def mark(self, label: _Label):
        label.at = len(self.code)

    def hidden_slot(self, init=0) -> int:
        slot = self.nslots
        self.nslots += 1
        self.cf.local_init.append(init)
        return slot

    def var(self, name: str):
        v = self.fi.locals.get(name)
        if v is not None:
            return v, False
        return self.info.globals[name], True

    def var_type(self, name: str) -> Optional[str]:
        v = self.info.lookup(self.fi, name)
        return v.type if v is not None else None

    def type_of(self, e) -> str:
        return expr_type(self.info, self.fi, e)

    def widen(self, e, want: str):
        """Compile e and widen an int result to float when ``want`` is float."""
        t = self.expr(e)
        if want == n.FLOAT and t == n.INT:
            self.op(TOFLOAT)

    def at_child(self, base: tuple, i: int):
        self.path = base + (i,)

    # -- function --------------------------------------------------------------

    def compile(self):
        fn = self.fi.decl
        init = []
        for name, v in self.fi.locals.items():
            init.append(_storage(v.type, v.dims))
        self.cf.local_init = init
        self.block(fn.body, ())
        self.path = ()
        if fn.ret != n.VOID:
            self.op(CONST, _zero(fn.ret))
        self.op(RET, fn.ret != n.VOID, None, 0 if self.is_main else self.cost["return"])
        for idx, label in self.fixups:
            op, _, b, c = self.code[idx]
            self.code[idx] = (op, label.at, b, c)

    # -- statements --------------------------------------------------------------

    def block(self, b: n.Block, path: tuple):
        for i, s in enumerate(b.stmts):
            self.stmt(s, path + (i,))

    def store(self, target, value, path: tuple, value_index: int):
        v, is_g = self.var(target.name)
        if isinstance(target, n.Var):
            self.at_child(path, value_index)
            self.widen(value, v.type)
            self.path = path
            self.op(STOREG if is_g else STOREL, v.slot, None, self.cost["store"])
            return
        for i, ix in enumerate(target.indices):
            self.path = path + (0, i)
            self.expr(ix)
        self.at_child(path, value_index)
        self.widen(value, v.type)
        self.path = path
        self.op(STOREEL, v.slot, (is_g, v.dims), self.cost["array"])

    def decl(self, d: n.Decl, path: tuple):
        if d.init is not None:
            self.store(n.Var(d.name), d.init, path, 0)
        elif d.array_init and d.name in self.fi.locals:
            v = self.fi.locals[d.name]
            self.path = path
            self.op(ARRINIT, v.slot, tuple(_storage(v.type, v.dims, d.array_init)),
                    self.cost["store"] * len(d.array_init))

    def stmt(self, s, path: tuple):
        self.path = path
        if isinstance(s, n.Decl):
            self.decl(s, path)
        elif isinstance(s, n.Assign):
            self.store(s.target, s.value, path, 1)
        elif isinstance(s, n.ExprStmt):
            self.at_child(path, 0)
            t = self.call(s.expr, statement=True)
            if t != n.VOID:
                self.op(POP)
        elif isinstance(s, n.Return):
            if s.value is not None:
                self.at_child(path, 0)
                self.widen(s.value, self.fi.decl.ret)
            self.path = path
            self.op(RET, s.value is not None, None, 0 if self.is_main else self.cost["return"])
        elif isinstance(s, n.If):
            l_else, l_end = _Label(), _Label()
            self.at_child(path, 0)
            self.expr(s.cond)
            self.path = path
            self.jump(JF, l_else, self.cost["branch"])
            self.block(s.then, path + (1,))
            if s.orelse is not None:
                self.jump(JMP, l_end)
                self.mark(l_else)
                self.block(s.orelse, path + (2,))
            else:
                self.mark(l_else)
            self.mark(l_end)
        elif isinstance(s, n.For):
            self.for_loop(s, path)
        elif isinstance(s, n.While):
            self.while_loop(s, path)
        else:
            raise TypeError(s)

    def perforation_setup(self, loop, path: tuple):
        """Emit loop-entry code for a perforation annotation; return guard info."""
        a = loop.approx
        if a is None:
            return None
        c = self.cost
        if a.technique == "truncate":
            info = counted_loop(loop, self.var_type, set(self.info.globals), set(self.info.functions))
            if info is None:
                raise SemanticError("@truncate requires a counted loop", *loop.pos)
            counter, limit = self.hidden_slot(), self.hidden_slot()
            v, is_g = self.var(info.var)
            self.op(LOADG if is_g else LOADL, v.slot, None, c["load"])
            self.path = path + (1,)
            self.expr(info.bound)
            self.path = path
            self.op(TRUNC_INIT, (counter, limit), (info.op, info.step, float(a.param)),
                    3 * c["int_arith"] + 2 * c["store"])
            return ("truncate", counter, limit)
        if a.technique == "sample":
            counter = self.hidden_slot()
            self.op(SETL, counter, 0, c["store"])
            return ("sample", counter, int(a.param))
        slot = self.pc.rng_slot(a.seed)
        return ("random", slot, float(a.param))

    def guard(self, g, l_end: _Label, l_skip: _Label):
        if g is None:
            return
        c = self.cost
        if g[0] == "truncate":
            self.jump(TRUNC_GUARD, l_end, c["compare"] + c["branch"] + c["int_arith"] + c["store"],
                      (g[1], g[2]))
        elif g[0] == "sample":
            self.jump(SAMPLE_GUARD, l_skip,
                      2 * c["int_arith"] + c["compare"] + c["branch"] + c["store"], (g[1], g[2]))
        else:
            self.jump(RAND_GUARD, l_skip,
                      self.pc.platform.rng_draw_cycles + c["compare"] + c["branch"], (g[1], g[2]))

    def for_loop(self, s: n.For, path: tuple):
        l_cond, l_step, l_end = _Label(), _Label(), _Label()
        if isinstance(s.init, n.Decl):
            self.decl(s.init, path + (0,))
        else:
            self.store(s.init.target, s.init.value, path + (0,), 1)
        self.path = path
        g = self.perforation_setup(s, path)
        self.mark(l_cond)
        self.at_child(path, 1)
        self.expr(s.cond)
        self.path = path
        self.jump(JF, l_end, self.cost["branch"])
        self.guard(g, l_end, l_step)
        self.block(s.body, path + (3,))
        self.mark(l_step)
        self.store(s.step.target, s.step.value, path + (2,), 1)
        self.path = path
        self.op(TRIGGER)
        self.jump(JMP, l_cond)
        self.mark(l_end)

    def while_loop(self, s: n.While, path: tuple):
        l_cond, l_back, l_end = _Label(), _Label(), _Label()
        g = self.perforation_setup(s, path)
        self.mark(l_cond)
        self.at_child(path, 0)
        self.expr(s.cond)
        self.path = path
        self.jump(JF, l_end, self.cost["branch"])
        self.guard(g, l_end, l_back)
        self.block(s.body, path + (1,))
        self.mark(l_back)
        self.path = path
        self.op(TRIGGER)
        self.jump(JMP, l_cond)
        self.mark(l_end)

    # -- expressions ---------------------------------------------------------------

    def expr(self, e) -> str:
        base = self.path
        c = self.cost
        if isinstance(e, n.IntLit):
            self.op(CONST, e.value, None, c["literal"])
            return n.INT
        if isinstance(e, n.FloatLit):
            self.op(CONST, e.value, None, c["literal"])
            return n.FLOAT
        if isinstance(e, n.Var):
            v, is_g = self.var(e.name)
            self.op(LOADG if is_g else LOADL, v.slot, None, c["load"])
            return v.type
        if isinstance(e, n.Index):
            v, is_g = self.var(e.name)
            for i, ix in enumerate(e.indices):
                self.at_child(base, i)
                self.expr(ix)
            self.path = base
            self.op(LOADEL, v.slot, (is_g, v.dims), c["array"])
            return v.type
        if isinstance(e, n.Unary):
            self.at_child(base, 0)
            t = self.expr(e.operand)
            self.path = base
            if e.op == "-":
                self.op(NEG, None, None, c["float_arith" if t == n.FLOAT else "int_arith"])
                return t
            self.op(NOT, None, None, c["compare"])
            return n.INT
        if isinstance(e, n.Binary):
            if e.op in ("&&", "||"):
                l_short, l_end = _Label(), _Label()
                self.at_child(base, 0)
                self.expr(e.left)
                self.path = base
                self.jump(JF if e.op == "&&" else JT, l_short, c["branch"])
                self.at_child(base, 1)
                self.expr(e.right)
                self.path = base
                self.op(TOBOOL)
                self.jump(JMP, l_end)
                self.mark(l_short)
                self.op(CONST, 0 if e.op == "&&" else 1)
                self.mark(l_end)
                return n.INT
            self.at_child(base, 0)
            lt = self.expr(e.left)
            self.at_child(base, 1)
            rt = self.expr(e.right)
            self.path = base
            if e.op in ("+", "-", "*", "/", "%"):
                if n.FLOAT in (lt, rt):
                    self.op(BINF, e.op, None, c["float_arith"])
                    return n.FLOAT
                self.op(BINI, e.op, None, c["int_arith"])
                return n.INT
            self.op(CMP, e.op, None, c["compare"])
            return n.INT
        if isinstance(e, n.Call):
            return self.call(e, statement=False)
        raise TypeError(e)

    def args(self, call: n.Call, types):
        base = self.path
        for i, (a, t) in enumerate(zip(call.args, types)):
            self.at_child(base, i)
            self.widen(a, t)
        self.path = base

    def call(self, e: n.Call, statement: bool) -> str:
        c = self.cost
        name = e.name
        if name == "emit_num":
            self.args(e, (n.FLOAT,))
            self.op(EMIT_NUM, None, None, c["emit"])
            return n.VOID
        if name == "emit_pixel":
            self.args(e, (n.INT, n.INT, n.FLOAT))
            self.op(EMIT_PIX, None, None, c["emit"])
            return n.VOID
        if name == "emit_word":
            self.args(e, (n.INT,))
            self.op(EMIT_WORD, None, None, c["emit"])
            return n.VOID
        simple_inputs = {"in_num": (IN_NUM, 1), "in_pixel": (IN_PIX, 2), "in_len": (IN_LEN, 0),
                         "in_char": (IN_CHAR, 1), "in_text_len": (IN_TLEN, 0)}
        if name in simple_inputs:
            opc, k = simple_inputs[name]
            self.args(e, (n.INT,) * k)
            self.op(opc, None, None, c["array"])
            return n.FLOAT if name == "in_num" else n.INT
        if name in ("int", "float"):
            self.args(e, (None,))
            self.op(CASTI if name == "int" else CASTF, None, None, c["int_arith"])
            return name
        if name in ("abs", "min", "max", "exp", "sqrt"):
            ts = [self.type_of(a) for a in e.args]
            if name in ("exp", "sqrt"):
                want, ret = n.FLOAT, n.FLOAT
            else:
                ret = n.FLOAT if n.FLOAT in ts else n.INT
                want = ret
            self.args(e, (want,) * len(e.args))
            self.op(INTR, name, None, c["intrinsic"])
            return ret
        target = self.pc.compiled[self.pc.fn_index[name]]
        self.args(e, tuple(n.FLOAT if f else n.INT for f in target.param_float))
        self.op(CALL, target.index, len(e.args), c["call"])
        return target.ret


class Compiler:
    def __init__(self, program: n.Program, platform: PlatformModel, info: Optional[ProgramInfo] = None):
        self.program = program
        self.platform = platform
        self.info = info or check(program)
        self.fn_index = {fn.name: i for i, fn in enumerate(program.functions)}
        self.global_init = []
        self.compiled: List[CompiledFunction] = []

    def rng_slot(self, seed: int) -> int:
        from .machine import seed_rng

        self.global_init.append(seed_rng(seed))
        return len(self.global_init) - 1

    def run(self) -> CompiledProgram:
        for d in self.program.globals:
            v = self.info.globals[d.name]
            if d.init is not None:
                val = d.init.value if not isinstance(d.init, n.Unary) else -d.init.operand.value
                self.global_init.append(float(val) if v.type == n.FLOAT else int(val))
            else:
                self.global_init.append(_storage(v.type, v.dims, d.array_init))
        for i, fn in enumerate(self.program.functions):
            self.compiled.append(CompiledFunction(
                fn.name, i, tuple(p.name for p in fn.params),
                tuple(p.type == n.FLOAT for p in fn.params), fn.ret, fn.memo))
        for fn in self.program.functions:
            fi = self.info.functions[fn.name]
            _FunctionCompiler(self, fi, self.compiled[self.fn_index[fn.name]]).compile()
        return CompiledProgram(self.program, self.platform, self.compiled, self.fn_index,
                               self.global_init, self.program.output_decl, self.program.string_table)


def compile_program(program: n.Program, platform: PlatformModel) -> CompiledProgram:
    return Compiler(program, platform).run()
