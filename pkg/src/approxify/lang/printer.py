from typing import List

from . import nodes as n

_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7

_ESC = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\0": "\\0"}


def _num(v) -> str:
    if isinstance(v, float):
        r = repr(v)
        if "e" not in r and "." not in r and "inf" not in r and "nan" not in r:
            r += ".0"
        return r
    return str(v)


def _quote(s: str) -> str:
    return '"' + "".join(_ESC.get(ch, ch) for ch in s) + '"'


def expr(e, parent_prec: int = 0, right: bool = False) -> str:
    if isinstance(e, n.IntLit):
        return str(e.value)
    if isinstance(e, n.FloatLit):
        return _num(e.value)
    if isinstance(e, n.Var):
        return e.name
    if isinstance(e, n.Index):
        return e.name + "".join(f"[{expr(i)}]" for i in e.indices)
    if isinstance(e, n.Call):
        return f"{e.name}({', '.join(expr(a) for a in e.args)})"
    if isinstance(e, n.Unary):
        text = e.op + expr(e.operand, _UNARY_PREC)
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(e, n.Binary):
        p = _PREC[e.op]
        text = f"{expr(e.left, p)} {e.op} {expr(e.right, p, right=True)}"
        if p < parent_prec or (right and p == parent_prec):
            return f"({text})"
        return text
    raise TypeError(e)


class _Printer:
    def __init__(self):
        self.lines: List[str] = []
        self.depth = 0

    def emit(self, text: str):
        self.lines.append("    " * self.depth + text)

    def decl(self, d: n.Decl) -> str:
        s = f"{d.type} {d.name}" + "".join(f"[{k}]" for k in d.dims)
        if d.init is not None:
            s += f" = {expr(d.init)}"
        elif d.array_init:
            s += " = {" + ", ".join(_num(v) for v in d.array_init) + "}"
        return s

    def assign(self, a: n.Assign) -> str:
        return f"{expr(a.target)} = {expr(a.value)}"

    def perforation(self, a) -> str:
        if a is None:
            return ""
        if a.technique == "truncate":
            return f"@truncate({_num(float(a.param))}) "
        if a.technique == "sample":
            return f"@sample({a.param}) "
        return f"@random({_num(float(a.param))}, {a.seed}) "

    def block(self, b: n.Block, head: str):
        self.emit(head + " {")
        self.depth += 1
        for s in b.stmts:
            self.stmt(s)
        self.depth -= 1
        self.emit("}")

    def stmt(self, s):
        if isinstance(s, n.Decl):
            self.emit(self.decl(s) + ";")
        elif isinstance(s, n.Assign):
            self.emit(self.assign(s) + ";")
        elif isinstance(s, n.ExprStmt):
            self.emit(expr(s.expr) + ";")
        elif isinstance(s, n.Return):
            self.emit("return;" if s.value is None else f"return {expr(s.value)};")
        elif isinstance(s, n.For):
            init = self.decl(s.init) if isinstance(s.init, n.Decl) else self.assign(s.init)
            head = f"{self.perforation(s.approx)}for ({init}; {expr(s.cond)}; {self.assign(s.step)})"
            self.block(s.body, head)
        elif isinstance(s, n.While):
            self.block(s.body, f"{self.perforation(s.approx)}while ({expr(s.cond)})")
        elif isinstance(s, n.If):
            self.if_stmt(s, "if")
        else:
            raise TypeError(s)

    def if_stmt(self, s: n.If, head: str):
        self.block(s.then, f"{head} ({expr(s.cond)})")
        if s.orelse is None:
            return
        self.lines.pop()
        stmts = s.orelse.stmts
        if len(stmts) == 1 and isinstance(stmts[0], n.If):
            self.if_stmt(stmts[0], "} else if")
        else:
            self.block(s.orelse, "} else")

    def function(self, fn: n.FunctionDecl):
        if fn.memo is not None:
            self.emit(f"@memo({_num(float(fn.memo.tolerance))}, {fn.memo.capacity})")
        params = ", ".join(f"{p.name}: {p.type}" for p in fn.params)
        ret = "" if fn.ret == n.VOID else f" -> {fn.ret}"
        self.block(fn.body, f"func {fn.name}({params}){ret}")


def pretty_print(p: n.Program) -> str:
    """Render a program as ApproxC source that parses back to the same tree."""
    pr = _Printer()
    out = p.output_decl
    if out.kind == "image":
        pr.emit(f"output image({out.rows}, {out.cols});")
    else:
        pr.emit(f"output {out.kind};")
    if p.string_table:
        pr.emit("words { " + ", ".join(_quote(w) for w in p.string_table) + " };")
    for g in p.globals:
        pr.emit(pr.decl(g) + ";")
    for fn in p.functions:
        pr.emit("")
        pr.function(fn)
    return "\n".join(pr.lines) + "\n"
