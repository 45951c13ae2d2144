"""Recursive-descent parser for ApproxC."""

from typing import List, Optional

from . import nodes as n
from .errors import SemanticError, SyntaxError
from .lexer import Token, tokenize

BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]

LOOP_ANNOTATIONS = {"@truncate", "@sample", "@random"}


class Parser:
    def __init__(self, text: str):
        self.toks: List[Token] = tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.text if tok.kind != "eof" else "end of input"
        raise SyntaxError(f"{msg} (found {found!r})", tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error("expected identifier")
        return self.advance()

    def int_literal(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        if self.tok.kind != "int":
            self.error("expected integer literal")
        v = int(self.advance().text)
        return -v if neg else v

    def number(self):
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        t = self.tok
        if t.kind == "int":
            v = int(t.text)
        elif t.kind == "float":
            v = float(t.text)
        else:
            self.error("expected number")
        self.advance()
        return -v if neg else v

    @staticmethod
    def pos(t: Token):
        return (t.line, t.col)

    # -- top level -----------------------------------------------------------

    def program(self) -> n.Program:
        functions, globals_ = [], []
        words: tuple = ()
        output = None
        while self.tok.kind != "eof":
            t = self.tok
            if self.at("output"):
                if output is not None:
                    self.error("duplicate output declaration")
                output = self.output_decl()
            elif self.at("words"):
                if words:
                    self.error("duplicate words table")
                words = self.words_decl()
            elif self.at("func") or t.kind == "annot":
                functions.append(self.function())
            elif self.at("int") or self.at("float"):
                globals_.append(self.decl())
                self.expect(";")
            else:
                self.error("expected declaration")
        if output is None:
            output = _infer_output(functions)
        return n.Program(tuple(functions), tuple(globals_), words, output)

    def output_decl(self) -> n.OutputKind:
        self.expect("output")
        kind = self.ident()
        if kind.text == "image":
            self.expect("(")
            rows = self.int_literal()
            self.expect(",")
            cols = self.int_literal()
            self.expect(")")
            self.expect(";")
            return n.OutputKind("image", rows, cols)
        if kind.text not in ("numeric", "text"):
            self.error("output kind must be numeric, text or image", kind)
        self.expect(";")
        return n.OutputKind(kind.text)

    def words_decl(self) -> tuple:
        self.expect("words")
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.tok.kind != "string":
                self.error("expected string literal")
            out.append(self.advance().text)
            if not self.at("}"):
                self.expect(",")
        self.expect("}")
        self.expect(";")
        return tuple(out)

    def function(self) -> n.FunctionDecl:
        memo = None
        while self.tok.kind == "annot":
            a = self.advance()
            if a.text != "@memo":
                self.error("only @memo may annotate a function", a)
            self.expect("(")
            tol = float(self.number())
            self.expect(",")
            cap = self.int_literal()
            self.expect(")")
            memo = n.Memo(tol, cap)
        start = self.expect("func")
        name = self.ident().text
        self.expect("(")
        params = []
        while not self.at(")"):
            p = self.ident()
            self.expect(":")
            params.append(n.Param(p.text, self.scalar_type(), self.pos(p)))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        ret = n.VOID
        if self.at("->"):
            self.advance()
            ret = self.scalar_type()
        body = self.block()
        return n.FunctionDecl(name, tuple(params), ret, body, memo, self.pos(start))

    def scalar_type(self) -> str:
        if self.at("int") or self.at("float"):
            return self.advance().text
        self.error("expected type")

    # -- statements ----------------------------------------------------------

    def block(self) -> n.Block:
        start = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return n.Block(tuple(stmts), self.pos(start))

    def decl(self) -> n.Decl:
        ty = self.advance()
        name = self.ident().text
        dims = []
        while self.at("["):
            self.advance()
            if self.tok.kind != "int":
                raise_nonconst(self.tok)
            dims.append(int(self.advance().text))
            self.expect("]")
        init, array_init = None, ()
        if self.at("="):
            self.advance()
            if dims:
                self.expect("{")
                vals = []
                while not self.at("}"):
                    vals.append(self.number())
                    if not self.at("}"):
                        self.expect(",")
                self.expect("}")
                array_init = tuple(vals)
            else:
                init = self.expr()
        return n.Decl(ty.text, name, tuple(dims), init, array_init, self.pos(ty))

    def perforation(self) -> Optional[n.Perforation]:
        approx = None
        while self.tok.kind == "annot":
            a = self.advance()
            if a.text not in LOOP_ANNOTATIONS:
                self.error("unknown loop annotation", a)
            self.expect("(")
            if a.text == "@truncate":
                approx = n.Perforation("truncate", float(self.number()))
            elif a.text == "@sample":
                approx = n.Perforation("sample", self.int_literal())
            else:
                thr = float(self.number())
                self.expect(",")
                approx = n.Perforation("random", thr, self.int_literal())
            self.expect(")")
        return approx

    def statement(self):
        t = self.tok
        if t.kind == "annot":
            approx = self.perforation()
            if self.at("for"):
                return self.for_stmt(approx)
            if self.at("while"):
                return self.while_stmt(approx)
            self.error("loop annotation must precede a loop")
        if self.at("int") or self.at("float"):
            d = self.decl()
            self.expect(";")
            return d
        if self.at("for"):
            return self.for_stmt(None)
        if self.at("while"):
            return self.while_stmt(None)
        if self.at("if"):
            return self.if_stmt()
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return n.Return(value, self.pos(t))
        if t.kind == "ident" and self.peek().kind == "op" and self.peek().text == "(":
            call = self.postfix()
            self.expect(";")
            return n.ExprStmt(call, self.pos(t))
        a = self.assignment()
        self.expect(";")
        return a

    def assignment(self) -> n.Assign:
        t = self.tok
        target = self.postfix()
        if not isinstance(target, (n.Var, n.Index)):
            self.error("invalid assignment target", t)
        self.expect("=")
        return n.Assign(target, self.expr(), self.pos(t))

    def for_stmt(self, approx) -> n.For:
        t = self.expect("for")
        self.expect("(")
        init = self.decl() if (self.at("int") or self.at("float")) else self.assignment()
        self.expect(";")
        cond = self.expr()
        self.expect(";")
        step = self.assignment()
        self.expect(")")
        return n.For(init, cond, step, self.block(), approx, self.pos(t))

    def while_stmt(self, approx) -> n.While:
        t = self.expect("while")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        return n.While(cond, self.block(), approx, self.pos(t))

    def if_stmt(self) -> n.If:
        t = self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse = None
        if self.at("else"):
            self.advance()
            if self.at("if"):
                inner = self.if_stmt()
                orelse = n.Block((inner,), inner.pos)
            else:
                orelse = self.block()
        return n.If(cond, then, orelse, self.pos(t))

    # -- expressions ---------------------------------------------------------

    def expr(self, level: int = 0):
        if level == len(BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        ops = BINARY_LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.advance()
            right = self.expr(level + 1)
            left = n.Binary(op.text, left, right, self.pos(op))
        return left

    def unary(self):
        if self.at("-") or self.at("!"):
            op = self.advance()
            return n.Unary(op.text, self.unary(), self.pos(op))
        return self.postfix()

    def postfix(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return n.IntLit(int(t.text), self.pos(t))
        if t.kind == "float":
            self.advance()
            return n.FloatLit(float(t.text), self.pos(t))
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if (self.at("int") or self.at("float")) and self.peek().text == "(":
            name = self.advance().text
            return n.Call(name, self.call_args(), self.pos(t))
        if t.kind != "ident":
            self.error("expected expression")
        self.advance()
        if self.at("("):
            return n.Call(t.text, self.call_args(), self.pos(t))
        if self.at("["):
            idx = []
            while self.at("["):
                self.advance()
                idx.append(self.expr())
                self.expect("]")
            return n.Index(t.text, tuple(idx), self.pos(t))
        return n.Var(t.text, self.pos(t))

    def call_args(self) -> tuple:
        self.expect("(")
        args = []
        while not self.at(")"):
            args.append(self.expr())
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return tuple(args)


def raise_nonconst(tok: Token):
    raise SemanticError("array dimension must be a positive integer constant", tok.line, tok.col)


def _infer_output(functions) -> n.OutputKind:
    for fn in functions:
        for _, node in n.walk(fn.body):
            if isinstance(node, n.Call) and node.name == "emit_word":
                return n.TEXT_OUTPUT
    return n.NUMERIC_OUTPUT


def parse_syntax(text: str) -> n.Program:
    """Parse without semantic checks."""
    return Parser(text).program()
