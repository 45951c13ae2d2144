import re
from typing import List, NamedTuple

from .errors import SyntaxError

KEYWORDS = {
    "func", "int", "float", "void", "for", "while", "if", "else", "return",
    "output", "words",
}


class Token(NamedTuple):
    kind: str  # "int", "float", "string", "ident", "kw", "op", "annot", "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<float>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<char>'(?:[^'\\\n]|\\[nt'\\0])')
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<annot>@[A-Za-z_]\w*)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op>->|==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\];,:])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "'": "'", "\\": "\\", "0": "\0", '"': '"'}


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(text: str) -> List[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise SyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        pos = m.end()
        if kind == "nl":
            line += 1
            line_start = pos
            continue
        if kind in ("ws", "comment"):
            continue
        if kind == "ident" and lexeme in KEYWORDS:
            kind = "kw"
        elif kind == "char":
            kind, lexeme = "int", str(ord(_unescape(lexeme[1:-1])))
        elif kind == "string":
            lexeme = _unescape(lexeme[1:-1])
        tokens.append(Token(kind, lexeme, line, col))
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
