"""ApproxC front end: parsing, checking and pretty-printing."""

from typing import Union

from .errors import ApproxCError, SemanticError, SyntaxError
from .nodes import NodePath, Program
from .parser import parse_syntax
from .printer import pretty_print
from .semantics import ProgramInfo, check


def parse_source(text: Union[str, bytes]) -> Program:
    """Parse and check ApproxC source text.

    Raises :class:`SyntaxError` or :class:`SemanticError` with line/column.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SyntaxError(f"source is not valid UTF-8: {exc}") from None
    program = parse_syntax(text)
    check(program)
    return program


def load_source(path) -> Program:
    with open(path, "rb") as fh:
        return parse_source(fh.read())


__all__ = [
    "ApproxCError", "SemanticError", "SyntaxError", "NodePath", "Program",
    "ProgramInfo", "check", "load_source", "parse_source", "pretty_print",
]
