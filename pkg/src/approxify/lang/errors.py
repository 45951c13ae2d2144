class ApproxCError(Exception):
    """Base class for front-end diagnostics."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class SyntaxError(ApproxCError):  # noqa: A001 - mirrors the diagnostic name
    pass


class SemanticError(ApproxCError):
    pass
