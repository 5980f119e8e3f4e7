"""Exception types shared across the package."""


class ParseError(ValueError):
    """Malformed input data (bad header, out-of-range index, bad value)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantError(RuntimeError):
    """A structural invariant (partition coverage, dimension contract) was violated."""
