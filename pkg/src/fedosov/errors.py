from __future__ import annotations


class FedosovError(Exception):
    """Base class for errors raised by this package."""


class StructuralError(FedosovError, ValueError):
    """Mismatched shapes, variable counts, policies or index ranges."""


class DivisibilityError(FedosovError, ArithmeticError):
    """A term had too small a power of lambda to be divided.

    Upstream this means the sign or index conventions are inconsistent, so it
    is never swallowed.
    """

    def __init__(self, message: str, term=None):
        super().__init__(message)
        self.term = term


class ConvergenceError(FedosovError, RuntimeError):
    """A fixed-point iteration did not stabilise within its pass budget."""


class GroupBoundError(FedosovError, ValueError):
    """A group or subgroup enumeration exceeded its configured budget."""


class FlatnessError(FedosovError, ArithmeticError):
    """Omega + omega did not vanish; ``residual`` holds the nonzero form."""

    def __init__(self, message: str, residual=None):
        super().__init__(message)
        self.residual = residual


class ParseError(FedosovError, ValueError):
    def __init__(self, message: str, text: str = "", pos: int = 0, line: int | None = None):
        self.text = text
        self.pos = pos
        self.line = line
        self.column = pos + 1
        where = f"line {line}, column {self.column}" if line is not None else f"column {self.column}"
        super().__init__(f"{message} at {where}")
