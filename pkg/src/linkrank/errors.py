"""Exception hierarchy shared by all linkrank modules."""


class LinkRankError(Exception):
    """Base class for every error raised by this package."""


class ParseError(LinkRankError, ValueError):
    """Malformed input file. Carries the 1-based line (or row) number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownVertexError(LinkRankError, KeyError):
    def __str__(self):
        return f"unknown vertex {self.args[0]!r}"


class BalanceError(LinkRankError, ValueError):
    pass


class TrainingError(LinkRankError, ValueError):
    pass


class MetricError(LinkRankError, ValueError):
    pass


class GenerationError(LinkRankError, ValueError):
    pass


class InvariantViolation(LinkRankError, AssertionError):
    """An internal consistency check failed (e.g. label leakage)."""
