"""Exceptions raised by cardxor.

Precondition failures subclass ValueError so callers that only care about "bad input" can keep catching ValueError.
External solver failures carry a distinct integer code, used by scripts that drive the solver adapter.
"""


class CardXorError(Exception):
    """Base class for all cardxor errors."""


class InvalidConfigError(CardXorError, ValueError):
    """A generator, engine, or sweep configuration violates its domain."""


class DomainError(CardXorError, ValueError):
    """A transition function was evaluated outside of its domain."""


class InstanceTooLargeError(CardXorError, ValueError):
    """An instance exceeds the size guard of an exhaustive engine."""


class PreconditionError(CardXorError, ValueError):
    """The conditioning inequality of a statistical test does not hold."""


class ParseError(CardXorError, ValueError):
    """A native instance or witness file is malformed.

    Attributes:
        line: 1-based line number where parsing failed.
    """

    def __init__(self, msg: str, line: int) -> None:
        """Initialize the error with the failing line number."""
        super().__init__(f"line {line}: {msg}")
        self.line = line


class SolverProcessError(CardXorError, RuntimeError):
    """An external solver could not produce a trustworthy verdict.

    Attributes:
        code: Stable numeric identifier of the failure kind.
    """

    code = 2


class SpawnError(SolverProcessError):
    """The external solver process could not be started."""

    code = 3


class OutputParseError(SolverProcessError):
    """The external solver output had no recognizable status line."""

    code = 4


class WitnessVerificationError(SolverProcessError):
    """A reported witness does not satisfy the instance."""

    code = 5
