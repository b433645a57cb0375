"""Exception hierarchy shared across transportlab.

Every error raised on purpose derives from :class:`TransportLabError` so
callers (and the CLI) can separate domain failures from genuine bugs.
"""

from __future__ import annotations


class TransportLabError(Exception):
    """Base class for all deliberate transportlab errors."""


class InputValidationError(TransportLabError, ValueError):
    """An input value violates a documented domain or invariant."""


class DimensionMismatchError(InputValidationError):
    """Array shapes do not line up (measure sizes vs. matrix dims)."""


class UnsupportedInstanceError(TransportLabError, ValueError):
    """The instance is outside an operation's stated scope."""


class SizeCapError(UnsupportedInstanceError):
    """An enumeration-based operation would exceed its size cap."""


class NonMonotoneSupportError(TransportLabError, ValueError):
    """A support expected to be cyclically monotone is not.

    Carries the violating cycle certificate in ``certificate``.
    """

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class SandwichConditionError(TransportLabError, ValueError):
    """The chain condition between the two cost sheets fails.

    Carries the violating cycle certificate in ``certificate``.
    """

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class VerificationError(TransportLabError, AssertionError):
    """A construction failed its own post-verification step.

    Raised when internally computed objects (potentials, subsidies) do not
    satisfy the bounds they are guaranteed to satisfy; indicates a bug or
    numerically hostile input, never a caller mistake.
    """


class ParseError(TransportLabError, ValueError):
    """A problem file or report file is malformed; message names the field."""
