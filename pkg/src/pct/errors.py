"""Exception hierarchy shared by every pct module."""

from __future__ import annotations


class PCTError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInput(PCTError, ValueError):
    pass


class InsufficientMass(PCTError, ValueError):
    pass


class BadIndices(PCTError, ValueError):
    pass


class BadExponent(PCTError, ValueError):
    pass


class BadBlockLength(PCTError, ValueError):
    pass


class KeyFileMismatch(PCTError, ValueError):
    """Plaintext length does not match the key partition (and padding is off)."""


class FormatError(PCTError, ValueError):
    """A key file or container could not be parsed.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnknownFormat(FormatError):
    """Magic bytes or format version not recognised."""


class CorruptKey(FormatError):
    pass


class CorruptContainer(FormatError):
    pass
