"""Exception types shared across the toolkit."""

from __future__ import annotations


class FormatError(ValueError):
    """A file or stream violates one of the supported text formats.

    Carries the 1-based line number when the offending line is known.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class PairingError(ValueError):
    """Reference and hypothesis inputs do not describe the same recordings."""
