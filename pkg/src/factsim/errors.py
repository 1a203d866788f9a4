"""Exception hierarchy shared across the toolkit.

Each error class carries a distinct process exit code so the CLI can map
failure classes onto scriptable return values.
"""

from __future__ import annotations


class FactSimError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class InvalidInputError(FactSimError):
    """Malformed input: bad arguments, schema violations, out-of-range values."""

    exit_code = 2


class ProviderError(FactSimError):
    """A chat-completion or encoder provider failed after retries."""

    exit_code = 3

    def __init__(self, message: str, text_index: int | None = None):
        super().__init__(message)
        self.text_index = text_index


class ParseFailureError(FactSimError):
    """No tuple structure could be recovered from a completion."""

    exit_code = 4

    def __init__(self, message: str, raw: str = "", text_index: int | None = None):
        super().__init__(message)
        self.raw = raw
        self.text_index = text_index


class EmptyExtractionError(FactSimError):
    """Scoring was asked to run on a fact set with zero tuples."""

    exit_code = 5
