"""Exception types shared across the engine."""


class RapidError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RapidError):
    """A value violates a documented invariant or precondition."""


class IngestionError(RapidError):
    """An input file is unreadable or contains an invalid record."""


class ConfigurationError(RapidError):
    """Configuration is missing, malformed, or inconsistent with the data."""


class TransportError(RapidError):
    """A remote backend (embedding service, LLM endpoint) is unreachable
    or returned a non-success status."""


class DraftingError(RapidError):
    """Query drafting failed after bounded retries."""


class ParseError(RapidError):
    """A model response could not be parsed; carries the raw text."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class NotFoundError(RapidError):
    """A referenced entity (keyframe id, video id) does not exist."""
