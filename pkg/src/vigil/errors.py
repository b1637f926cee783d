"""Typed errors shared across the pipeline.

Every error carries a stable ``name`` (its class name) that the HTTP layer
puts into ``{"error": <name>}`` bodies, so clients can match on it.
"""

from __future__ import annotations


class VigilError(Exception):
    """Base class for all pipeline errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


# --- ingest ---------------------------------------------------------------

class SourceMissing(VigilError):
    pass


class DecodeFailure(VigilError):
    def __init__(self, message: str, decoder_output: str = ""):
        super().__init__(message)
        self.decoder_output = decoder_output


class EmptySource(VigilError):
    pass


class ParseError(VigilError):
    def __init__(self, message: str, path: str = "", line_no: int = 0):
        super().__init__(message)
        self.path = path
        self.line_no = line_no


class DuplicateOffset(VigilError):
    pass


# --- captioning -----------------------------------------------------------

class MissingPlaceholder(VigilError):
    def __init__(self, placeholder: str):
        super().__init__(f"no binding for placeholder {placeholder!r}")
        self.placeholder = placeholder


class BackendUnavailable(VigilError):
    pass


class SafetyBlocked(VigilError):
    def __init__(self, category: str):
        super().__init__(f"backend blocked content: {category}")
        self.category = category


class EmptyCaption(VigilError):
    pass


class CredentialMissing(VigilError):
    pass


class JobAborted(VigilError):
    pass


# --- condense / datastore / fusion / query --------------------------------

class UnknownSourceSize(VigilError):
    pass


class UnknownCamera(VigilError):
    pass


class IoFailure(VigilError):
    pass


class DuplicateCamera(VigilError):
    pass


class EmptyQuery(VigilError):
    pass


class DuplicateJob(VigilError):
    pass


class UnknownJob(VigilError):
    pass


class OverlappingEvents(VigilError):
    pass


class BindFailure(VigilError):
    pass
