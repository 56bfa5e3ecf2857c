"""Exception types shared across the engine."""

from __future__ import annotations


class NimError(Exception):
    """Base class for all engine errors."""


class UnknownTypeError(NimError, LookupError):
    """A type name does not resolve to any registered type."""


class VirtualTypeError(NimError):
    """Direct ingestion was attempted for a mapping-defined (virtual) type."""


class UnknownInstanceError(NimError, LookupError):
    """No instance with the given identifier exists in the store."""


class UnknownEntryError(NimError, LookupError):
    """An entry path does not resolve inside an instance tree."""


class AmbiguousPathError(NimError):
    """An entry path matches more than one component inside an instance."""


class AccessDeniedError(NimError):
    """The caller's roles do not satisfy the entry's usage policy."""


class SchemaViolation(NimError):
    """A document does not conform to the declared shape of its type."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


class IngestRejected(NimError):
    """The store refused to persist data (range, location or expiry rule)."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(detail or reason)
        self.reason = reason
        self.detail = detail or reason


class NameResolutionError(NimError, LookupError):
    """A type reference could not be resolved to exactly one type."""

    def __init__(self, name: str, reason: str, candidates: tuple[str, ...] = ()):
        if reason == "ambiguous":
            msg = f"name '{name}' is ambiguous: matches {', '.join(candidates)}"
        else:
            msg = f"name '{name}' does not resolve to any known type"
        super().__init__(msg)
        self.name = name
        self.reason = reason
        self.candidates = candidates


class TransformError(NimError):
    """A generic component tree cannot be converted for the requested type."""


class JournalError(NimError):
    """The journal file cannot be read or replayed."""
