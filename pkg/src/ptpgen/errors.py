"""Exception hierarchy shared across the package."""

from __future__ import annotations

from typing import Optional


class PTPError(Exception):
    """Base class for every error raised by ptpgen."""


class IngestError(PTPError, ValueError):
    """A corpus line or embedding table could not be read.

    ``offset`` is the absolute byte offset of the offending record (plus the
    in-record position when the decoder reports one) and ``field`` the dotted
    path of the offending field, empty when the record as a whole is bad.
    """

    def __init__(self, message: str, offset: int = 0, field: str = ""):
        self.message = message
        self.offset = offset
        self.field = field
        where = f" at byte {offset}"
        if field:
            where += f", field {field!r}"
        super().__init__(message + where)


class SchemaError(IngestError):
    pass


class GeometryError(IngestError):
    pass


class EncodingError(IngestError):
    pass


class FormatError(IngestError):
    pass


class TruncationError(IngestError):
    pass


class DuplicatePhraseError(IngestError):
    pass


class DimensionMismatch(PTPError, ValueError):
    pass


class MissingEmbeddings(PTPError, ValueError):
    pass


class NoAnnotations(PTPError, ValueError):
    pass


class TemplateError(PTPError, ValueError):
    pass


class MissingSlot(TemplateError):
    pass


class TooManyTags(TemplateError):
    pass


class UnsupportedGrid(TemplateError):
    pass


class EmptyCandidates(PTPError, ValueError):
    pass


class NoSuchSlot(PTPError, ValueError):
    pass


class EmptyCorpus(PTPError, ValueError):
    pass


class ConfigError(PTPError, ValueError):
    pass


def describe(exc: BaseException) -> dict:
    """JSON-ready summary of an exception for the rejects file."""
    out: dict = {"error": type(exc).__name__, "message": str(exc)}
    field: Optional[str] = getattr(exc, "field", None)
    if field:
        out["field"] = field
    return out


class IoError(PTPError, OSError):
    pass
