"""Exception hierarchy shared across the package.

Every error carries a machine-readable ``code`` so the HTTP layer and the
CLI can translate failures without string matching.
"""

from __future__ import annotations


class PropagatorError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "error"


class InvalidRecordError(PropagatorError):
    code = "invalid_record"


class NotFoundError(PropagatorError):
    code = "not_found"


class DanglingReferenceError(InvalidRecordError):
    code = "dangling_reference"


class DuplicateBindingError(PropagatorError):
    code = "duplicate_binding"


class DuplicateFunctionNameError(InvalidRecordError):
    code = "duplicate_function_name"


class InvalidQueryError(PropagatorError):
    code = "invalid_query"


class DuplicatePropagationError(PropagatorError):
    code = "duplicate_propagation"


class GroupValidationError(PropagatorError):
    code = "validation_failed"


class MissingLinkError(PropagatorError):
    """A dashboard child slot has no propagated counterpart page."""

    code = "missing_link"


class RebuildRequiredError(PropagatorError):
    """Change-log entries between index.high_seq and from_seq were skipped."""

    code = "rebuild_required"


class IngestError(PropagatorError):
    code = "ingest_error"


class FetchError(IngestError):
    code = "fetch_failure"


class ParseError(IngestError):
    code = "parse_failure"


class SnapshotError(PropagatorError):
    code = "snapshot_error"
