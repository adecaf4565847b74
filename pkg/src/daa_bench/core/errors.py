"""Exception hierarchy shared by every daa-bench module."""

from __future__ import annotations

from collections.abc import Mapping, Sequence


class DaaBenchError(Exception):
    """Base exception for all toolkit errors."""

    def __init__(self, message: str, original_data: str | None = None) -> None:
        super().__init__(message)
        self.original_data = original_data


class ConfigError(DaaBenchError):
    """Exception for invalid configuration values or files."""

    def __init__(
        self,
        message: str,
        validation_errors: list[str] | None = None,
        original_data: str | None = None,
    ) -> None:
        super().__init__(message, original_data)
        self.validation_errors = validation_errors or []


class GeometryError(DaaBenchError):
    """Exception for degenerate geometric input."""


class ConvergenceError(DaaBenchError):
    """Exception raised when value iteration fails to reach tolerance."""

    def __init__(self, message: str, last_residual: float, iterations: int) -> None:
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class TableError(DaaBenchError):
    """Base exception for policy table files."""


class TableFormatError(TableError):
    """Exception for a file that is not a policy table (bad magic or layout)."""


class TableVersionError(TableError):
    """Exception for an unsupported policy table version."""

    def __init__(self, found: int, expected: int) -> None:
        super().__init__(
            f"Unsupported policy table version {found} (expected {expected})"
        )
        self.found = found
        self.expected = expected


class TableTruncatedError(TableError):
    """Exception for a policy table file that ends early."""


class TableChecksumError(TableError):
    """Exception for a policy table whose CRC32 does not match its content."""


class PerceptionError(DaaBenchError):
    """Base exception for perception backend failures."""


class DetectorTimeoutError(PerceptionError):
    """Exception raised when an external detector does not answer in time."""

    def __init__(self, message: str, timeout: float) -> None:
        super().__init__(message)
        self.timeout = timeout


class DetectorProtocolError(PerceptionError):
    """Exception for malformed external detector responses."""

    def __init__(self, message: str, line: str | None = None) -> None:
        super().__init__(message, original_data=line)
        self.line = line


class LabelParseError(DaaBenchError):
    """Exception for malformed YOLO label or prediction text."""

    def __init__(
        self, message: str, line_number: int, original_data: str | None = None
    ) -> None:
        super().__init__(f"line {line_number}: {message}", original_data)
        self.line_number = line_number


class SchemaError(DaaBenchError):
    """Exception for JSON documents that fail schema validation."""

    def __init__(
        self,
        message: str,
        field: str | None = None,
        validation_errors: list[str] | None = None,
        original_data: str | None = None,
    ) -> None:
        super().__init__(message, original_data)
        self.field = field
        self.validation_errors = validation_errors or []


class SchemaVersionError(SchemaError):
    """Exception for documents with a missing or unsupported schema_version."""

    def __init__(
        self, found: object, expected: int, original_data: str | None = None
    ) -> None:
        if found is None:
            message = "Missing required field: schema_version"
        else:
            message = f"Unsupported schema_version {found!r} (expected {expected})"
        super().__init__(message, field="schema_version", original_data=original_data)
        self.found = found
        self.expected = expected


class EmptyInputError(DaaBenchError):
    """Exception for aggregations over an empty collection."""


class UnknownFacetError(DaaBenchError):
    """Exception for slicing facets that do not exist or do not apply."""

    def __init__(self, facet: str, reason: str | None = None) -> None:
        if reason is None:
            super().__init__(f"Unknown facet: {facet}")
        else:
            super().__init__(f"Facet {facet}: {reason}")
        self.facet = facet


class SimulationError(DaaBenchError):
    """Exception for a failure inside the closed loop, tagged with its step."""

    def __init__(self, message: str, encounter_id: int, step_index: int) -> None:
        super().__init__(f"encounter {encounter_id}, step {step_index}: {message}")
        self.encounter_id = encounter_id
        self.step_index = step_index


def format_validation_errors(errors: Sequence[Mapping[str, object]]) -> list[str]:
    """Flatten pydantic error dicts into ``"loc -> loc: msg"`` strings."""
    messages = []
    for error in errors:
        loc = error.get("loc", ())
        parts = loc if isinstance(loc, (tuple, list)) else (loc,)
        location = " -> ".join(str(part) for part in parts)
        messages.append(f"{location}: {error.get('msg')}")
    return messages
