# src/ministra/exceptions.py

"""
Shared custom exceptions for the ministra timing engine.

Centralizing exception definitions in a separate module prevents circular
import errors between other modules that need to raise or catch them.

Exception Hierarchy:
- MinistraError (base)
  - UsageError (exit 1)
    - ConfigurationError
  - ParseError (exit 2)
    - TableDimensionError
    - BehavioralConstructError
    - TclError
  - SemanticError (exit 3)
    - ElaborationError
    - LibraryMergeError
    - BundleValidationError
    - ManifestVersionError
    - ConstraintError
    - CaseConflictError
    - RcNetworkError
"""

from typing import Any


class MinistraError(Exception):
    """Base exception for all ministra errors."""

    exit_code = 3

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        context: dict[str, Any] | None = None,
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.__class__.__name__
        self.context = (
            dict(context) if context else {}
        )  # Copy context to prevent mutation

    def to_dict(self) -> dict[str, Any]:
        """Convert exception to dictionary for structured logging."""
        return {
            "error_type": self.__class__.__name__,
            "error_code": self.error_code,
            "message": self.message,
            "context": self.context,
            "exit_code": self.exit_code,
        }


def _merged(kwargs: dict[str, Any], defaults: dict[str, Any]) -> dict[str, Any]:
    # Start with any context passed in via kwargs, then overwrite with our defaults.
    final_context = dict(kwargs.pop("context", None) or {})
    final_context.update(defaults)
    return final_context


# === Usage Errors ===


class UsageError(MinistraError):
    """Raised for invalid command-line usage or run options."""

    exit_code = 1

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("error_code", "USAGE_ERROR")
        super().__init__(message, **kwargs)


class ConfigurationError(UsageError):
    """Raised when there's an error in the engine configuration."""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="CONFIGURATION_ERROR", **kwargs)


# === Parse Errors ===


class ParseError(MinistraError):
    """Raised when an input file cannot be parsed."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        file: str | None = None,
        offset: int | None = None,
        line: int | None = None,
        **kwargs,
    ):
        self.file = file
        self.offset = offset
        self.line = line
        final_context = _merged(kwargs, {"file": file, "offset": offset, "line": line})
        kwargs.setdefault("error_code", "PARSE_ERROR")
        location = f"{file or '<input>'}:{line if line is not None else '?'}"
        super().__init__(f"{location}: {message}", context=final_context, **kwargs)


class TableDimensionError(ParseError):
    """Raised when a lookup table's values do not match its indices."""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="TABLE_DIMENSION_MISMATCH", **kwargs)


class BehavioralConstructError(ParseError):
    """Raised when a gate-level netlist contains behavioral Verilog."""

    def __init__(self, construct: str, **kwargs):
        self.construct = construct
        super().__init__(
            f"behavioral construct '{construct}' is not supported in gate-level netlists",
            error_code="BEHAVIORAL_CONSTRUCT",
            **kwargs,
        )


class TclError(ParseError):
    """Raised for Tcl syntax errors, unknown commands and malformed expressions."""

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("error_code", "TCL_ERROR")
        super().__init__(message, **kwargs)


# === Semantic Errors ===


class SemanticError(MinistraError):
    """Raised when well-formed inputs are inconsistent with each other."""

    exit_code = 3


class ElaborationError(SemanticError):
    """Raised when a hierarchical design cannot be flattened."""

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("error_code", "ELABORATION_ERROR")
        super().__init__(message, **kwargs)


class LibraryMergeError(SemanticError):
    """Raised when two Liberty sources define one cell differently."""

    def __init__(self, cell: str, **kwargs):
        final_context = _merged(kwargs, {"cell": cell})
        super().__init__(
            f"cell '{cell}' is defined twice with conflicting content",
            error_code="LIBRARY_MERGE_CONFLICT",
            context=final_context,
            **kwargs,
        )


class BundleValidationError(SemanticError):
    """Raised when an externally supplied flat bundle violates its invariants."""

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("error_code", "BUNDLE_VALIDATION_ERROR")
        super().__init__(message, **kwargs)


class ManifestVersionError(SemanticError):
    """Raised when a bundle manifest carries an unsupported format version."""

    def __init__(self, found: str, expected: str, **kwargs):
        final_context = _merged(kwargs, {"found": found, "expected": expected})
        super().__init__(
            f"bundle format version {found!r} is not supported (expected {expected!r})",
            error_code="MANIFEST_VERSION_MISMATCH",
            context=final_context,
            **kwargs,
        )


class ConstraintError(SemanticError):
    """Raised when an SDC command cannot be applied to the netlist."""

    def __init__(self, message: str, line: int | None = None, **kwargs):
        self.line = line
        final_context = _merged(kwargs, {"line": line})
        kwargs.setdefault("error_code", "CONSTRAINT_ERROR")
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message, context=final_context, **kwargs)


class CaseConflictError(SemanticError):
    """Raised when case analysis assigns both 0 and 1 to one pin."""

    def __init__(self, pin: str, **kwargs):
        final_context = _merged(kwargs, {"pin": pin})
        super().__init__(
            f"contradictory case-analysis constants on pin '{pin}'",
            error_code="CASE_CONFLICT",
            context=final_context,
            **kwargs,
        )


class RcNetworkError(SemanticError):
    """Raised when a parasitic network is disconnected or malformed."""

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("error_code", "RC_NETWORK_ERROR")
        super().__init__(message, **kwargs)


# === Utility Functions ===


def exit_code_for(error: Exception) -> int:
    """Map an error onto the CLI exit status."""
    if isinstance(error, MinistraError):
        return error.exit_code
    return 3


def get_error_context(error: Exception) -> dict[str, Any]:
    """Extract error context for logging."""
    if isinstance(error, MinistraError):
        return error.to_dict()
    else:
        return {
            "error_type": error.__class__.__name__,
            "message": str(error),
            "exit_code": exit_code_for(error),
        }
