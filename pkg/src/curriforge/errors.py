"""Exception hierarchy with stable error codes.

Every failure the pipeline can report carries a short stable code string.
The CLI prints ``<CODE>: <message>`` on stderr and exits nonzero; library
callers catch :class:`PipelineError` and branch on ``.code``.  Codes are
part of the external contract (see FORMATS.md) and must not change.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all pipeline failures.

    Attributes:
        code: stable machine-readable error code, e.g. ``E_PARSE``.
    """

    code = "E_PIPELINE"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ParseError(PipelineError):
    """Malformed file or line; message includes the line number when known."""

    code = "E_PARSE"


class DuplicateError(PipelineError):
    """Duplicate sample id, or duplicate (epoch, sample_id) loss record."""

    code = "E_DUP"


class ReferenceError_(PipelineError):
    """Dangling paired_real_id or unresolvable image path."""

    code = "E_REF"


class CoverageError(PipelineError):
    """A required id is missing from an embeddings table or loss log."""

    code = "E_COVERAGE"


class DimensionError(PipelineError):
    """Vector or image shapes disagree where they must match."""

    code = "E_DIM"


class DegenerateInputError(PipelineError):
    """Input is structurally valid but mathematically unusable (zero norm)."""

    code = "E_DEGENERATE"


class ScheduleError(PipelineError):
    """Learning-rate or epoch-index violation: lr <= 0, epoch out of range,
    inconsistent lr within one epoch."""

    code = "E_SCHEDULE"


class ConfigError(PipelineError):
    """A configuration field is out of its documented domain."""

    code = "E_CONFIG"


class InputError(PipelineError):
    """Non-finite or out-of-domain scalar input (negative loss, bad radius)."""

    code = "E_INPUT"


class SizeError(PipelineError):
    """Requested selection size exceeds the candidate set."""

    code = "E_SIZE"


class PairingError(PipelineError):
    """Fake/real pair unusable: shape mismatch or missing counterpart."""

    code = "E_PAIRING"


class ScoringIncompleteError(PipelineError):
    """Pool planning was asked to rank samples that have no scores yet."""

    code = "E_SCORING"


class SessionStateError(PipelineError):
    """A session-protocol call arrived out of order."""

    code = "E_STATE"
