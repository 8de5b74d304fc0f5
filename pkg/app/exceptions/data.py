"""
Recording and Preprocessing Exceptions 📄

This module defines domain-specific exceptions raised while reading accelerometer
recordings and cutting them into blocks.

Contents:
- MissingColumnError, MalformedRowError, NonMonotonicTimeError, EmptySeriesError:
  single-file format violations (DataIOError, exit 3).
- DatasetParseError: aggregate over every file of a directory that failed to parse.
- NotDivisibleError, InvalidStrideError: block geometry that the configuration made
  impossible (ConfigError, exit 2).
- CoverageGapError: stitched blocks leave a patch uncovered (PipelineError, exit 4).
"""

from collections.abc import Mapping

from .base import ConfigError, DataIOError, PipelineError


class MissingColumnError(DataIOError):
    """Raised when a required header column is absent."""

    def __init__(self, column: str, path: str | None = None):
        super().__init__(f"missing required column '{column}'", path=path)
        self.column = column


class MalformedRowError(DataIOError):
    """Raised for a non-numeric cell, a non-binary flag or a row of the wrong arity."""

    def __init__(self, row: int, reason: str, path: str | None = None):
        super().__init__(f"malformed row {row}: {reason}", path=path)
        self.row = row


class NonMonotonicTimeError(DataIOError):
    """Raised when the Time column does not step by exactly one."""

    def __init__(self, row: int, previous: int, current: int, path: str | None = None):
        super().__init__(f"time must increase by 1 at row {row} (got {previous} -> {current})", path=path)
        self.row = row


class EmptySeriesError(DataIOError):
    """Raised when a recording has a header but no samples."""

    def __init__(self, path: str | None = None):
        super().__init__("recording contains no samples", path=path)


class DatasetParseError(DataIOError):
    """Raised after loading a directory when one or more files failed to parse."""

    def __init__(self, failures: Mapping[str, str]):
        listing = "; ".join(f"{name}: {reason}" for name, reason in sorted(failures.items()))
        super().__init__(f"{len(failures)} file(s) failed to parse: {listing}")
        self.failures = dict(failures)


class NotDivisibleError(ConfigError):
    """Raised when a length is not a multiple of the patch or block size it is cut into."""

    def __init__(self, length: int, divisor: int, what: str = "length"):
        super().__init__(f"{what} {length} is not divisible by {divisor}")


class InvalidStrideError(ConfigError):
    """Raised when the block stride is not in [1, block_size]."""

    def __init__(self, stride: int, block_size: int):
        super().__init__(f"block_stride must be in [1, {block_size}], got {stride}")


class CoverageGapError(PipelineError):
    """Raised when stitching finds a patch that no block covers."""

    def __init__(self, patch_index: int):
        super().__init__(f"patch {patch_index} is not covered by any block")
        self.patch_index = patch_index
