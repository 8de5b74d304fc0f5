"""
Category Exceptions and the Exit-Code Contract 🚫

This module defines the application-wide exception bases. Every domain error
inherits from exactly one category, and the category fixes the process exit
code the command-line entry point returns for it.

The exceptions are named to be semantically clearer than raw exit codes in
application logic (e.g., DataIOError instead of `sys.exit(3)`).

Contents:
- FogDetectError: root of the hierarchy (exit 1, never raised directly)
- 2 Configuration Errors: ConfigError
- 3 Data / I/O Errors: DataIOError
- 4 Pipeline (runtime) Errors: PipelineError
- 5 Compatibility Errors: CompatibilityError
"""

from typing import ClassVar, Self


class FogDetectError(Exception):
    """Root exception. Carries a human-readable detail and the exit code of its category."""

    exit_code: ClassVar[int] = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail
        self.step: int | None = None

    def at_step(self, step: int) -> Self:
        """Attach the training step at which the error surfaced and return self for re-raising."""
        self.step = step
        self.detail = f"{self.detail} (step {step})"
        self.args = (self.detail,)
        return self


class ConfigError(FogDetectError):
    """Raised when configuration values are missing, unknown or out of range. (exit 2)"""

    exit_code: ClassVar[int] = 2


class DataIOError(FogDetectError):
    """Raised when a file cannot be read, written or parsed. (exit 3)"""

    exit_code: ClassVar[int] = 3

    def __init__(self, detail: str, path: str | None = None):
        super().__init__(detail if path is None else f"{path}: {detail}")
        self.path = path


class PipelineError(FogDetectError):
    """Raised when the pipeline fails at runtime on well-formed inputs (training, scoring). (exit 4)"""

    exit_code: ClassVar[int] = 4


class CompatibilityError(FogDetectError):
    """Raised when a checkpoint does not match the configuration it is applied under. (exit 5)"""

    exit_code: ClassVar[int] = 5
