"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: usage/input problems
exit 2, verification and numeric failures exit 1.
"""


class WbpError(Exception):
    """Base class for all package errors."""


class UsageError(WbpError):
    """Caller violated a precondition (bad argument, out-of-bounds request)."""


class LoadError(UsageError):
    """A manifest, ratings, model, or revenue file failed validation."""


class InputError(UsageError):
    """An input resource (e.g. a frame raster) could not be decoded."""


class NumericError(WbpError):
    """A computation produced a non-finite intermediate value."""


class TrainingError(WbpError):
    """Training diverged (non-finite loss)."""
