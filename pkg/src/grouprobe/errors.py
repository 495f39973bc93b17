"""Exception types shared across the package."""

from __future__ import annotations


class GrouprobeError(Exception):
    """Base class for all package-specific failures."""


class InvalidSpecError(GrouprobeError, ValueError):
    """A data or optimizer specification violates its declared constraints."""


class ShapeError(GrouprobeError, ValueError):
    """Array arguments have inconsistent or unexpected shapes."""


class InvalidInputError(GrouprobeError, ValueError):
    """An operation was called with arguments outside its contract."""


class DegenerateInputError(GrouprobeError, ValueError):
    """Inputs are individually valid but make the requested quantity undefined."""


class DivergedError(GrouprobeError, RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch


class ConfigError(GrouprobeError, ValueError):
    """An experiment config file failed schema validation."""
