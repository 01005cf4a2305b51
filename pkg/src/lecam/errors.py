"""Exception types shared across the package."""

from __future__ import annotations


class LecamError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(LecamError):
    """Parameters or arguments violate a documented precondition."""


class RegimeError(ValidationError):
    """The sampling fraction n/N is too large for the requested bound."""


class SupportCapError(LecamError):
    """An exact enumeration would exceed the configured support cap.

    Callers that hit this should switch to the Monte Carlo code paths.
    """

    def __init__(self, message: str, required: int | None = None, cap: int | None = None):
        super().__init__(message)
        self.required = required
        self.cap = cap
