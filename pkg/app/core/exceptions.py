"""
Error types raised by the numerical services.
"""
from typing import Any, Dict, Optional


class NumericsError(Exception):
    """Base class for every failure raised by the numerical services."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{key}={value!r}" for key, value in self.context.items())
        return f"{self.message} ({details})"


class DomainError(NumericsError, ValueError):
    """An argument lies outside the domain of the requested function."""


class NonConvergence(NumericsError):
    """An adaptive scheme could not meet its tolerance."""


class BracketFailure(NumericsError):
    """A root bracket could not be established."""


class NoSignChange(NumericsError):
    """A scan that must contain a sign change found none."""


class EventNotFound(NumericsError):
    """The shooting integrator reached its horizon without the terminal event."""
