"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class CtxVulnError(Exception):
    """Base class for all errors raised by ctxvuln."""


class ArgumentError(CtxVulnError, ValueError):
    """A parameter is outside its documented range."""


class ParseError(CtxVulnError, ValueError):
    """An input document is malformed.

    ``locator`` points at the offending line or field, e.g. ``"line 4"`` or
    ``"nodes[2].kind"``.
    """

    def __init__(self, message: str, locator: str | None = None):
        self.locator = locator
        super().__init__(f"{locator}: {message}" if locator else message)


class ValidationError(CtxVulnError, ValueError):
    """A well-formed input violates a domain invariant."""


class ConfigError(CtxVulnError):
    """The pipeline configuration is incomplete or inconsistent."""
