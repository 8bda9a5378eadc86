"""Exception hierarchy shared across the engine.

Every error carries a stable machine-readable ``code`` (used verbatim by the
HTTP layer and the CLI) plus an optional ``locator`` naming the field, row, or
record the problem was detected at.
"""

from __future__ import annotations


class FacetBrowseError(Exception):
    """Base class for all engine errors."""

    code = "Error"

    def __init__(self, message: str, locator: str | None = None):
        super().__init__(message)
        self.message = message
        self.locator = locator

    def __str__(self) -> str:
        if self.locator:
            return f"{self.message} (at {self.locator})"
        return self.message


class NotFoundError(FacetBrowseError):
    """A dataset or view id that does not exist."""

    code = "NotFound"


class UnknownDataset(NotFoundError):
    code = "UnknownDataset"


class UnknownView(NotFoundError):
    code = "UnknownView"


class UpstreamError(FacetBrowseError):
    """Failures of a remote source (harvest endpoint, refresh source)."""

    code = "UpstreamError"
