"""Domain error hierarchy shared by every module and by the wire protocol."""

from __future__ import annotations

from typing import Any


class DomainError(Exception):
    """A rule violation visible to clients; carries a stable wire code.

    ``details`` must stay JSON-safe: it is copied verbatim into error
    payloads sent over the wire.
    """

    code = "domain_error"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details
