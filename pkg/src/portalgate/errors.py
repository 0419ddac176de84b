"""Error types shared by the portal modules.

Each error class carries the HTTP status used when it surfaces through the
gateway or the REST API, so the error-to-status mapping lives in one place
and is total by construction.
"""

from __future__ import annotations


class PortalError(Exception):
    code = "PortalError"
    http_status = 500

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(detail or self.code)


class BadRequest(PortalError):
    code = "BadRequest"
    http_status = 400


class MalformedName(PortalError):
    code = "MalformedName"
    http_status = 400


class MalformedTarget(PortalError):
    code = "MalformedTarget"
    http_status = 400


class MalformedMode(PortalError):
    code = "MalformedMode"
    http_status = 400


class UnknownNode(PortalError):
    code = "UnknownNode"
    http_status = 400


class Unauthenticated(PortalError):
    code = "Unauthenticated"
    http_status = 401


class AccessDenied(PortalError):
    code = "AccessDenied"
    http_status = 403


class NotOwner(PortalError):
    code = "NotOwner"
    http_status = 403


class NotFound(PortalError):
    code = "NotFound"
    http_status = 404


class NameTaken(PortalError):
    code = "NameTaken"
    http_status = 409


class NotRunning(PortalError):
    code = "NotRunning"
    http_status = 409


class SpawnFailure(PortalError):
    code = "SpawnFailure"
    http_status = 500


class BackendUnreachable(PortalError):
    code = "BackendUnreachable"
    http_status = 502


class LookupFailure(PortalError):
    code = "LookupFailure"
    http_status = 502


class AgentUnreachable(LookupFailure):
    code = "AgentUnreachable"
    http_status = 502


class ProtocolError(LookupFailure):
    code = "ProtocolError"
    http_status = 502


class HandshakeFailed(PortalError):
    code = "HandshakeFailed"
    http_status = 502


class Disabled(PortalError):
    code = "Disabled"
    http_status = 503


class RangeExhausted(PortalError):
    code = "RangeExhausted"
    http_status = 503


def all_error_types() -> list[type[PortalError]]:
    """Every concrete error class, including nested subclasses."""
    found: list[type[PortalError]] = []
    stack: list[type[PortalError]] = [PortalError]
    while stack:
        cls = stack.pop()
        for sub in cls.__subclasses__():
            found.append(sub)
            stack.append(sub)
    return found
