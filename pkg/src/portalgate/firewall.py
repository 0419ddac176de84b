"""User-based connection authorization and the listener-ownership lookup.

Two pure rules decide access:
  * direct connections are allowed when the connecting user owns the
    listening process or is a member of the listener owner's primary group;
  * a named forward may only point at a process owned by the forward's owner
    or group-owned by the forward's group (cross-connection prevention).

Ownership of a listening port is resolved by asking the node's agent over a
tiny line protocol; results are held in a short-lived TTL cache because most
page loads issue many requests to one backend in quick succession.
"""

from __future__ import annotations

import socket
import threading
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

from .errors import AgentUnreachable, ProtocolError
from .principals import Principal

if TYPE_CHECKING:
    from .registry import ForwardRecord


@dataclass(frozen=True)
class ListenerInfo:
    node: str
    port: int
    owner_uid: int
    owner_primary_gid: int


@dataclass(frozen=True)
class AuthDecision:
    allow: bool
    reason: str  # uid-match | group-match | no-match | no-listener |
    #              forward-owner-match | forward-group-match | cross-connection


def authorize_direct(principal: Principal, listener: ListenerInfo | None) -> AuthDecision:
    """Connecting user vs listening process. Pure function."""
    if listener is None:
        return AuthDecision(False, "no-listener")
    if principal.uid == listener.owner_uid:
        return AuthDecision(True, "uid-match")
    if listener.owner_primary_gid in principal.groups:
        return AuthDecision(True, "group-match")
    return AuthDecision(False, "no-match")


def authorize_named(record: "ForwardRecord", listener: ListenerInfo | None) -> AuthDecision:
    """Forward file vs listening process; evaluated on top of the forward's
    own connect permission, never instead of it."""
    if listener is None:
        return AuthDecision(False, "no-listener")
    if record.owner_uid == listener.owner_uid:
        return AuthDecision(True, "forward-owner-match")
    if record.group_gid == listener.owner_primary_gid:
        return AuthDecision(True, "forward-group-match")
    return AuthDecision(False, "cross-connection")


_CONNECT_TIMEOUT = 5.0


class IdentClient:
    """Asks per-node agents who owns a listening port.

    lookup() returns ListenerInfo, or None when nothing is listening.
    cached_lookup() consults the TTL cache first; positive and no-listener
    answers are both cached, errors never are. A miss storm on one key may
    issue duplicate agent queries; that is acceptable.
    """

    def __init__(self, agents: Mapping[str, tuple[str, int]], ttl: float = 2.0,
                 cache_enabled: bool = True):
        self._agents = dict(agents)
        self.ttl = ttl
        self.cache_enabled = cache_enabled
        self._cache: dict[tuple[str, int], tuple[float, ListenerInfo | None]] = {}
        self._lock = threading.Lock()

    def lookup(self, node: str, port: int) -> ListenerInfo | None:
        addr = self._agents.get(node)
        if addr is None:
            raise AgentUnreachable(f"no agent for node {node!r}")
        try:
            with socket.create_connection(addr, timeout=_CONNECT_TIMEOUT) as sock:
                sock.sendall(f"LOOKUP {port}\n".encode("ascii"))
                line = sock.makefile("rb").readline()
        except OSError as exc:
            raise AgentUnreachable(f"agent for {node} at {addr}: {exc}") from exc
        return self._parse_response(line, node, port)

    def cached_lookup(self, node: str, port: int) -> ListenerInfo | None:
        if not self.cache_enabled:
            return self.lookup(node, port)
        key = (node, port)
        now = time.monotonic()
        with self._lock:
            hit = self._cache.get(key)
            if hit is not None and now < hit[0]:
                return hit[1]
        result = self.lookup(node, port)
        with self._lock:
            self._cache[key] = (time.monotonic() + self.ttl, result)
        return result

    @staticmethod
    def _parse_response(line: bytes, node: str, port: int) -> ListenerInfo | None:
        if not line.endswith(b"\n"):
            raise ProtocolError(f"truncated agent response {line!r}")
        fields = line.decode("ascii", "replace").split()
        if fields[:1] == ["NONE"]:
            return None
        if len(fields) == 3 and fields[0] == "OWNER" and fields[1].isdigit() and fields[2].isdigit():
            return ListenerInfo(node=node, port=port,
                                owner_uid=int(fields[1]), owner_primary_gid=int(fields[2]))
        raise ProtocolError(f"unexpected agent response {line!r}")
