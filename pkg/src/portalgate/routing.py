"""URL grammar of the gateway: route classification and backend URL building.

Grammar (exact):
  /fw/<name>/<rest>         name: 1-64 chars of [A-Za-z0-9_.-], no ".."
  /fw2/<node>:<port>/<rest> node: 1-253 chars of [A-Za-z0-9.-], port: 1-65535
Anything else is Passthrough. The prefix is stripped; an absent trailing
segment normalizes rest to "/". rest keeps the query string verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import MalformedName, MalformedTarget

NAME_RE = re.compile(r"[A-Za-z0-9_.-]{1,64}\Z")
NODE_RE = re.compile(r"[A-Za-z0-9.-]{1,253}\Z")


@dataclass(frozen=True)
class NamedForward:
    name: str
    rest: str

    @property
    def prefix(self) -> str:
        return f"/fw/{self.name}"


@dataclass(frozen=True)
class DirectForward:
    node: str
    port: int
    rest: str

    @property
    def prefix(self) -> str:
        return f"/fw2/{self.node}:{self.port}"


@dataclass(frozen=True)
class Passthrough:
    path: str


RouteTarget = Union[NamedForward, DirectForward, Passthrough]


def validate_name(name: str) -> str:
    if not NAME_RE.match(name) or ".." in name or "\x00" in name:
        raise MalformedName(f"bad forward name {name!r}")
    return name


def validate_node(node: str) -> str:
    if not NODE_RE.match(node):
        raise MalformedTarget(f"bad node name {node!r}")
    return node


def validate_port(port: int) -> int:
    if not 1 <= port <= 65535:
        raise MalformedTarget(f"port {port} out of range")
    return port


def _split_segment(tail: str) -> tuple[str, str]:
    """Split "<segment>/<rest>?query" into (segment, normalized rest)."""
    path, sep, query = tail.partition("?")
    slash = path.find("/")
    if slash < 0:
        segment, rest_path = path, ""
    else:
        segment, rest_path = path[:slash], path[slash:]
    rest = rest_path or "/"
    if sep:
        rest += "?" + query
    return segment, rest


def parse_route(path: str) -> RouteTarget:
    """Classify an origin-form request target. Deterministic and pure."""
    if path.startswith("/fw/"):
        segment, rest = _split_segment(path[len("/fw/"):])
        return NamedForward(name=validate_name(segment), rest=rest)
    if path.startswith("/fw2/"):
        segment, rest = _split_segment(path[len("/fw2/"):])
        node, colon, port_s = segment.rpartition(":")
        if not colon:
            raise MalformedTarget(f"missing port in {segment!r}")
        if not port_s.isdigit():
            raise MalformedTarget(f"non-numeric port in {segment!r}")
        return DirectForward(node=validate_node(node), port=validate_port(int(port_s)), rest=rest)
    return Passthrough(path=path)


def unparse_route(target: RouteTarget) -> str:
    """Prefix + rest; inverse of parse_route for paths with explicit rest."""
    if isinstance(target, Passthrough):
        return target.path
    return target.prefix + target.rest


def build_backend_url(host: str, port: int, rest: str) -> str:
    """Origin URL for the backend; rest is passed through byte-for-byte."""
    return f"http://{host}:{port}{rest}"
