"""Shared fixtures: principals, full service stacks on ephemeral ports, and
a small HTTP client wrapper.

Every stack gets its own loopback IPs for its simulated nodes, so parallel
tests never collide on (address, port) pairs even with fixed job port
ranges.
"""

from __future__ import annotations

import http.client
import itertools
import json
from dataclasses import dataclass

import pytest

from portalgate.config import Config
from portalgate.principals import Principal, UserTable
from portalgate.service import ServiceStack

_ip_counter = itertools.count(1)


def next_node_ip() -> str:
    n = next(_ip_counter)
    return f"127.0.{10 + n // 200}.{n % 200 + 1}"


ALICE = Principal(uid=100, primary_gid=100, groups=frozenset({100}), display_name="alice")
BOB = Principal(uid=101, primary_gid=101, groups=frozenset({101}), display_name="bob")
# carol shares alice's primary group through a supplementary membership
CAROL = Principal(uid=102, primary_gid=102, groups=frozenset({102, 100}), display_name="carol")

TOKENS = {"alice": "tok-alice", "bob": "tok-bob", "carol": "tok-carol"}


def make_users() -> UserTable:
    return UserTable({TOKENS["alice"]: ALICE, TOKENS["bob"]: BOB, TOKENS["carol"]: CAROL})


@pytest.fixture
def users():
    return make_users()


@dataclass
class Response:
    status: int
    headers: list[tuple[str, str]]
    body: bytes

    def header(self, name: str) -> str | None:
        for key, value in self.headers:
            if key.lower() == name.lower():
                return value
        return None

    def json(self):
        return json.loads(self.body)


class GatewayClient:
    def __init__(self, host: str, port: int):
        self.host = host
        self.port = port

    def fetch(self, method: str, path: str, token: str | None = None,
              body=None, headers: dict[str, str] | None = None,
              timeout: float = 15.0) -> Response:
        hdrs = dict(headers or {})
        if token:
            hdrs["Authorization"] = f"Bearer {token}"
        payload = body
        if isinstance(body, dict):
            payload = json.dumps(body).encode()
            hdrs.setdefault("Content-Type", "application/json")
        conn = http.client.HTTPConnection(self.host, self.port, timeout=timeout)
        try:
            conn.request(method, path, body=payload, headers=hdrs)
            resp = conn.getresponse()
            return Response(resp.status, resp.getheaders(), resp.read())
        finally:
            conn.close()

    def get(self, path, **kw) -> Response:
        return self.fetch("GET", path, **kw)


@pytest.fixture
def make_stack(tmp_path):
    """Factory producing started ServiceStacks; all stopped at teardown."""
    stacks: list[ServiceStack] = []
    counter = itertools.count()

    def _make(node_count: int = 1, *, ident_ttl: float = 2.0, ident_cache: bool = True,
              port_range: tuple[int, int] = (21000, 21049), ui_dir: str | None = None,
              users: UserTable | None = None) -> ServiceStack:
        nodes = {f"node-{i + 1}": next_node_ip() for i in range(node_count)}
        cfg = Config(
            gateway_listen=("127.0.0.1", 0),
            ui_dir=ui_dir,
            registry_root=str(tmp_path / f"registry-{next(counter)}"),
            ident_ttl=ident_ttl,
            ident_cache=ident_cache,
            port_range=port_range,
            nodes=nodes,
            users=users or make_users(),
        )
        stack = ServiceStack(cfg)
        stack.start()
        stacks.append(stack)
        return stack

    yield _make
    for stack in stacks:
        stack.stop()


@pytest.fixture
def stack(make_stack) -> ServiceStack:
    return make_stack(node_count=2)


@pytest.fixture
def client(stack) -> GatewayClient:
    host, port = stack.gateway_address
    return GatewayClient(host, port)


def launch(stack: ServiceStack, owner: Principal, app_kind: str, node: str = "node-1",
           port_count: int = 1):
    return stack.scheduler.launch(owner, node, app_kind, port_count)
