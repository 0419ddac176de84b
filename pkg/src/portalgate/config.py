"""YAML configuration for the whole service.

Documented keys:

    gateway.listen        "host:port" the gateway binds
    gateway.ui_dir        optional directory of built UI assets (served at /ui/)
    registry.root         directory holding the forward files
    ident.ttl             seconds a listener-ownership answer stays cached (default 2.0)
    ident.cache           enable the lookup cache (default true)
    scheduler.port_range  [low, high] ports assignable to jobs, per node
    nodes                 {node-name: loopback-ip} simulated compute nodes
    agents.<node>.listen  "host:port" each node's ident agent binds
                          (default: the node's ip, ephemeral port)
    users.<name>          {token, uid, gid, groups: [...]} static principals
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .principals import Principal, UserTable


def _parse_hostport(value: str, what: str) -> tuple[str, int]:
    host, _, port = str(value).rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"{what} must look like host:port, got {value!r}")
    return host, int(port)


@dataclass
class Config:
    gateway_listen: tuple[str, int] = ("127.0.0.1", 8080)
    ui_dir: str | None = None
    registry_root: str = "./registry"
    ident_ttl: float = 2.0
    ident_cache: bool = True
    port_range: tuple[int, int] = (8000, 8049)
    nodes: dict[str, str] = field(default_factory=lambda: {"node-1": "127.0.1.1"})
    agent_listen: dict[str, tuple[str, int]] = field(default_factory=dict)
    users: UserTable | None = None

    def agent_listen_for(self, node: str) -> tuple[str, int]:
        # default: ephemeral port on the node's own address
        return self.agent_listen.get(node, (self.nodes[node], 0))


def load_config(path: str | Path) -> Config:
    raw = yaml.safe_load(Path(path).read_text()) or {}
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> Config:
    cfg = Config()
    gateway = raw.get("gateway") or {}
    if "listen" in gateway:
        cfg.gateway_listen = _parse_hostport(gateway["listen"], "gateway.listen")
    cfg.ui_dir = gateway.get("ui_dir")

    registry = raw.get("registry") or {}
    cfg.registry_root = registry.get("root", cfg.registry_root)

    ident = raw.get("ident") or {}
    cfg.ident_ttl = float(ident.get("ttl", cfg.ident_ttl))
    cfg.ident_cache = bool(ident.get("cache", cfg.ident_cache))

    scheduler = raw.get("scheduler") or {}
    if "port_range" in scheduler:
        low, high = scheduler["port_range"]
        cfg.port_range = (int(low), int(high))

    if "nodes" in raw:
        cfg.nodes = {str(name): str(ip) for name, ip in (raw["nodes"] or {}).items()}
    for node, section in (raw.get("agents") or {}).items():
        if node not in cfg.nodes:
            raise ValueError(f"agents.{node} has no matching entry under nodes")
        cfg.agent_listen[str(node)] = _parse_hostport(
            (section or {}).get("listen", ""), f"agents.{node}.listen")

    users_section = raw.get("users") or {}
    if users_section:
        entries: dict[str, Principal] = {}
        for name, entry in users_section.items():
            token = entry.get("token")
            if not token:
                raise ValueError(f"users.{name} is missing a token")
            principal = Principal(
                uid=int(entry["uid"]),
                primary_gid=int(entry["gid"]),
                groups=frozenset(int(g) for g in entry.get("groups", [])),
                display_name=str(name),
            )
            if token in entries:
                raise ValueError(f"duplicate token for users.{name}")
            entries[str(token)] = principal
        cfg.users = UserTable(entries)
    return cfg
