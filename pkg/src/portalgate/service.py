"""Assembles agents, scheduler, registry, API, and gateway from a Config."""

from __future__ import annotations

from .agent import IdentAgent
from .api import ControlPlaneAPI
from .config import Config
from .firewall import IdentClient
from .gateway import GatewayServer
from .registry import ForwardStore
from .scheduler import Scheduler


class ServiceStack:
    """Everything one `portalgate serve` process runs."""

    def __init__(self, config: Config):
        if config.users is None:
            raise ValueError("configuration defines no users; the service cannot start")
        self.config = config
        self.users = config.users
        self.registry = ForwardStore(config.registry_root)
        self.agents: dict[str, IdentAgent] = {}
        for node in config.nodes:
            self.agents[node] = IdentAgent(config.agent_listen_for(node))
        self.ident = IdentClient(
            {node: agent.address for node, agent in self.agents.items()},
            ttl=config.ident_ttl,
            cache_enabled=config.ident_cache,
        )
        self.scheduler = Scheduler(config.nodes, config.port_range, agents=self.agents)
        self.api = ControlPlaneAPI(self.users, self.registry, self.scheduler)
        self.gateway = GatewayServer(
            config.gateway_listen,
            users=self.users,
            registry=self.registry,
            ident=self.ident,
            nodes=config.nodes,
            api=self.api,
            ui_dir=config.ui_dir,
        )

    @property
    def gateway_address(self) -> tuple[str, int]:
        return self.gateway.address

    @property
    def base_url(self) -> str:
        host, port = self.gateway_address
        return f"http://{host}:{port}"

    def start(self) -> None:
        for agent in self.agents.values():
            agent.start()
        self.gateway.start()

    def stop(self) -> None:
        self.scheduler.stop_all()
        self.gateway.stop()
        for agent in self.agents.values():
            agent.stop()
