"""Mock resource scheduler: port-range assignment and demo-app job lifecycle.

Ports come from one configured range and are unique per node among live
(pending/running) jobs; assignment is lowest-available-first so tests are
deterministic. Launching a job starts the demo app bound to the node's
address and registers every port with the node's ident agent under the
owner's uid/gid; stopping reverses all of it. State mutations serialize
through one lock.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field

from .agent import IdentAgent
from .apps import APP_KINDS
from .errors import NotFound, NotOwner, NotRunning, RangeExhausted, SpawnFailure, UnknownNode
from .principals import Principal

PENDING = "pending"
RUNNING = "running"
STOPPED = "stopped"
FAILED = "failed"

TOKEN_HEX_CHARS = 48


@dataclass
class JobRecord:
    job_id: int
    owner: Principal
    node: str
    ports: list[int]
    app_kind: str
    state: str
    token: str | None = None
    created_at: float = field(default_factory=time.time)

    def connect_path(self) -> str:
        link = f"/fw2/{self.node}:{self.ports[0]}/"
        if self.token:
            link += f"?token={self.token}"
        return link


class PortAllocator:
    """Tracks in-use ports per node; callers hold the scheduler lock."""

    def __init__(self, port_range: tuple[int, int]):
        low, high = port_range
        if not (1 <= low <= high <= 65535):
            raise ValueError(f"bad port range {port_range}")
        self.low = low
        self.high = high
        self._used: dict[str, set[int]] = {}

    def assign(self, node: str, count: int) -> list[int]:
        used = self._used.setdefault(node, set())
        free = [p for p in range(self.low, self.high + 1) if p not in used]
        if len(free) < count:
            raise RangeExhausted(
                f"{count} ports requested on {node}, {len(free)} free in "
                f"[{self.low}, {self.high}]")
        picked = free[:count]
        used.update(picked)
        return picked

    def release(self, node: str, ports: list[int]) -> None:
        self._used.setdefault(node, set()).difference_update(ports)

    def in_use(self, node: str) -> set[int]:
        return set(self._used.get(node, ()))


class Scheduler:
    def __init__(self, nodes: dict[str, str], port_range: tuple[int, int],
                 agents: dict[str, IdentAgent] | None = None,
                 app_kinds: dict | None = None):
        self.nodes = dict(nodes)
        self.allocator = PortAllocator(port_range)
        self.agents = agents or {}
        self.app_kinds = app_kinds if app_kinds is not None else dict(APP_KINDS)
        self._jobs: dict[int, JobRecord] = {}
        self._apps: dict[int, object] = {}
        self._next_id = 1
        self._lock = threading.Lock()

    def launch(self, owner: Principal, node: str, app_kind: str,
               port_count: int = 1) -> JobRecord:
        if node not in self.nodes:
            raise UnknownNode(node)
        factory = self.app_kinds.get(app_kind)
        if factory is None:
            raise SpawnFailure(f"unknown app kind {app_kind!r}")
        if port_count < 1:
            raise SpawnFailure("port_count must be >= 1")
        with self._lock:
            ports = self.allocator.assign(node, port_count)
            job = JobRecord(
                job_id=self._next_id,
                owner=owner,
                node=node,
                ports=ports,
                app_kind=app_kind,
                state=PENDING,
                token=secrets.token_hex(TOKEN_HEX_CHARS // 2)
                if app_kind == "token-notebook" else None,
            )
            self._next_id += 1
            try:
                app = factory(self.nodes[node], ports, token=job.token)
                app.start()
            except OSError as exc:
                self.allocator.release(node, ports)
                job.state = FAILED
                job.token = None
                self._jobs[job.job_id] = job
                raise SpawnFailure(f"could not start {app_kind} on {node}: {exc}") from exc
            agent = self.agents.get(node)
            if agent is not None:
                for port in ports:
                    agent.register(port, owner.uid, owner.primary_gid)
            job.state = RUNNING
            self._jobs[job.job_id] = job
            self._apps[job.job_id] = app
            return job

    def stop(self, job_id: int, principal: Principal) -> JobRecord:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFound(f"job {job_id}")
            if principal.uid != job.owner.uid:
                raise NotOwner(f"job {job_id} is owned by uid {job.owner.uid}")
            if job.state != RUNNING:  # idempotent for already-finished jobs
                return job
            app = self._apps.pop(job.job_id, None)
            agent = self.agents.get(job.node)
            if agent is not None:
                for port in job.ports:
                    agent.unregister(port)
            if app is not None:
                app.stop()
            self.allocator.release(job.node, job.ports)
            job.state = STOPPED
            job.token = None
            return job

    def connect_link(self, job: JobRecord) -> str:
        if job.state != RUNNING:
            raise NotRunning(f"job {job.job_id} is {job.state}")
        return job.connect_path()

    def list_jobs(self, principal: Principal) -> list[JobRecord]:
        with self._lock:
            mine = [j for j in self._jobs.values() if j.owner.uid == principal.uid]
        return sorted(mine, key=lambda j: j.job_id, reverse=True)

    def get_job(self, job_id: int) -> JobRecord | None:
        with self._lock:
            return self._jobs.get(job_id)

    def live_ports(self, node: str) -> set[int]:
        with self._lock:
            return {p for j in self._jobs.values()
                    if j.node == node and j.state in (PENDING, RUNNING) for p in j.ports}

    def app_for(self, job_id: int):
        return self._apps.get(job_id)

    def stop_all(self) -> None:
        with self._lock:
            jobs = list(self._jobs.values())
        for job in jobs:
            if job.state == RUNNING:
                try:
                    self.stop(job.job_id, job.owner)
                except NotFound:
                    pass
