"""Management REST API, served on the gateway's passthrough space under /api/.

Every endpoint authenticates the caller and executes the underlying module
operation as that caller's Principal; the service itself holds no authority.
JSON in, JSON out; module errors map onto HTTP statuses via their classes.
"""

from __future__ import annotations

import json
from typing import Callable

from .errors import BadRequest, NotFound, PortalError
from .principals import Principal, UserTable, authenticate
from .registry import ForwardRecord, ForwardStore, check_connect_permission
from .scheduler import JobRecord, Scheduler

JSON_CT = "application/json; charset=utf-8"


def forward_view(record: ForwardRecord, caller: Principal) -> dict:
    destination = None
    if record.destination is not None:
        destination = f"{record.destination[0]}:{record.destination[1]}"
    return {
        "name": record.name,
        "owner_uid": record.owner_uid,
        "group_gid": record.group_gid,
        "mode": format(record.mode, "03o"),
        "destination": destination,
        "enabled": record.enabled,
        "created_at": record.created_at,
        "owned": record.owner_uid == caller.uid,
        "connect_path": f"/fw/{record.name}/",
    }


def job_view(job: JobRecord) -> dict:
    view = {
        "job_id": job.job_id,
        "node": job.node,
        "ports": list(job.ports),
        "app_kind": job.app_kind,
        "state": job.state,
        "created_at": job.created_at,
        "connect_link": job.connect_path() if job.state == "running" else None,
    }
    return view


class ControlPlaneAPI:
    def __init__(self, users: UserTable, registry: ForwardStore, scheduler: Scheduler):
        self.users = users
        self.registry = registry
        self.scheduler = scheduler

    # returns (status, content_type, body_bytes)
    def handle(self, method: str, path: str, headers: dict[str, str],
               body: bytes) -> tuple[int, str, bytes]:
        try:
            caller = authenticate(self.users, headers.get("authorization"),
                                  headers.get("cookie"))
            payload = self._parse_body(body)
            return self._route(method, path, caller, payload)
        except PortalError as exc:
            return self._error(exc)

    @staticmethod
    def _parse_body(body: bytes) -> dict:
        if not body:
            return {}
        try:
            parsed = json.loads(body)
        except ValueError:
            raise BadRequest("request body is not valid JSON") from None
        if not isinstance(parsed, dict):
            raise BadRequest("request body must be a JSON object")
        return parsed

    @staticmethod
    def _json(status: int, data) -> tuple[int, str, bytes]:
        return status, JSON_CT, (json.dumps(data) + "\n").encode()

    @staticmethod
    def _error(exc: PortalError) -> tuple[int, str, bytes]:
        body = json.dumps({"error": exc.code, "message": exc.detail or exc.code}) + "\n"
        return exc.http_status, JSON_CT, body.encode()

    def _route(self, method: str, path: str, caller: Principal,
               payload: dict) -> tuple[int, str, bytes]:
        segments = [s for s in path.split("/") if s]  # "/api/x/y" -> ["api","x","y"]
        if segments[:1] != ["api"]:
            raise NotFound(path)
        route: Callable | None = None
        if segments == ["api", "whoami"] and method == "GET":
            route = lambda: self._whoami(caller)
        elif segments == ["api", "forwards"]:
            if method == "GET":
                route = lambda: self._list_forwards(caller)
            elif method == "POST":
                route = lambda: self._claim(caller, payload)
        elif len(segments) == 3 and segments[:2] == ["api", "forwards"]:
            name = segments[2]
            if method == "PUT":
                route = lambda: self._set_destination(caller, name, payload)
            elif method == "DELETE":
                route = lambda: self._release(caller, name)
        elif len(segments) == 4 and segments[:2] == ["api", "forwards"] and segments[3] == "mode":
            name = segments[2]
            if method == "PUT":
                route = lambda: self._set_mode(caller, name, payload)
        elif segments == ["api", "jobs"]:
            if method == "GET":
                route = lambda: self._list_jobs(caller)
            elif method == "POST":
                route = lambda: self._launch(caller, payload)
        elif len(segments) == 3 and segments[:2] == ["api", "jobs"]:
            job_id = segments[2]
            if method == "DELETE":
                route = lambda: self._stop(caller, job_id)
        if route is None:
            raise NotFound(f"{method} {path}")
        return route()

    # -- endpoint bodies -----------------------------------------------------

    def _whoami(self, caller: Principal):
        return self._json(200, {
            "display_name": caller.display_name,
            "uid": caller.uid,
            "primary_gid": caller.primary_gid,
            "groups": sorted(caller.groups),
        })

    def _list_forwards(self, caller: Principal):
        visible = [
            forward_view(r, caller) for r in self.registry.records()
            if r.owner_uid == caller.uid or check_connect_permission(r, caller)
        ]
        return self._json(200, visible)

    def _claim(self, caller: Principal, payload: dict):
        name = payload.get("name")
        if not isinstance(name, str):
            raise BadRequest("claim requires a string 'name'")
        record = self.registry.claim(name, caller)
        return self._json(201, forward_view(record, caller))

    def _set_destination(self, caller: Principal, name: str, payload: dict):
        if payload.get("disabled"):
            record = self.registry.set_destination(name, caller, None)
        else:
            node, port = payload.get("node"), payload.get("port")
            if not isinstance(node, str) or not isinstance(port, int):
                raise BadRequest("destination requires 'node' and integer 'port'"
                                  " (or {'disabled': true})")
            record = self.registry.set_destination(name, caller, (node, port))
        return self._json(200, forward_view(record, caller))

    def _set_mode(self, caller: Principal, name: str, payload: dict):
        mode = payload.get("mode")
        if not isinstance(mode, str):
            raise BadRequest("mode update requires a string 'mode' like \"750\"")
        record = self.registry.set_access(name, caller, mode)
        return self._json(200, forward_view(record, caller))

    def _release(self, caller: Principal, name: str):
        self.registry.release(name, caller)
        return 204, JSON_CT, b""

    def _list_jobs(self, caller: Principal):
        return self._json(200, [job_view(j) for j in self.scheduler.list_jobs(caller)])

    def _launch(self, caller: Principal, payload: dict):
        node = payload.get("node")
        app_kind = payload.get("app_kind")
        port_count = payload.get("port_count", 1)
        if not isinstance(node, str) or not isinstance(app_kind, str) \
                or not isinstance(port_count, int):
            raise BadRequest("launch requires 'node', 'app_kind', optional int 'port_count'")
        job = self.scheduler.launch(caller, node, app_kind, port_count)
        return self._json(201, job_view(job))

    def _stop(self, caller: Principal, job_id: str):
        if not job_id.isdigit():
            raise NotFound(f"job {job_id}")
        self.scheduler.stop(int(job_id), caller)
        return 204, JSON_CT, b""
