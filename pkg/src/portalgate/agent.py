"""Per-node agent answering "who owns the process listening on port P?".

Wire protocol, UTF-8, LF-terminated, one request per line (connections may
be reused and requests pipelined):

    request:   LOOKUP <port>
    responses: OWNER <uid> <gid>  |  NONE  |  ERR <reason>

Registrations are pushed by the scheduler when jobs start and stop; the
agent answers from current registrations only.
"""

from __future__ import annotations

import socketserver
import threading


class _AgentHandler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            reply = self.server.respond(raw)  # type: ignore[attr-defined]
            try:
                self.wfile.write(reply)
                self.wfile.flush()
            except OSError:
                return


class IdentAgent(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True
    request_queue_size = 128

    def __init__(self, listen: tuple[str, int]):
        super().__init__(listen, _AgentHandler)
        self._registrations: dict[int, tuple[int, int]] = {}
        self._reg_lock = threading.Lock()
        self._stats_lock = threading.Lock()
        self.queries_served = 0
        self._thread: threading.Thread | None = None

    # -- registration interface used by the scheduler ---------------------

    def register(self, port: int, uid: int, gid: int) -> None:
        with self._reg_lock:
            self._registrations[port] = (uid, gid)

    def unregister(self, port: int) -> None:
        with self._reg_lock:
            self._registrations.pop(port, None)

    def owner_of(self, port: int) -> tuple[int, int] | None:
        with self._reg_lock:
            return self._registrations.get(port)

    # -- wire protocol -----------------------------------------------------

    def respond(self, raw_line: bytes) -> bytes:
        fields = raw_line.split()
        if len(fields) != 2 or fields[0] != b"LOOKUP" or not fields[1].isdigit():
            return b"ERR malformed\n"
        port = int(fields[1])
        if not 1 <= port <= 65535:
            return b"ERR malformed\n"
        with self._stats_lock:
            self.queries_served += 1
        owner = self.owner_of(port)
        if owner is None:
            return b"NONE\n"
        return f"OWNER {owner[0]} {owner[1]}\n".encode("ascii")

    # -- lifecycle -----------------------------------------------------------

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.server_address[:2]
        return str(host), int(port)

    def start(self) -> None:
        self._thread = threading.Thread(target=lambda: self.serve_forever(poll_interval=0.05),
                                        daemon=True,
                                        name=f"ident-agent-{self.address[0]}:{self.address[1]}")
        self._thread.start()

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
