"""The HTTP front door.

Parses the /fw/ and /fw2/ route prefixes, authenticates, authorizes via the
registry and the user-based firewall, then forwards HTTP requests (with
response hygiene and HTML rewriting) or relays WebSocket upgrades byte for
byte. Passthrough paths serve the control-plane API under /api/ and static
UI assets under /ui/; they never reach a backend.

No TCP connection to a backend is opened until resolution and authorization
have succeeded. Bodies stream through a bounded window in both directions;
the gateway never buffers a whole body.
"""

from __future__ import annotations

import http.client
import logging
import mimetypes
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import urlsplit

from .api import ControlPlaneAPI
from .errors import (AccessDenied, BackendUnreachable, Disabled, HandshakeFailed, LookupFailure,
                     PortalError)
from .firewall import IdentClient, authorize_direct, authorize_named
from .principals import COOKIE_NAME, UserTable, authenticate
from .registry import ForwardStore, check_connect_permission
from .rewrite import (HtmlRewriter, charset_is_ascii_compatible, rewrite_location_header,
                      should_rewrite)
from .routing import DirectForward, NamedForward, Passthrough, parse_route

log = logging.getLogger(__name__)

STREAM_WINDOW = 64 * 1024
CONNECT_TIMEOUT = 5.0
BODY_IDLE_TIMEOUT = 60.0
MAX_API_BODY = 10 * 1024 * 1024
MAX_HANDSHAKE = 64 * 1024

# headers that never cross the proxy (plus Proxy-* and anything listed in
# the Connection header); Upgrade survives only on the websocket relay path
_HOP_BY_HOP = frozenset({
    "connection", "keep-alive", "proxy-authenticate", "proxy-authorization",
    "te", "trailer", "trailers", "transfer-encoding", "upgrade",
})


def _connection_tokens(header_value: str | None) -> set[str]:
    if not header_value:
        return set()
    return {token.strip().lower() for token in header_value.split(",") if token.strip()}


def _strip_portal_cookie(value: str) -> str:
    kept = [part.strip() for part in value.split(";")
            if part.strip().partition("=")[0].strip() != COOKIE_NAME]
    return "; ".join(kept)


class GatewayServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    request_queue_size = 128

    def __init__(self, listen: tuple[str, int], *, users: UserTable, registry: ForwardStore,
                 ident: IdentClient, nodes: dict[str, str], api: ControlPlaneAPI | None = None,
                 ui_dir: str | Path | None = None):
        super().__init__(listen, GatewayHandler)
        self.users = users
        self.registry = registry
        self.ident = ident
        self.nodes = dict(nodes)
        self.api = api
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.server_address[:2]
        return str(host), int(port)

    def start(self) -> None:
        self._thread = threading.Thread(target=lambda: self.serve_forever(poll_interval=0.05),
                                        daemon=True,
                                        name=f"gateway-{self.address[0]}:{self.address[1]}")
        self._thread.start()

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


class GatewayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: GatewayServer

    def log_message(self, fmt, *args):
        log.debug("%s %s", self.address_string(), fmt % args)

    # -- dispatch ---------------------------------------------------------------

    def _handle(self):
        try:
            target = parse_route(self.path)
        except PortalError as exc:
            self._send_error_line(exc.http_status, exc.code)
            return
        if isinstance(target, Passthrough):
            self._handle_passthrough(target.path)
            return
        try:
            principal = authenticate(self.server.users, self.headers.get("Authorization"),
                                     self.headers.get("Cookie"))
            node, port, prefix = self._resolve_and_authorize(target, principal)
        except PortalError as exc:
            self._send_error_line(exc.http_status, exc.code)
            return
        host_ip = self.server.nodes.get(node)
        if host_ip is None:
            self._send_error_line(502, LookupFailure.code)
            return
        if self._is_upgrade():
            self._relay_upgrade(host_ip, node, port, target.rest)
        else:
            self._proxy_http(host_ip, node, port, target.rest, prefix)

    do_GET = do_POST = do_PUT = do_DELETE = do_PATCH = do_HEAD = do_OPTIONS = _handle

    # -- authorization ------------------------------------------------------------

    def _resolve_and_authorize(self, target, principal) -> tuple[str, int, str]:
        """Returns (node, port, rewrite prefix); raises PortalError on deny."""
        if isinstance(target, NamedForward):
            record = self.server.registry.lookup(target.name)
            if not check_connect_permission(record, principal):
                raise AccessDenied(f"forward {target.name!r} does not grant connect")
            if record.destination is None:
                raise Disabled(f"forward {target.name!r} is disabled")
            node, port = record.destination
            listener = self.server.ident.cached_lookup(node, port)
            decision = authorize_named(record, listener)
            if not decision.allow:
                if decision.reason == "no-listener":
                    raise BackendUnreachable(f"nothing listening on {node}:{port}")
                raise AccessDenied(decision.reason)
            return node, port, target.prefix
        assert isinstance(target, DirectForward)
        node, port = target.node, target.port
        listener = self.server.ident.cached_lookup(node, port)
        decision = authorize_direct(principal, listener)
        if not decision.allow:
            if decision.reason == "no-listener":
                raise BackendUnreachable(f"nothing listening on {node}:{port}")
            raise AccessDenied(decision.reason)
        return node, port, target.prefix

    def _is_upgrade(self) -> bool:
        upgrade = (self.headers.get("Upgrade") or "").lower()
        return "websocket" in upgrade and "upgrade" in _connection_tokens(
            self.headers.get("Connection"))

    # -- plain http forwarding -------------------------------------------------------

    def _proxy_http(self, host_ip: str, node: str, port: int, rest: str, prefix: str):
        if self.headers.get("Transfer-Encoding"):
            self._send_error_line(411, "LengthRequired")
            return
        conn = http.client.HTTPConnection(host_ip, port, timeout=CONNECT_TIMEOUT)
        try:
            conn.connect()
        except OSError:
            self._send_error_line(502, BackendUnreachable.code)
            return
        try:
            if conn.sock is not None:
                conn.sock.settimeout(BODY_IDLE_TIMEOUT)
            self._send_backend_request(conn, node, port, rest)
            resp = conn.getresponse()
        except (OSError, http.client.HTTPException):
            conn.close()
            self._send_error_line(502, BackendUnreachable.code)
            return
        try:
            self._relay_response(resp, node, port, prefix)
        except OSError:
            self.close_connection = True
        finally:
            conn.close()

    def _send_backend_request(self, conn: http.client.HTTPConnection, node: str, port: int,
                              rest: str) -> None:
        conn.putrequest(self.command, rest, skip_host=True, skip_accept_encoding=True)
        conn.putheader("Host", f"{node}:{port}")
        original_host = self.headers.get("Host")
        if original_host:
            conn.putheader("X-Forwarded-Host", original_host)
        dropped = _HOP_BY_HOP | _connection_tokens(self.headers.get("Connection"))
        for name, value in self.headers.items():
            lname = name.lower()
            if lname in dropped or lname.startswith("proxy-"):
                continue
            if lname in ("host", "authorization", "x-forwarded-host"):
                continue  # portal credentials and addressing stay at the portal
            if lname == "cookie":
                value = _strip_portal_cookie(value)
                if not value:
                    continue
            conn.putheader(name, value)
        conn.endheaders()
        remaining = int(self.headers.get("Content-Length") or 0)
        while remaining > 0:
            chunk = self.rfile.read(min(STREAM_WINDOW, remaining))
            if not chunk:
                raise ConnectionError("client closed mid-body")
            conn.send(chunk)
            remaining -= len(chunk)

    def _relay_response(self, resp: http.client.HTTPResponse, node: str, port: int,
                        prefix: str) -> None:
        status = resp.status
        content_type = resp.headers.get("Content-Type", "")
        has_body = self.command != "HEAD" and status >= 200 and status not in (204, 304)
        rewriting = (has_body and should_rewrite(content_type)
                     and charset_is_ascii_compatible(content_type))
        upstream_length = resp.headers.get("Content-Length")

        dropped = _HOP_BY_HOP | _connection_tokens(resp.headers.get("Connection"))
        kept: list[tuple[str, str]] = []
        for name, value in resp.getheaders():
            lname = name.lower()
            if lname in dropped or lname.startswith("proxy-"):
                continue
            if lname == "content-length" and rewriting:
                continue  # length changes; chunked framing replaces it
            if lname == "location":
                value = rewrite_location_header(value, prefix, f"{node}:{port}")
            kept.append((name, value))

        if not has_body:
            chunked_out = False
        elif rewriting or upstream_length is None:
            chunked_out = self.request_version == "HTTP/1.1"
        else:
            chunked_out = False
        close_delimited = has_body and not chunked_out and (rewriting or upstream_length is None)

        self.send_response_only(status, resp.reason)
        for name, value in kept:
            self.send_header(name, value)
        if chunked_out:
            self.send_header("Transfer-Encoding", "chunked")
        if close_delimited:
            self.send_header("Connection", "close")
            self.close_connection = True
        self.end_headers()

        if not has_body:
            return
        rewriter = HtmlRewriter(prefix) if rewriting else None
        while True:
            chunk = resp.read(STREAM_WINDOW)
            if not chunk:
                break
            out = rewriter.feed(chunk) if rewriter else chunk
            self._write_body(out, chunked_out)
        if rewriter is not None:
            self._write_body(rewriter.flush(), chunked_out)
        if chunked_out:
            self.wfile.write(b"0\r\n\r\n")

    def _write_body(self, data: bytes, chunked: bool) -> None:
        if not data:
            return
        if chunked:
            self.wfile.write(f"{len(data):x}\r\n".encode("ascii") + data + b"\r\n")
        else:
            self.wfile.write(data)

    # -- websocket relay -----------------------------------------------------------

    def _relay_upgrade(self, host_ip: str, node: str, port: int, rest: str) -> None:
        try:
            backend = socket.create_connection((host_ip, port), timeout=CONNECT_TIMEOUT)
        except OSError:
            self._send_error_line(502, BackendUnreachable.code)
            return
        try:
            lines = [f"{self.command} {rest} HTTP/1.1", f"Host: {node}:{port}"]
            original_host = self.headers.get("Host")
            if original_host:
                lines.append(f"X-Forwarded-Host: {original_host}")
            for name, value in self.headers.items():
                lname = name.lower()
                # handshake keeps Upgrade/Connection/Sec-WebSocket-*
                if lname in ("host", "authorization", "x-forwarded-host"):
                    continue
                if lname.startswith("proxy-"):
                    continue
                if lname == "cookie":
                    value = _strip_portal_cookie(value)
                    if not value:
                        continue
                lines.append(f"{name}: {value}")
            backend.sendall(("\r\n".join(lines) + "\r\n\r\n").encode("latin-1"))
            head = self._read_handshake_head(backend)
            if head is None:
                self._send_error_line(502, HandshakeFailed.code)
                return
            status_parts = head.split(b"\r\n", 1)[0].split(b" ")
            if len(status_parts) < 2 or status_parts[1] != b"101":
                self._send_error_line(502, HandshakeFailed.code)
                return
        except OSError:
            backend.close()
            self._send_error_line(502, HandshakeFailed.code)
            return
        self.wfile.write(head)
        self.wfile.flush()
        client = self.connection
        client.settimeout(None)   # websocket idle is unlimited
        backend.settimeout(None)
        down = threading.Thread(target=_pump, args=(backend, client), daemon=True)
        down.start()
        _pump(client, backend)
        down.join()
        backend.close()
        self.close_connection = True

    @staticmethod
    def _read_handshake_head(backend: socket.socket) -> bytes | None:
        head = b""
        while b"\r\n\r\n" not in head:
            if len(head) > MAX_HANDSHAKE:
                return None
            chunk = backend.recv(4096)
            if not chunk:
                return None
            head += chunk
        return head

    # -- passthrough: control plane + ui ----------------------------------------------

    def _handle_passthrough(self, path: str) -> None:
        parts = urlsplit(path)
        clean = parts.path
        if clean == "/healthz":
            self._send_plain(200, b"ok\n")
            return
        if clean in ("/", "/ui"):
            self._send_redirect("/ui/")
            return
        if clean == "/api" or clean.startswith("/api/"):
            self._handle_api(clean)
            return
        if clean.startswith("/ui/"):
            self._serve_ui(clean[len("/ui/"):])
            return
        self._send_error_line(404, "NotFound")

    def _handle_api(self, path: str) -> None:
        if self.server.api is None:
            self._send_error_line(404, "NotFound")
            return
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_API_BODY:
            self._send_error_line(413, "PayloadTooLarge")
            return
        body = self.rfile.read(length) if length else b""
        headers = {"authorization": self.headers.get("Authorization") or "",
                   "cookie": self.headers.get("Cookie") or ""}
        status, ctype, payload = self.server.api.handle(self.command, path, headers, body)
        self.send_response_only(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(payload)))
        if status == 401:
            self.send_header("WWW-Authenticate", "Bearer")
        self.end_headers()
        if self.command != "HEAD" and payload:
            self.wfile.write(payload)

    def _serve_ui(self, rel: str) -> None:
        root = self.server.ui_dir
        if root is None or not root.is_dir():
            self._send_error_line(404, "NotFound")
            return
        candidate = (root / (rel or "index.html")).resolve()
        if not candidate.is_relative_to(root) or not candidate.is_file():
            self._send_error_line(404, "NotFound")
            return
        ctype = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        body = candidate.read_bytes()
        self.send_response_only(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    # -- small senders ------------------------------------------------------------

    def _send_error_line(self, status: int, code: str) -> None:
        body = f"{status} {code}\n".encode()
        self.send_response_only(status)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        if status == 401:
            self.send_header("WWW-Authenticate", "Bearer")
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def _send_plain(self, status: int, body: bytes) -> None:
        self.send_response_only(status)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def _send_redirect(self, location: str) -> None:
        self.send_response_only(302)
        self.send_header("Location", location)
        self.send_header("Content-Length", "0")
        self.end_headers()


def _pump(src: socket.socket, dst: socket.socket) -> None:
    """One direction of the websocket byte relay; close propagates."""
    try:
        while True:
            data = src.recv(STREAM_WINDOW)
            if not data:
                try:
                    dst.shutdown(socket.SHUT_WR)
                except OSError:
                    pass
                return
            dst.sendall(data)
    except OSError:
        for sock in (src, dst):
            try:
                sock.close()
            except OSError:
                pass
