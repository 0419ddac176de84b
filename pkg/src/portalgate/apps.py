"""Demo web applications the scheduler can launch on simulated nodes.

Four kinds:
  echo-http       answers every request with "<method> <path> <body sha256>"
  echo-ws         WebSocket echo server (raw sockets, RFC 6455)
  token-notebook  small HTML page with root-relative links, gated by ?token=
  static-site     fixed HTML/asset tree incl. the 31 paths of the shipped
                  benchmark manifest, redirects, and a /blob endpoint

Responses carry no Date/Server headers so a direct fetch and a proxied
fetch of the same resource are byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from socketserver import StreamRequestHandler, ThreadingTCPServer
from urllib.parse import parse_qs, urlsplit

from . import wsproto

# -- deterministic fixture content ---------------------------------------------


def seeded_bytes(seed: str, size: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < size:
        out += hashlib.sha256(f"{seed}:{counter}".encode()).digest()
        counter += 1
    return bytes(out[:size])


def _filler_text(seed: str, size: int, comment: str) -> bytes:
    lines = [f"{comment} fixture {seed}".encode()]
    counter = 0
    total = len(lines[0]) + 1
    while total < size:
        line = f"{comment} {hashlib.sha256(f'{seed}:{counter}'.encode()).hexdigest()}".encode()
        lines.append(line)
        total += len(line) + 1
        counter += 1
    return b"\n".join(lines)[:size]


_INDEX_HTML = b"""<!DOCTYPE html>
<html>
<head>
<title>workbench</title>
<link rel="stylesheet" href="/static/main.css">
<link rel="icon" type="image/x-icon" href="/static/favicon.ico">
<script src="/static/require.js" defer></script>
<script src="/static/vendor.js" defer></script>
<script src="/static/main.js" defer></script>
</head>
<body>
<div id="header" style="background: url(/static/logo.png) no-repeat">
  <img src="/static/logo.png" alt="logo">
  <a href="/tree">files</a>
  <a href="/lab">lab</a>
  <a href="#bottom">jump</a>
  <a href="local/relative.html">relative</a>
  <a href="https://example.org/docs">docs</a>
  <script src="//cdn.example.invalid/analytics.js"></script>
</div>
<form action="/api/sessions" method="post">
  <input type="text" name="name" value="untitled">
  <button type="submit">new session</button>
</form>
<ul id="components">
  <li><a href="/static/components/c00.js">c00</a></li>
  <li><a href="/static/components/c01.css">c01</a></li>
</ul>
<div id="bottom">ready</div>
</body>
</html>
"""

_TOKEN_PAGE_HTML = b"""<!DOCTYPE html>
<html>
<head>
<title>notebook</title>
<link rel="stylesheet" href="/static/nb.css">
<script src="/static/nb.js" defer></script>
</head>
<body>
<div class="toolbar" style="background-image: url(/static/logo.png)">
  <a href="/tree">tree</a>
  <a href="/edit/readme.md">edit</a>
  <a href="relative/path">rel</a>
  <a href="//cdn.example.invalid/x.js">cdn</a>
</div>
<form action="/api/save" method="post"><button>save</button></form>
<img src="/static/logo.png" alt="">
</body>
</html>
"""


def _component_asset(index: int) -> tuple[str, str, bytes]:
    kinds = [("js", "application/javascript"), ("js", "application/javascript"),
             ("css", "text/css"), ("png", "image/png"), ("js", "application/javascript")]
    ext, ctype = kinds[index % len(kinds)]
    size = 1800 + (index * index * 997) % 43000
    path = f"/static/components/c{index:02d}.{ext}"
    if ext == "png":
        body = seeded_bytes(path, size)
    else:
        body = _filler_text(path, size, "//" if ext == "js" else "/*")
    return path, ctype, body


def _build_assets() -> dict[str, tuple[str, bytes]]:
    assets: dict[str, tuple[str, bytes]] = {
        "/": ("text/html; charset=utf-8", _INDEX_HTML),
        "/static/require.js": ("application/javascript", _filler_text("require", 91000, "//")),
        "/static/main.css": ("text/css", _filler_text("main.css", 28000, "/*")),
        "/static/vendor.js": ("application/javascript", _filler_text("vendor", 123000, "//")),
        "/static/main.js": ("application/javascript", _filler_text("main.js", 57000, "//")),
        "/static/logo.png": ("image/png", seeded_bytes("logo", 12600)),
        "/static/favicon.ico": ("image/x-icon", seeded_bytes("favicon", 4286)),
        "/api/config": ("application/json", json.dumps(
            {"appName": "workbench", "version": "0.1.0", "features": ["terminals", "kernels"]}
        ).encode()),
        "/api/contents": ("application/json", json.dumps(
            {"name": "", "path": "", "type": "directory",
             "content": [{"name": f"nb{i:02d}.ipynb", "type": "notebook"} for i in range(12)]}
        ).encode()),
        "/api/kernelspecs": ("application/json", json.dumps(
            {"default": "python3",
             "kernelspecs": {"python3": {"name": "python3", "spec": {"language": "python"}}}}
        ).encode()),
        "/api/sessions": ("application/json", json.dumps([]).encode()),
        "/tree": ("text/html; charset=utf-8",
                  b'<html><body><a href="/">home</a><ul><li>notebooks</li></ul></body></html>'),
    }
    for i in range(20):
        path, ctype, body = _component_asset(i)
        assets[path] = (ctype, body)
    return assets


STATIC_ASSETS = _build_assets()

# ordered manifest of the 31 requests a fresh UI load issues, grouped by
# dependency: the page, then layout-blocking files, then components, then
# data/imagery fetched by the running scripts
MANIFEST_ENTRIES: list[tuple[str, str, int]] = (
    [("/", "text/html", 0)]
    + [(p, STATIC_ASSETS[p][0].partition(";")[0], 1)
       for p in ("/static/require.js", "/static/main.css", "/static/vendor.js", "/static/main.js")]
    + [(_component_asset(i)[0], _component_asset(i)[1], 2) for i in range(20)]
    + [(p, STATIC_ASSETS[p][0].partition(";")[0], 3)
       for p in ("/static/logo.png", "/static/favicon.ico", "/api/config",
                 "/api/contents", "/api/kernelspecs", "/api/sessions")]
)


# -- server plumbing -------------------------------------------------------------


class _CountingHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    request_queue_size = 128

    def __init__(self, addr, handler):
        super().__init__(addr, handler)
        self.app: DemoApp | None = None
        self.connections_accepted = 0
        self._count_lock = threading.Lock()

    def get_request(self):
        result = super().get_request()
        with self._count_lock:
            self.connections_accepted += 1
        return result


class _QuietHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # noqa: ARG002 - keep test output clean
        pass

    def _respond(self, status: int, ctype: str, body: bytes,
                 extra: list[tuple[str, str]] | None = None) -> None:
        self.send_response_only(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        for name, value in extra or []:
            self.send_header(name, value)
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""


class DemoApp:
    """One demo application bound to every port it was assigned."""

    kind = "demo"

    def __init__(self, host: str, ports: list[int], token: str | None = None):
        self.host = host
        self.ports = list(ports)
        self.token = token
        self._servers: list = []
        self._threads: list[threading.Thread] = []
        for port in self.ports:
            server = self._make_server(host, port)
            server.app = self
            self._servers.append(server)

    def _make_server(self, host: str, port: int):
        raise NotImplementedError

    def start(self) -> None:
        for server in self._servers:
            thread = threading.Thread(target=lambda srv=server: srv.serve_forever(poll_interval=0.05),
                                      daemon=True,
                                      name=f"{self.kind}-{self.host}:{server.server_address[1]}")
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        for server in self._servers:
            server.shutdown()
            server.server_close()
        for thread in self._threads:
            thread.join(timeout=5)
        self._threads.clear()

    @property
    def connections_accepted(self) -> int:
        return sum(s.connections_accepted for s in self._servers)


class _EchoHttpHandler(_QuietHandler):
    def _echo(self):
        body_bytes = self._read_body()
        if self.path.split("?")[0] == "/headers":
            received = {name.lower(): value for name, value in self.headers.items()}
            self._respond(200, "application/json", json.dumps(received).encode())
            return
        digest = hashlib.sha256(body_bytes).hexdigest()
        body = f"{self.command} {self.path} {digest}\n".encode()
        self._respond(200, "text/plain; charset=utf-8", body)

    do_GET = do_POST = do_PUT = do_DELETE = do_PATCH = do_HEAD = do_OPTIONS = _echo


class EchoHttpApp(DemoApp):
    kind = "echo-http"

    def _make_server(self, host, port):
        return _CountingHTTPServer((host, port), _EchoHttpHandler)


class _StaticSiteHandler(_QuietHandler):
    def do_GET(self):
        parts = urlsplit(self.path)
        path, query = parts.path, parse_qs(parts.query)
        if path == "/redirect":
            self._respond(302, "text/plain", b"moved\n", extra=[("Location", "/tree")])
            return
        if path == "/redirect-abs":
            host = self.headers.get("Host", f"{self.server.server_address[0]}")
            self._respond(302, "text/plain", b"moved\n",
                          extra=[("Location", f"http://{host}/tree")])
            return
        if path == "/redirect-foreign":
            self._respond(302, "text/plain", b"moved\n",
                          extra=[("Location", "https://example.org/")])
            return
        if path == "/blob":
            seed = query.get("seed", ["0"])[0]
            size = int(query.get("size", ["1024"])[0])
            body = seeded_bytes(seed, size)
            self._respond(200, "application/octet-stream", body,
                          extra=[("X-Blob-Seed", seed)])
            return
        if path == "/hop":
            # deliberately hop-by-hop-heavy response for proxy hygiene tests
            self._respond(200, "text/plain", b"hop\n", extra=[
                ("X-Keep", "yes"),
                ("Keep-Alive", "timeout=5"),
                ("Proxy-Custom", "1"),
                ("X-Dropped-Via-Connection", "v"),
                ("Connection", "X-Dropped-Via-Connection"),
            ])
            return
        asset = STATIC_ASSETS.get(path)
        if asset is None:
            self._respond(404, "text/plain", b"404 not found\n")
            return
        self._respond(200, asset[0], asset[1])

    do_HEAD = do_GET

    def do_POST(self):
        self._read_body()
        if self.path.split("?")[0].startswith("/api/"):
            self._respond(201, "application/json", b'{"ok": true}')
        else:
            self._respond(404, "text/plain", b"404 not found\n")


class StaticSiteApp(DemoApp):
    kind = "static-site"

    def _make_server(self, host, port):
        return _CountingHTTPServer((host, port), _StaticSiteHandler)


_TOKEN_ASSETS = {
    "/": ("text/html; charset=utf-8", _TOKEN_PAGE_HTML),
    "/static/nb.css": ("text/css", _filler_text("nb.css", 3300, "/*")),
    "/static/nb.js": ("application/javascript", _filler_text("nb.js", 5100, "//")),
    "/static/logo.png": ("image/png", seeded_bytes("logo", 12600)),
    "/tree": ("text/html; charset=utf-8",
              b'<html><body><a href="/">home</a> <a href="/edit/x">edit</a></body></html>'),
}


class _TokenNotebookHandler(_QuietHandler):
    def do_GET(self):
        parts = urlsplit(self.path)
        supplied = parse_qs(parts.query).get("token", [None])[0]
        app = self.server.app
        if supplied != app.token:
            self._respond(401, "text/plain; charset=utf-8", b"401 token required\n")
            return
        asset = _TOKEN_ASSETS.get(parts.path)
        if asset is None:
            self._respond(404, "text/plain", b"404 not found\n")
            return
        self._respond(200, asset[0], asset[1])

    do_HEAD = do_GET


class TokenNotebookApp(DemoApp):
    kind = "token-notebook"

    def __init__(self, host, ports, token=None):
        if not token:
            raise ValueError("token-notebook requires a token")
        super().__init__(host, ports, token=token)

    def _make_server(self, host, port):
        return _CountingHTTPServer((host, port), _TokenNotebookHandler)


# -- websocket echo ---------------------------------------------------------------


class _CountingTCPServer(ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True
    request_queue_size = 128

    def __init__(self, addr, handler):
        super().__init__(addr, handler)
        self.app: DemoApp | None = None
        self.connections_accepted = 0
        self._count_lock = threading.Lock()

    def get_request(self):
        result = super().get_request()
        with self._count_lock:
            self.connections_accepted += 1
        return result


class _WsEchoHandler(StreamRequestHandler):
    def handle(self):
        request_line = self.rfile.readline()
        if not request_line:
            return
        headers: dict[str, str] = {}
        while True:
            line = self.rfile.readline()
            if line in (b"\r\n", b"\n", b""):
                break
            name, _, value = line.decode("latin-1").partition(":")
            headers[name.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key")
        if key is None or "websocket" not in headers.get("upgrade", "").lower():
            self.wfile.write(b"HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n")
            return
        self.wfile.write(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\n"
            b"Connection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + wsproto.accept_key(key).encode("ascii") + b"\r\n\r\n"
        )
        while True:
            try:
                opcode, payload = wsproto.read_message(self.rfile)
            except (ConnectionError, ValueError, OSError):
                return
            if opcode == wsproto.OP_CLOSE:
                try:
                    self.wfile.write(wsproto.encode_frame(wsproto.OP_CLOSE, payload))
                except OSError:
                    pass
                return
            if opcode == wsproto.OP_PING:
                self.wfile.write(wsproto.encode_frame(wsproto.OP_PONG, payload))
                continue
            self.wfile.write(wsproto.encode_frame(opcode, payload))


class WsEchoApp(DemoApp):
    kind = "echo-ws"

    def _make_server(self, host, port):
        return _CountingTCPServer((host, port), _WsEchoHandler)


APP_KINDS = {
    "echo-http": EchoHttpApp,
    "echo-ws": WsEchoApp,
    "token-notebook": TokenNotebookApp,
    "static-site": StaticSiteApp,
}
