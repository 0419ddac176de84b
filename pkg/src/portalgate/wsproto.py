"""Minimal WebSocket framing (RFC 6455).

Just enough for the echo demo app and for test clients to produce
transcripts: handshake helpers, frame encode/decode, text/binary/ping/pong/
close. No extensions, no compression. The gateway itself never parses
frames; it relays bytes.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


def accept_key(key: str) -> str:
    return base64.b64encode(hashlib.sha1((key + GUID).encode("ascii")).digest()).decode("ascii")


def _mask_bytes(data: bytes, key: bytes) -> bytes:
    if not data:
        return b""
    rep = (key * (len(data) // 4 + 1))[: len(data)]
    return (int.from_bytes(data, "big") ^ int.from_bytes(rep, "big")).to_bytes(len(data), "big")


def encode_frame(opcode: int, payload: bytes, mask: bool = False, fin: bool = True) -> bytes:
    head = bytearray()
    head.append((0x80 if fin else 0) | opcode)
    n = len(payload)
    mask_bit = 0x80 if mask else 0
    if n < 126:
        head.append(mask_bit | n)
    elif n < 1 << 16:
        head.append(mask_bit | 126)
        head += struct.pack(">H", n)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        return bytes(head) + key + _mask_bytes(payload, key)
    return bytes(head) + payload


def read_exact(rfile, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = rfile.read(n - got)
        if not chunk:
            raise ConnectionError("peer closed mid-frame")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(rfile) -> tuple[bool, int, bytes]:
    """Returns (fin, opcode, unmasked payload)."""
    head = read_exact(rfile, 2)
    fin = bool(head[0] & 0x80)
    opcode = head[0] & 0x0F
    masked = bool(head[1] & 0x80)
    n = head[1] & 0x7F
    if n == 126:
        n = struct.unpack(">H", read_exact(rfile, 2))[0]
    elif n == 127:
        n = struct.unpack(">Q", read_exact(rfile, 8))[0]
    key = read_exact(rfile, 4) if masked else b""
    payload = read_exact(rfile, n)
    if masked:
        payload = _mask_bytes(payload, key)
    return fin, opcode, payload


def read_message(rfile) -> tuple[int, bytes]:
    """Assembles continuation frames into one (opcode, payload) message."""
    fin, opcode, payload = read_frame(rfile)
    parts = [payload]
    while not fin:
        fin, cont, payload = read_frame(rfile)
        if cont != OP_CONT:
            raise ValueError("expected continuation frame")
        parts.append(payload)
    return opcode, b"".join(parts)


class WSClient:
    """Blocking client used by the test and benchmark harnesses."""

    def __init__(self, host: str, port: int, path: str = "/",
                 headers: dict[str, str] | None = None, timeout: float = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._rfile = self._sock.makefile("rb")
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        lines = [
            f"GET {path} HTTP/1.1",
            f"Host: {host}:{port}",
            "Upgrade: websocket",
            "Connection: Upgrade",
            f"Sec-WebSocket-Key: {key}",
            "Sec-WebSocket-Version: 13",
        ]
        for name, value in (headers or {}).items():
            lines.append(f"{name}: {value}")
        self._sock.sendall(("\r\n".join(lines) + "\r\n\r\n").encode("latin-1"))
        status_line = self._rfile.readline().decode("latin-1").rstrip("\r\n")
        self.handshake_status = int(status_line.split(" ", 2)[1])
        response_headers = {}
        while True:
            line = self._rfile.readline().decode("latin-1").rstrip("\r\n")
            if not line:
                break
            name, _, value = line.partition(":")
            response_headers[name.strip().lower()] = value.strip()
        self.handshake_headers = response_headers
        if self.handshake_status == 101:
            expected = accept_key(key)
            if response_headers.get("sec-websocket-accept") != expected:
                raise ConnectionError("bad Sec-WebSocket-Accept from server")

    def send_text(self, text: str) -> None:
        self._sock.sendall(encode_frame(OP_TEXT, text.encode("utf-8"), mask=True))

    def send_bytes(self, data: bytes) -> None:
        self._sock.sendall(encode_frame(OP_BINARY, data, mask=True))

    def recv(self) -> tuple[int, bytes]:
        return read_message(self._rfile)

    def send_close(self, code: int = 1000) -> None:
        self._sock.sendall(encode_frame(OP_CLOSE, struct.pack(">H", code), mask=True))

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass
