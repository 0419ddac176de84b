"""WebSocket framing unit tests and the echo app round trip."""

import io

import pytest

from portalgate import wsproto
from portalgate.apps import WsEchoApp
from portalgate.wsproto import (OP_BINARY, OP_CLOSE, OP_PING, OP_TEXT, WSClient, accept_key,
                                encode_frame, read_frame, read_message)

from conftest import next_node_ip


def test_accept_key_rfc_vector():
    # the handshake example key from the protocol RFC
    assert accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="


@pytest.mark.parametrize("size", [0, 1, 125, 126, 127, 65535, 65536, 70000])
def test_frame_roundtrip_sizes(size):
    payload = bytes(i % 251 for i in range(size))
    for mask in (False, True):
        encoded = encode_frame(OP_BINARY, payload, mask=mask)
        fin, opcode, decoded = read_frame(io.BytesIO(encoded))
        assert fin and opcode == OP_BINARY
        assert decoded == payload


def test_fragmented_message_assembly():
    stream = io.BytesIO(
        encode_frame(OP_TEXT, b"hel", fin=False)
        + encode_frame(0x0, b"lo", fin=True))
    opcode, payload = read_message(stream)
    assert (opcode, payload) == (OP_TEXT, b"hello")


def test_mask_is_involution():
    key = b"\x12\x34\x56\x78"
    data = bytes(range(256))
    masked = wsproto._mask_bytes(data, key)
    assert masked != data
    assert wsproto._mask_bytes(masked, key) == data


@pytest.fixture
def echo_app():
    host = next_node_ip()
    app = WsEchoApp(host, [0])
    # port 0 binds ephemeral; recover the real port
    app.ports = [srv.server_address[1] for srv in app._servers]
    app.start()
    yield app
    app.stop()


def test_echo_roundtrip(echo_app):
    client = WSClient(echo_app.host, echo_app.ports[0])
    assert client.handshake_status == 101
    client.send_text("ping")
    assert client.recv() == (OP_TEXT, b"ping")
    client.send_bytes(b"\x00\x01")
    assert client.recv() == (OP_BINARY, b"\x00\x01")
    client.send_close()
    assert client.recv()[0] == OP_CLOSE
    client.close()


def test_echo_ping_pong(echo_app):
    client = WSClient(echo_app.host, echo_app.ports[0])
    client._sock.sendall(encode_frame(OP_PING, b"hb", mask=True))
    opcode, payload = client.recv()
    assert (opcode, payload) == (wsproto.OP_PONG, b"hb")
    client.close()


def test_non_websocket_request_rejected(echo_app):
    import http.client
    conn = http.client.HTTPConnection(echo_app.host, echo_app.ports[0], timeout=5)
    conn.request("GET", "/")
    assert conn.getresponse().status == 400
    conn.close()
