import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from openpda.dispatch import CommandMessage, encode, send


class StubApp(BaseHTTPRequestHandler):
    status = 200
    body = b"done"
    received = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        StubApp.received.append((self.path, self.rfile.read(length)))
        self.send_response(StubApp.status)
        self.send_header("content-type", "text/plain")
        self.end_headers()
        self.wfile.write(StubApp.body)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), StubApp)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    StubApp.received = []
    StubApp.status = 200
    StubApp.body = b"done"
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def cmd(**params):
    return CommandMessage(app_name="Home", intent="Turn off",
                          params=tuple(params.items()))


def test_encode_flat_json():
    data = json.loads(encode(cmd(object="the computer")))
    assert data == {"AppName": "Home", "Intent": "Turn off", "object": "the computer"}


def test_encode_examples_match_expected_shapes():
    ex02 = CommandMessage(
        app_name="Calendar", intent="Create remind",
        params=(("Subject", "meet Sasha"), ("Date", "16th of November")),
    )
    assert json.loads(encode(ex02)) == {
        "AppName": "Calendar",
        "Intent": "Create remind",
        "Subject": "meet Sasha",
        "Date": "16th of November",
    }
    ex04 = cmd(object="air conditioning")
    assert json.loads(encode(ex04))["object"] == "air conditioning"


def test_encode_key_order():
    data = json.loads(encode(cmd(object="x")).decode())
    assert list(data.keys()) == ["AppName", "Intent", "object"]


def test_encode_injective():
    seen = set()
    variants = [
        cmd(object="a"),
        cmd(object="b"),
        CommandMessage("Home", "Turn on", (("object", "a"),)),
        CommandMessage("Homer", "Turn off", (("object", "a"),)),
        CommandMessage("Home", "Turn off", ()),
    ]
    for c in variants:
        b = encode(c)
        assert b not in seen
        seen.add(b)


def test_send_ok(stub_server):
    result = send(cmd(object="the light"), stub_server)
    assert result.ok
    assert result.text == "done"
    assert result.latency >= 0
    path, body = StubApp.received[0]
    assert path == "/command"
    assert json.loads(body)["object"] == "the light"


def test_send_app_error(stub_server):
    StubApp.status = 422
    StubApp.body = b"no such thing"
    result = send(cmd(object="the toaster"), stub_server)
    assert result.status == "app_error"
    assert result.code == 422
    assert "no such thing" in result.text


def test_send_unreachable():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    result = send(cmd(object="x"), f"http://127.0.0.1:{port}", timeout=0.5)
    assert result.status == "unreachable"


def test_send_bounded_by_timeout(stub_server):
    import time

    class SlowApp(BaseHTTPRequestHandler):
        def do_POST(self):
            time.sleep(3)
            self.send_response(200)
            self.end_headers()

        def log_message(self, *args):
            pass

    server = HTTPServer(("127.0.0.1", 0), SlowApp)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    start = time.monotonic()
    result = send(cmd(object="x"), f"http://127.0.0.1:{server.server_port}", timeout=0.5)
    elapsed = time.monotonic() - start
    server.shutdown()
    assert result.status == "unreachable"
    assert elapsed < 1.5
