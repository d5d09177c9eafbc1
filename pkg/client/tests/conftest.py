"""Stub scoring servers shared across client tests."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


class StubState:
    def __init__(self, mode: str):
        self.mode = mode  # "golden" or "fail"
        self.calls = 0
        self.bodies: list[dict] = []


def make_handler(state: StubState):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            state.calls += 1
            length = int(self.headers.get("Content-Length", 0))
            state.bodies.append(json.loads(self.rfile.read(length)))
            if state.mode == "fail":
                self.send_error(500, "synthetic failure")
                return
            body = (DATA / "golden_score_response.json").read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return Handler


def _serve(mode: str):
    state = StubState(mode)
    server = ThreadingHTTPServer(("127.0.0.1", 0), make_handler(state))
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server, state


@pytest.fixture()
def golden_server():
    server, state = _serve("golden")
    yield f"http://127.0.0.1:{server.server_address[1]}", state
    server.shutdown()


@pytest.fixture()
def failing_server():
    server, state = _serve("fail")
    yield f"http://127.0.0.1:{server.server_address[1]}", state
    server.shutdown()
