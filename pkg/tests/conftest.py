"""Shared fixtures: default config, providers, and a stub embedding server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from chartreward.config import RewardConfig
from chartreward.conformity import HashedTrigramProvider


@pytest.fixture()
def cfg() -> RewardConfig:
    return RewardConfig()


@pytest.fixture()
def provider() -> HashedTrigramProvider:
    return HashedTrigramProvider()


def stub_embed_vector(text: str, dimension: int = 64) -> list[float]:
    """Deliberately different embedding from the fallback provider: hashed
    character bigrams at a smaller dimension."""
    import zlib

    vec = np.zeros(dimension)
    text = text.lower()
    grams = [text[i : i + 2] for i in range(len(text) - 1)] or ([text] if text else [])
    for gram in grams:
        vec[zlib.crc32(f"stub:{gram}".encode()) % dimension] += 1.0
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return [float(x) for x in vec]


class _EmbedHandler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802 - http.server API
        if self.path != "/embed":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        vectors = [stub_embed_vector(t) for t in payload["texts"]]
        body = json.dumps({"vectors": vectors}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):  # silence per-request noise
        pass


@pytest.fixture(scope="session")
def embed_server():
    """Base URL of a live stub embedding service."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _EmbedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
