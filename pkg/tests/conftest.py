from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from types import SimpleNamespace

import pytest


class RpcStubHandler(BaseHTTPRequestHandler):
    """Configurable eth_getCode stub; class attributes hold the scenario."""

    codes: dict[str, str] = {}
    fail_next = 0
    garbage = False

    def do_POST(self):  # noqa: N802  (http.server API)
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        cls = type(self)
        if cls.fail_next > 0:
            cls.fail_next -= 1
            self.send_response(500)
            self.end_headers()
            return
        if cls.garbage:
            payload = b"not json"
        else:
            address = body["params"][0]
            result = cls.codes.get(address, "0x")
            payload = json.dumps({"jsonrpc": "2.0", "id": body["id"], "result": result}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):  # silence test output
        pass


@pytest.fixture()
def rpc_server():
    server = HTTPServer(("127.0.0.1", 0), RpcStubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    RpcStubHandler.codes = {}
    RpcStubHandler.fail_next = 0
    RpcStubHandler.garbage = False
    yield SimpleNamespace(url=f"http://127.0.0.1:{server.server_port}", handler=RpcStubHandler)
    server.shutdown()
    thread.join(timeout=5)
