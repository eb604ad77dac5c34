import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest


class StubServer:
    """Minimal JSON-over-HTTP stub for exercising remote-backend wire
    contracts. `routes` maps a POST path to a callable(payload) -> (status,
    body dict); set `delay_s` to simulate a slow backend."""

    def __init__(self, routes, delay_s=0.0):
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                if stub.delay_s:
                    time.sleep(stub.delay_s)
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
                stub.requests.append((self.path, payload))
                handler = stub.routes.get(self.path)
                if handler is None:
                    self.send_error(404)
                    return
                status, body = handler(payload)
                raw = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

            def log_message(self, *args):
                pass

        self.routes = routes
        self.delay_s = delay_s
        self.requests = []
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self):
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    servers = []

    def factory(routes, delay_s=0.0):
        server = StubServer(routes, delay_s=delay_s)
        servers.append(server)
        return server

    yield factory
    for server in servers:
        server.close()
