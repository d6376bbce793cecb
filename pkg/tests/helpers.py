"""Shared test doubles: scripted backends and a scripted webhook receiver."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from alertprobe.backend import TargetBackend, TcpConnectResult


def _resolve(spec):
    """A response spec is a value, an exception to raise, or a callable."""
    if callable(spec):
        return _resolve(spec())
    if isinstance(spec, BaseException):
        raise spec
    return spec


class ScriptedBackend(TargetBackend):
    """Backend whose answers are scripted per capability.

    http: dict (method, auth) -> (status, body) | exception | callable
    tcp: list of TcpConnectResult/exceptions consumed in order, or a single spec
    key / assume / secret: single spec each
    delay: seconds slept before every answer (for concurrency/timeout tests)
    """

    def __init__(self, http=None, tcp=None, key=None, assume=None, secret=None, delay=0.0):
        self._http = http or {}
        self._tcp = list(tcp) if isinstance(tcp, (list, tuple)) else tcp
        self._key = key
        self._assume = assume
        self._secret = secret
        self._delay = delay
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()
        self._active = 0
        self.max_active = 0

    def _enter(self, action: str, tag: str) -> None:
        with self._lock:
            self.calls.append((action, tag))
            self._active += 1
            self.max_active = max(self.max_active, self._active)
        if self._delay:
            time.sleep(self._delay)

    def _exit(self) -> None:
        with self._lock:
            self._active -= 1

    def http_request(self, method, endpoint, auth, tag):
        self._enter(f"http {method} auth={auth}", tag)
        try:
            spec = self._http.get((method, auth), (403, b"denied"))
            value = _resolve(spec)
            if isinstance(value, int):
                value = (value, b"x" if value == 200 else b"")
            return value
        finally:
            self._exit()

    def tcp_connect(self, host, port, timeout, tag):
        self._enter(f"tcp {host}:{port}", tag)
        try:
            if isinstance(self._tcp, list):
                spec = self._tcp.pop(0) if self._tcp else TcpConnectResult("closed")
            else:
                spec = self._tcp if self._tcp is not None else TcpConnectResult("closed")
            value = _resolve(spec)
            if isinstance(value, str):
                value = TcpConnectResult(value)
            return value
        finally:
            self._exit()

    def key_status(self, key_id, tag):
        self._enter(f"key {key_id}", tag)
        try:
            return _resolve(self._key if self._key is not None else "inactive")
        finally:
            self._exit()

    def assume_role_scoped(self, key_id, tag):
        self._enter(f"assume {key_id}", tag)
        try:
            return _resolve(self._assume if self._assume is not None else "denied")
        finally:
            self._exit()

    def secret_check(self, secret_value, tag):
        self._enter("secret", tag)
        try:
            return _resolve(self._secret if self._secret is not None else "invalid")
        finally:
            self._exit()


class HangingBackend(TargetBackend):
    """Every call blocks for `hang` seconds; exercises the engine's time cap."""

    def __init__(self, hang: float = 30.0):
        self._hang = hang

    def _stall(self):
        time.sleep(self._hang)
        raise AssertionError("call should have been abandoned before this")

    def http_request(self, method, endpoint, auth, tag):
        self._stall()

    def tcp_connect(self, host, port, timeout, tag):
        self._stall()

    def key_status(self, key_id, tag):
        self._stall()

    def assume_role_scoped(self, key_id, tag):
        self._stall()

    def secret_check(self, secret_value, tag):
        self._stall()


class WebhookReceiver:
    """Loopback HTTP receiver with a scripted sequence of response codes."""

    def __init__(self, statuses: list[int] | None = None):
        self.statuses = list(statuses or [])
        self.requests: list[dict] = []
        lock = threading.Lock()
        receiver = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length)
                with lock:
                    receiver.requests.append({
                        "body": json.loads(body) if body else None,
                        "tag": self.headers.get("X-Probe-Tag", ""),
                    })
                    status = receiver.statuses.pop(0) if receiver.statuses else 200
                self.send_response(status)
                self.send_header("Content-Length", "0")
                self.end_headers()

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self._server.server_address[1]}/hook"

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=2.0)

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
