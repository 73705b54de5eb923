"""Local service: newline-delimited JSON over TCP, plus an equivalent
request/response mapping over HTTP (used by the browser workbench).

Every message and response carries "v": 1. Protocol violations produce a
structured error response; the session survives. Sessions are shared
across connections; events within one session apply strictly in order.
"""

from __future__ import annotations

import json
import socketserver
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .engine import (
    CorrectionApplied,
    Engine,
    EngineError,
    StrokeAdded,
    StrokeDeleted,
    state_to_message,
)
from .ink import InkError, InkPoint, Stroke
from .store import StoreError

PROTOCOL_VERSION = 1


def _error(message: str, code: str = "bad_request") -> dict:
    return {"v": PROTOCOL_VERSION, "error": {"code": code, "message": message}}


def _parse_stroke(raw: object) -> Stroke:
    if not isinstance(raw, dict) or "id" not in raw or "points" not in raw:
        raise InkError("stroke must be an object with 'id' and 'points'")
    points = []
    for i, triple in enumerate(raw["points"]):
        if not isinstance(triple, (list, tuple)) or len(triple) != 3:
            raise InkError(f"points[{i}]: expected [x, y, t]")
        points.append(InkPoint(float(triple[0]), float(triple[1]), int(triple[2])))
    return Stroke(str(raw["id"]), tuple(points))


def dispatch(engine: Engine, message: dict) -> dict:
    """Apply one protocol message; never raises on client errors."""
    if not isinstance(message, dict):
        return _error("message must be an object")
    op = message.get("op")
    try:
        if op == "create_session":
            session = engine.create_session()
            return {"v": PROTOCOL_VERSION, "session": session, "revision": 0}
        if op == "add_stroke":
            stroke = _parse_stroke(message.get("stroke"))
            state = engine.apply(str(message.get("session")), StrokeAdded(stroke))
            return state_to_message(state)
        if op == "delete_stroke":
            state = engine.apply(str(message.get("session")),
                                 StrokeDeleted(str(message.get("stroke_id"))))
            return state_to_message(state)
        if op == "correct":
            target = message.get("target")
            if not isinstance(target, dict):
                return _error("'target' must be an object")
            state = engine.apply(str(message.get("session")),
                                 CorrectionApplied(target, message.get("value")))
            out = state_to_message(state)
            out["retrain"] = "scheduled"
            return out
        if op == "snapshot":
            state = engine.snapshot(str(message.get("session")))
            return state_to_message(state)
        if op == "train":
            outcome = engine.train_now(str(message.get("kind")))
            return {"v": PROTOCOL_VERSION, "trained": outcome.kind,
                    "metrics": outcome.metrics}
        return _error(f"unknown op {op!r}", code="unknown_op")
    except (EngineError, InkError, StoreError) as exc:
        return _error(str(exc), code="invalid")


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        while True:
            line = self.rfile.readline()
            if not line:
                return
            text = line.decode("utf-8", errors="replace").strip()
            if not text:
                continue
            try:
                message = json.loads(text)
            except json.JSONDecodeError as exc:
                response = _error(f"malformed JSON: {exc.msg}", code="parse")
            else:
                response = dispatch(self.server.engine, message)  # type: ignore[attr-defined]
            self.wfile.write(json.dumps(response).encode("utf-8") + b"\n")


class InkTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], engine: Engine):
        super().__init__(address, _LineHandler)
        self.engine = engine


class _HTTPHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "POST, GET, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self) -> None:  # noqa: N802 (stdlib naming)
        self.send_response(HTTPStatus.NO_CONTENT)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self) -> None:  # noqa: N802
        if self.path.rstrip("/") not in ("/rpc", ""):
            self._send_json(_error("unknown endpoint", code="not_found"), 404)
            return
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length)
        try:
            message = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            self._send_json(_error(f"malformed JSON: {exc}", code="parse"), 400)
            return
        self._send_json(dispatch(self.server.engine, message))  # type: ignore[attr-defined]

    def do_GET(self) -> None:  # noqa: N802
        if self.path in ("/healthz", "/health"):
            self._send_json({"v": PROTOCOL_VERSION, "status": "ok"})
            return
        ui_dir: Path | None = getattr(self.server, "ui_dir", None)  # type: ignore[attr-defined]
        if ui_dir is not None:
            rel = self.path.lstrip("/") or "index.html"
            candidate = (ui_dir / rel).resolve()
            if candidate.is_file() and ui_dir.resolve() in candidate.parents:
                content = candidate.read_bytes()
                ctype = {
                    ".html": "text/html", ".js": "text/javascript",
                    ".css": "text/css", ".map": "application/json",
                }.get(candidate.suffix, "application/octet-stream")
                self.send_response(200)
                self._cors()
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(content)))
                self.end_headers()
                self.wfile.write(content)
                return
        self._send_json(_error("not found", code="not_found"), 404)

    def log_message(self, fmt: str, *args) -> None:  # silence stdlib chatter
        pass


class InkHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], engine: Engine,
                 ui_dir: Path | None = None):
        super().__init__(address, _HTTPHandler)
        self.engine = engine
        self.ui_dir = ui_dir


class ServiceRunner:
    """Runs the TCP protocol and the HTTP mapping on background threads."""

    def __init__(self, engine: Engine, host: str = "127.0.0.1",
                 port: int = 0, http_port: int | None = 0,
                 ui_dir: Path | None = None):
        self.engine = engine
        self.tcp = InkTCPServer((host, port), engine)
        self.http = (
            InkHTTPServer((host, http_port), engine, ui_dir)
            if http_port is not None else None
        )
        self._threads: list[threading.Thread] = []

    @property
    def tcp_address(self) -> tuple[str, int]:
        return self.tcp.server_address[:2]

    @property
    def http_address(self) -> tuple[str, int] | None:
        return self.http.server_address[:2] if self.http else None

    def start(self) -> None:
        for server in filter(None, (self.tcp, self.http)):
            thread = threading.Thread(target=server.serve_forever, daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        for server in filter(None, (self.tcp, self.http)):
            server.shutdown()
            server.server_close()
        for thread in self._threads:
            thread.join(5.0)

    def serve_forever(self) -> None:
        if not self._threads:
            self.start()
        try:
            for thread in self._threads:
                thread.join()
        except KeyboardInterrupt:
            self.stop()
