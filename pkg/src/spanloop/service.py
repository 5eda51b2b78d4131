"""HTTP JSON API for the live annotation loop.

Built on the standard-library threading HTTP server: desk-scale request
volume does not justify a framework dependency.  All mutating endpoints
funnel through one non-blocking mutex, so anything arriving while training
(or another mutation) holds it gets a 409 "busy" and should retry.

Field names and lint semantics are pinned by data/api_schema.json, which the
browser workbench consumes as its contract.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources
from urllib.parse import parse_qs, urlparse

from .annotations import SentenceAnnotation
from .loop import LoopError, run_iteration
from .store import ProjectState

__all__ = ["AnnotationService", "make_server", "serve_forever"]


def api_schema() -> dict:
    text = resources.files("spanloop.data").joinpath("api_schema.json").read_text("utf-8")
    return json.loads(text)


class ApiError(Exception):
    def __init__(self, status: int, message: str, extra: dict | None = None):
        super().__init__(message)
        self.status = status
        self.payload = {"error": message, **(extra or {})}


class AnnotationService:
    """Endpoint logic, independent of the HTTP plumbing (testable directly)."""

    def __init__(self, state: ProjectState):
        self.state = state
        self._mutex = threading.Lock()

    # -- helpers ---------------------------------------------------------------

    def _open_batch_or_409(self):
        batch = self.state.open_batch()
        if batch is None:
            raise ApiError(409, "iteration not ready: no open batch")
        return batch

    def _parse_annotations(self, body: dict, annotator_id: str, phase: str) -> list[SentenceAnnotation]:
        if not annotator_id:
            raise ApiError(400, "annotator_id is required")
        records = body.get("annotations")
        if not isinstance(records, list):
            raise ApiError(400, "body must carry an 'annotations' list")
        out = []
        for rec in records:
            try:
                ann = SentenceAnnotation.from_json(rec)
            except (KeyError, ValueError, TypeError) as exc:
                raise ApiError(400, f"malformed annotation record: {exc}")
            ann.annotator = annotator_id
            ann.phase = phase
            out.append(ann)
        return out

    # -- endpoints -------------------------------------------------------------

    def next_batch(self, annotator_id: str) -> dict:
        if not annotator_id:
            raise ApiError(400, "annotator_id is required")
        batch = self._open_batch_or_409()
        pool = self.state.pool()
        pretags = self.state.annotations("pretag")
        from .annotations import validate_annotation

        items = []
        for sid in batch.sentence_ids:
            sentence = pool.get(sid)
            pretag = pretags.get(sid)
            spans = [s.to_json() for s in pretag.spans] if pretag else []
            lints = []
            if pretag:
                lints = [
                    {"code": f.code, "message": f.message, "severity": f.severity}
                    for f in validate_annotation(sentence, pretag)
                ]
            items.append(
                {
                    "sentence_id": sid,
                    "text": sentence.text,
                    "tokens": [[a, b] for a, b in sentence.tokens],
                    "spans": spans,
                    "lints": lints,
                    "split_hint": batch.split_hint.get(sid, "train"),
                }
            )
        return {"iteration": batch.iteration, "sentences": items}

    def adjudication_next(self, adjudicator_id: str) -> dict:
        if not adjudicator_id:
            raise ApiError(400, "annotator_id is required")
        batch = self._open_batch_or_409()
        pool = self.state.pool()
        blind = self.state.blind_by_annotator()
        gold = self.state.annotations("gold")
        items = []
        for sid in batch.sentence_ids:
            if sid in gold:
                continue
            passes = blind.get(sid, {})
            if len(passes) < 2:
                continue
            annotators = sorted(passes)[:2]
            a, b = passes[annotators[0]], passes[annotators[1]]
            proposal = None
            if set(a.spans) == set(b.spans):
                proposal = [s.to_json() for s in sorted(a.spans)]
            items.append(
                {
                    "sentence_id": sid,
                    "text": pool.get(sid).text,
                    "tokens": [[x, y] for x, y in pool.get(sid).tokens],
                    "blind": {
                        annotators[0]: [s.to_json() for s in sorted(a.spans)],
                        annotators[1]: [s.to_json() for s in sorted(b.spans)],
                    },
                    "proposal": proposal,
                }
            )
        return {"iteration": batch.iteration, "sentences": items}

    def submit_blind(self, annotator_id: str, body: dict) -> dict:
        if not self._mutex.acquire(blocking=False):
            raise ApiError(409, "busy: another mutation or training run is in progress")
        try:
            batch = self._open_batch_or_409()
            annotations = self._parse_annotations(body, annotator_id, "blind")
            in_batch = set(batch.sentence_ids)
            accepted, rejected = [], []
            for ann in annotations:
                if ann.sentence_id not in in_batch:
                    rejected.append({"sentence_id": ann.sentence_id, "reason": "not in the open batch"})
                else:
                    accepted.append(ann)
            report = self.state.append_annotations("blind", accepted)
            rejected += [{"sentence_id": sid, "reason": reason} for sid, reason in report.rejected]
            return {"accepted": report.imported, "rejected": rejected}
        finally:
            self._mutex.release()

    def submit_gold(self, adjudicator_id: str, body: dict) -> dict:
        if not self._mutex.acquire(blocking=False):
            raise ApiError(409, "busy: another mutation or training run is in progress")
        try:
            batch = self._open_batch_or_409()
            annotations = self._parse_annotations(body, adjudicator_id, "gold")
            in_batch = set(batch.sentence_ids)
            accepted, rejected = [], []
            for ann in annotations:
                if ann.sentence_id not in in_batch:
                    rejected.append({"sentence_id": ann.sentence_id, "reason": "not in the open batch"})
                else:
                    accepted.append(ann)
            report = self.state.append_annotations("gold", accepted)
            rejected += [{"sentence_id": sid, "reason": reason} for sid, reason in report.rejected]
            return {
                "accepted": report.imported,
                "rejected": rejected,
                "batch_closeable": self.state.open_batch() is None,
            }
        finally:
            self._mutex.release()

    def run_iteration_endpoint(self) -> dict:
        if not self._mutex.acquire(blocking=False):
            raise ApiError(409, "busy: another mutation or training run is in progress")
        try:
            outcome = run_iteration(self.state)
        except LoopError as exc:
            raise ApiError(409, str(exc))
        finally:
            self._mutex.release()
        payload = outcome.record.to_json()
        payload["status"] = "terminal" if outcome.terminal else "selected"
        return payload

    def metrics(self) -> dict:
        return {
            "iterations": [r.to_json() for r in self.state.iteration_records()],
            "entity_counts": self.state.entity_count_summary()
            if self.state.annotations("gold")
            else {},
        }

    def sentence(self, sentence_id: str) -> dict:
        pool = self.state.pool()
        if sentence_id not in pool:
            raise ApiError(404, f"unknown sentence {sentence_id}")
        s = pool.get(sentence_id)
        payload = {
            "sentence_id": s.sentence_id,
            "text": s.text,
            "tokens": [[a, b] for a, b in s.tokens],
            "annotations": {},
        }
        for phase in ("pretag", "blind", "gold"):
            ann = self.state.annotations(phase).get(sentence_id)
            if ann:
                payload["annotations"][phase] = ann.to_json()
        return payload


def _make_handler(service: AnnotationService):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # quiet: tests and CLI don't want stderr spam
            pass

        def _send(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length", "0"))
            if not length:
                return {}
            try:
                return json.loads(self.rfile.read(length))
            except json.JSONDecodeError:
                raise ApiError(400, "request body is not valid JSON")

        def _route(self) -> tuple[int, dict]:
            url = urlparse(self.path)
            query = {k: v[0] for k, v in parse_qs(url.query).items()}
            path = url.path.rstrip("/")
            try:
                if self.command == "GET":
                    if path == "/api/batch/next":
                        return 200, service.next_batch(query.get("annotator_id", ""))
                    if path == "/api/adjudication/next":
                        return 200, service.adjudication_next(query.get("annotator_id", ""))
                    if path == "/api/metrics":
                        return 200, service.metrics()
                    if path == "/api/schema":
                        return 200, api_schema()
                    if path.startswith("/api/sentence/"):
                        return 200, service.sentence(path.rsplit("/", 1)[1])
                elif self.command == "POST":
                    body = self._body()
                    if path == "/api/annotations/blind":
                        return 200, service.submit_blind(body.get("annotator_id", ""), body)
                    if path == "/api/annotations/gold":
                        return 200, service.submit_gold(body.get("annotator_id", ""), body)
                    if path == "/api/iteration/run":
                        return 200, service.run_iteration_endpoint()
                return 404, {"error": f"no such endpoint: {self.command} {path}"}
            except ApiError as exc:
                return exc.status, exc.payload

        def do_GET(self):
            self._send(*self._route())

        def do_POST(self):
            self._send(*self._route())

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

    return Handler


def make_server(state: ProjectState, host: str = "127.0.0.1", port: int = 0):
    """Bound but not yet serving; port 0 picks a free port. Returns (server, service)."""
    service = AnnotationService(state)
    server = ThreadingHTTPServer((host, port), _make_handler(service))
    return server, service


def serve_forever(state: ProjectState, host: str = "127.0.0.1", port: int = 8756) -> None:
    server, _ = make_server(state, host, port)
    print(f"serving on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
