"""Request handling shared by the CLI and the HTTP server.

Requests are plain dicts ``{"service": ..., "params": {...}, "requestId": ...}``
and responses are envelopes ``{"requestId", "status", "payload", "audit"}``
(plus ``"error": {"code", "message"}`` on failure). ``encode`` produces the
exact bytes both front-ends emit.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Optional
from urllib.parse import unquote

from . import entities as E
from . import services as S
from .query import QueryError, evaluate, parse_query
from .schema import closure, inferred_types, validate
from .store import Graph
from .terms import DEFAULT_INSTANCE_NS, Iri, Term, TermError, Triple, datetime_literal, term_key
from .turtle import PrefixMap, TurtleError, load_turtle, parse_term, parse_turtle, render_term, serialize_turtle

logger = logging.getLogger(__name__)


class RequestError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class Clock:
    """Wall clock, or a fixed instant for reproducible runs."""

    def __init__(self, fixed: Optional[datetime] = None):
        self.fixed = fixed

    @classmethod
    def parse(cls, spec: Optional[str]) -> "Clock":
        if spec is None or spec == "real":
            return cls()
        return cls(E.as_datetime(spec))

    def now(self) -> datetime:
        return self.fixed or datetime.now(timezone.utc)


@dataclass
class ServerConfig:
    data: Optional[str] = None
    namespace: str = DEFAULT_INSTANCE_NS
    inference: bool = True
    clock: str = "real"
    host: str = "127.0.0.1"
    port: int = 8080


class KnowledgeService:
    def __init__(self, graph: Optional[Graph] = None, prefixes: Optional[PrefixMap] = None,
                 inference: bool = True, clock: Optional[Clock] = None):
        self.graph = graph if graph is not None else Graph()
        self.prefixes = prefixes or PrefixMap.standard()
        self.inference = inference
        self.clock = clock or Clock()

    @classmethod
    def from_config(cls, config: ServerConfig) -> "KnowledgeService":
        prefixes = PrefixMap.standard(config.namespace)
        graph = Graph()
        if config.data:
            doc = load_turtle(config.data, prefixes)
            prefixes, graph = doc.prefixes, doc.graph()
        return cls(graph, prefixes, config.inference, Clock.parse(config.clock))

    # -- helpers --

    def term(self, value) -> Term:
        if not isinstance(value, str) or not value:
            raise RequestError("bad-request", f"expected a term string, got {value!r}")
        try:
            return parse_term(value, self.prefixes)
        except (TurtleError, TermError) as exc:
            raise RequestError("bad-request", f"cannot parse term {value!r}: {exc}") from exc

    def iri(self, params: dict, name: str) -> Term:
        if name not in params:
            raise RequestError("bad-request", f"missing parameter {name!r}")
        return self.term(params[name])

    def time(self, params: dict, name: str = "at"):
        value = params.get(name)
        if value is None:
            return self.clock.now()
        try:
            return E.as_datetime(value)
        except (TermError, TypeError) as exc:
            raise RequestError("bad-request", f"invalid timestamp for {name!r}: {value!r}") from exc

    def render(self, term) -> Optional[str]:
        return None if term is None else render_term(term, self.prefixes)

    # -- entry point --

    def handle(self, request: dict) -> dict:
        rid = request.get("requestId") or str(uuid.uuid4())
        service = request.get("service")
        params = request.get("params") or {}
        handler = self.HANDLERS.get(service)
        try:
            if handler is None:
                raise RequestError("unknown-service", f"no such service: {service!r}")
            payload, audit = handler(self, params)
            return {"requestId": rid, "status": "ok", "payload": payload, "audit": audit}
        except S.ServiceError as exc:
            audit = [s.to_dict() for s in exc.audit]
            return _error(rid, exc.code, exc.message, audit)
        except RequestError as exc:
            return _error(rid, exc.code, exc.message)
        except (TurtleError, QueryError) as exc:
            return _error(rid, "parse-error", str(exc))
        except E.AmbiguityError as exc:
            return _error(rid, "ambiguous", str(exc))
        except (TermError, ValueError) as exc:
            return _error(rid, "bad-request", str(exc))

    # -- handlers: each returns (payload, audit) --

    def _triples_from(self, params) -> list[Triple]:
        if "turtle" in params:
            return parse_turtle(params["turtle"], self.prefixes).triples
        triples = []
        for item in params.get("triples", []):
            try:
                s, p, o = item["s"], item["p"], item["o"]
            except (KeyError, TypeError) as exc:
                raise RequestError("bad-request", "each triple needs 's', 'p' and 'o'") from exc
            try:
                triples.append(Triple(self.term(s), self.term(p), self.term(o)))
            except TermError as exc:
                raise RequestError("malformed-triple", str(exc)) from exc
        return triples

    def add_triples(self, params):
        triples = self._triples_from(params)
        with self.graph.lock:
            added = sum(self.graph.add(t) for t in triples)
        return {"added": added, "size": len(self.graph)}, []

    def remove_triples(self, params):
        triples = self._triples_from(params)
        with self.graph.lock:
            removed = sum(self.graph.remove(t) for t in triples)
        return {"removed": removed, "size": len(self.graph)}, []

    def query(self, params):
        text = params.get("query")
        if not text:
            raise RequestError("bad-request", "missing parameter 'query'")
        inference = params.get("inference", self.inference)
        result = evaluate(self.graph, parse_query(text, self.prefixes), inference=inference)
        payload = result.to_dict()
        payload["table"] = [[self.render(t) for t in row] for row in result.tuples()]
        return payload, []

    def access_check(self, params):
        agent = self.iri(params, "agent")
        system = self.iri(params, "system")
        rtype = self.iri(params, "type")
        site = self.term(params["site"]) if params.get("site") else E.located_in(self.graph, agent)
        at = self.time(params)
        d = S.access_control(self.graph, agent, system, site, rtype, at)
        return {
            "allowed": d.allowed,
            "matchedRight": self.render(d.matched_right),
            "reason": d.reason,
            "at": datetime_literal(at).lexical,
        }, [s.to_dict() for s in d.audit]

    def _grant(self, fn, params):
        a1 = self.iri(params, "from")
        a2 = self.iri(params, "to")
        activity = self.iri(params, "activity")
        start = self.time(params, "start")
        end = self.time(params, "end") if params.get("end") else None
        if end is None:
            raise RequestError("bad-request", "missing parameter 'end'")
        try:
            window = S.TimeWindow(start, end)
        except ValueError as exc:
            raise RequestError("invalid-window", str(exc)) from exc
        grant = fn(self.graph, a1, a2, activity, window)
        return {
            "kind": grant.kind,
            "tempRole": self.render(grant.temp_role),
            "rights": [self.render(r) for r in sorted(grant.rights, key=term_key)],
            "window": grant.window.to_dict(),
            "relation": self.render(grant.relation),
            "membership": self.render(grant.membership),
        }, [s.to_dict() for s in grant.audit]

    def collaborate(self, params):
        return self._grant(S.collaborate, params)

    def delegate(self, params):
        return self._grant(S.delegate, params)

    def environment_apply(self, params):
        agent = self.iri(params, "agent")
        site = self.term(params["site"]) if params.get("site") else E.located_in(self.graph, agent)
        result = S.environment_setting(self.graph, agent, site)
        return {
            "adjustments": [
                {
                    "property": self.render(a.property),
                    "old": self.render(a.old_value),
                    "new": self.render(a.new_value),
                }
                for a in result.adjustments
            ]
        }, [s.to_dict() for s in result.audit]

    def expire(self, params):
        at = self.time(params)
        return {"retired": S.expire_roles(self.graph, at), "at": datetime_literal(at).lexical}, []

    def validate(self, params):
        return validate(self.graph).to_dict(), []

    def entity(self, params):
        node = self.iri(params, "iri")
        g = closure(self.graph) if self.inference else self.graph
        triples = self.graph.match(node, None, None)
        if not triples and not g.match(node, None, None):
            raise RequestError("not-found", f"no statements about {params['iri']}")
        return {
            "iri": node.value,
            "types": [self.render(t) for t in sorted(inferred_types(self.graph, node), key=term_key)],
            "properties": [[self.render(t.predicate), self.render(t.object)] for t in triples],
        }, []

    def export(self, params):
        return {"turtle": serialize_turtle(self.graph.triples(), self.prefixes)}, []

    HANDLERS: dict[str, Callable] = {
        "triples.add": add_triples,
        "triples.remove": remove_triples,
        "query": query,
        "access-check": access_check,
        "collaborate": collaborate,
        "delegate": delegate,
        "environment.apply": environment_apply,
        "expire": expire,
        "validate": validate,
        "entity": entity,
        "export": export,
    }


def _error(rid, code, message, audit=None) -> dict:
    return {"requestId": rid, "status": "error", "error": {"code": code, "message": message},
            "payload": None, "audit": audit or []}


def encode(response: dict) -> bytes:
    return (json.dumps(response, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


# --- HTTP ------------------------------------------------------------------

ROUTES = {
    ("POST", "/triples"): "triples.add",
    ("DELETE", "/triples"): "triples.remove",
    ("POST", "/query"): "query",
    ("POST", "/access-check"): "access-check",
    ("POST", "/collaborate"): "collaborate",
    ("POST", "/delegate"): "delegate",
    ("POST", "/environment/apply"): "environment.apply",
    ("POST", "/expire"): "expire",
    ("GET", "/validate"): "validate",
    ("GET", "/export"): "export",
}

_STATUS = {
    "ok": HTTPStatus.OK,
    "bad-request": HTTPStatus.BAD_REQUEST,
    "malformed-triple": HTTPStatus.BAD_REQUEST,
    "parse-error": HTTPStatus.BAD_REQUEST,
    "invalid-window": HTTPStatus.BAD_REQUEST,
    "unknown-service": HTTPStatus.NOT_FOUND,
    "not-found": HTTPStatus.NOT_FOUND,
}


def make_handler(service: KnowledgeService):
    class Handler(BaseHTTPRequestHandler):
        server_version = "semioe/0.1"

        def log_message(self, fmt, *args):
            logger.info("%s - " + fmt, self.address_string(), *args)

        def _dispatch(self, method):
            path = self.path.split("?", 1)[0]
            body = {}
            length = int(self.headers.get("Content-Length") or 0)
            if length:
                try:
                    body = json.loads(self.rfile.read(length))
                except json.JSONDecodeError as exc:
                    return self._send(_error(None, "bad-request", f"invalid JSON body: {exc}"))
            if not isinstance(body, dict):
                return self._send(_error(None, "bad-request", "request body must be a JSON object"))
            if method == "GET" and path.startswith("/entities/"):
                name, params = "entity", {"iri": unquote(path[len("/entities/"):])}
            else:
                name = ROUTES.get((method, path))
                params = body.get("params", {k: v for k, v in body.items() if k != "requestId"})
            request = {"service": name, "params": params,
                       "requestId": body.get("requestId") or self.headers.get("X-Request-Id")}
            if name is None:
                request["service"] = f"{method} {path}"
            self._send(service.handle(request))

        def _send(self, response):
            data = encode(response)
            code = HTTPStatus.OK if response["status"] == "ok" else _STATUS.get(
                response["error"]["code"], HTTPStatus.UNPROCESSABLE_ENTITY)
            self.send_response(code)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def do_DELETE(self):
            self._dispatch("DELETE")

    return Handler


def make_server(service: KnowledgeService, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), make_handler(service))


def serve_in_thread(service: KnowledgeService, host: str = "127.0.0.1", port: int = 0, poll_interval: float = 0.05):
    """Start a server on a daemon thread; returns (server, thread)."""
    server = make_server(service, host, port)
    thread = threading.Thread(target=server.serve_forever, kwargs={"poll_interval": poll_interval}, daemon=True)
    thread.start()
    return server, thread
