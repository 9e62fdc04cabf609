"""Command-line front-end.

Every subcommand builds one request for :class:`KnowledgeService` and renders
the envelope. ``--json`` prints the envelope exactly as the HTTP server would.

Exit codes: 0 success, 1 validation found violations, 2 parse failure,
3 service error (or scenario mismatch).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .api import Clock, KnowledgeService, ServerConfig, encode, make_server
from .scenario import DEFAULT_CLOCK, DEFAULT_WINDOW, load_fixture, scenario_walkthrough
from .store import Graph
from .terms import DEFAULT_INSTANCE_NS
from .turtle import PrefixMap, TurtleError, load_turtle

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_SERVICE = 0, 1, 2, 3

PARSE_CODES = {"parse-error", "bad-request", "malformed-triple", "invalid-window", "unknown-service"}


def _load(args) -> KnowledgeService:
    path = getattr(args, "path", None) or args.data
    prefixes = PrefixMap.standard(args.namespace)
    graph = Graph()
    if path:
        doc = load_turtle(path, prefixes)
        prefixes, graph = doc.prefixes, doc.graph()
    return KnowledgeService(graph, prefixes, not args.no_inference, Clock.parse(args.clock))


def _emit(args, response, render) -> int:
    if args.json:
        sys.stdout.buffer.write(encode(response))
        sys.stdout.flush()
    elif response["status"] == "ok":
        for line in render(response["payload"]):
            print(line)
    if response["status"] != "ok":
        err = response["error"]
        print(f"error: {err['code']}: {err['message']}", file=sys.stderr)
        return EXIT_PARSE if err["code"] in PARSE_CODES else EXIT_SERVICE
    return EXIT_OK


def _call(args, service, params, render) -> int:
    svc = _load(args)
    return _emit(args, svc.handle({"service": service, "params": params, "requestId": args.request_id}), render)


# -- renderers --

def _render_decision(p):
    if p["allowed"]:
        yield f"ALLOWED via {p['matchedRight']}"
    else:
        yield f"DENIED ({p['reason']})"


def _render_grant(p):
    yield f"{p['kind']} granted: {p['tempRole']} [{p['window']['start']} .. {p['window']['end']}]"
    for r in p["rights"]:
        yield f"  {r}"


def _render_env(p):
    if not p["adjustments"]:
        yield "no adjustments"
    for a in p["adjustments"]:
        yield f"{a['property']}: {a['old']} -> {a['new']}"


def _render_table(p):
    yield "\t".join("?" + v for v in p["variables"])
    for row in p["table"]:
        yield "\t".join("" if t is None else t for t in row)


def _render_validation(p):
    yield "valid" if p["valid"] else "INVALID"
    for kind in ("violations", "warnings"):
        for v in p[kind]:
            yield f"  {v['severity']} {v['rule']} {v['focus']}: {v['message']}"


# -- commands --

def cmd_load(args) -> int:
    svc = _load(args)
    g = svc.graph
    subjects = {t.subject for t in g.triples()}
    print(f"{len(g)} triples, {len(subjects)} subjects")
    return EXIT_OK


def cmd_validate(args) -> int:
    svc = _load(args)
    response = svc.handle({"service": "validate", "params": {}, "requestId": args.request_id})
    code = _emit(args, response, _render_validation)
    if code == EXIT_OK and not response["payload"]["valid"]:
        return EXIT_INVALID
    return code


def cmd_query(args) -> int:
    text = args.query
    if args.query_file:
        text = Path(args.query_file).read_text(encoding="utf-8")
    if not text:
        print("error: give a query with --query or --query-file", file=sys.stderr)
        return EXIT_PARSE
    return _call(args, "query", {"query": text}, _render_table)


def cmd_access(args) -> int:
    params = {"agent": args.agent, "system": args.system, "type": args.type, "site": args.site, "at": args.at}
    return _call(args, "access-check", params, _render_decision)


def _grant_params(args):
    return {"from": args.source, "to": args.target, "activity": args.activity, "start": args.start, "end": args.end}


def cmd_collaborate(args) -> int:
    return _call(args, "collaborate", _grant_params(args), _render_grant)


def cmd_delegate(args) -> int:
    return _call(args, "delegate", _grant_params(args), _render_grant)


def cmd_env(args) -> int:
    return _call(args, "environment.apply", {"agent": args.agent, "site": args.site}, _render_env)


def cmd_expire(args) -> int:
    return _call(args, "expire", {"at": args.at}, lambda p: [f"retired {p['retired']} membership(s) at {p['at']}"])


def cmd_export(args) -> int:
    svc = _load(args)
    response = svc.handle({"service": "export", "params": {}, "requestId": args.request_id})
    if args.output and response["status"] == "ok":
        Path(args.output).write_text(response["payload"]["turtle"], encoding="utf-8")
        return EXIT_OK
    return _emit(args, response, lambda p: [p["turtle"].rstrip("\n")])


def cmd_scenario(args) -> int:
    path = args.path or args.data
    graph = load_turtle(path).graph() if path else load_fixture()
    clock = args.clock if args.clock not in (None, "real") else DEFAULT_CLOCK
    transcript = scenario_walkthrough(graph, clock, (args.start, args.end))
    if args.json:
        print(json.dumps(transcript.to_dict(), sort_keys=True, indent=2, default=str))
    else:
        for line in transcript.lines():
            print(line)
    if not transcript.ok:
        failed = transcript.first_failure
        print(f"error: scenario-mismatch: {failed.name if failed else 'validation'}", file=sys.stderr)
        return EXIT_SERVICE
    return EXIT_OK


def cmd_serve(args) -> int:
    config = ServerConfig(args.path or args.data, args.namespace, not args.no_inference,
                          args.clock or "real", args.host, args.port)
    service = KnowledgeService.from_config(config)
    server = make_server(service, config.host, config.port)
    host, port = server.server_address[:2]
    print(f"serving {len(service.graph)} triples on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def _global_flags(parser, defaults: bool) -> None:
    def d(value):
        return value if defaults else argparse.SUPPRESS

    parser.add_argument("--data", default=d(None), help="Turtle file to load")
    parser.add_argument("--namespace", default=d(DEFAULT_INSTANCE_NS), help="instance namespace bound to ':'")
    parser.add_argument("--no-inference", action="store_true", default=d(False),
                        help="evaluate queries without subclass closure")
    parser.add_argument("--clock", default=d(None), help="'real' or a fixed xsd:dateTime used as 'now'")
    parser.add_argument("--json", action="store_true", default=d(False), help="print the raw response envelope")
    parser.add_argument("--request-id", default=d("cli"), help=argparse.SUPPRESS)
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semioe", description=__doc__.splitlines()[0])
    _global_flags(parser, defaults=True)
    # the same flags are accepted after the subcommand name
    shared = argparse.ArgumentParser(add_help=False)
    _global_flags(shared, defaults=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, fn, help):
        p = sub.add_parser(name, help=help, parents=[shared])
        p.add_argument("path", nargs="?", help="Turtle file (overrides --data)")
        p.set_defaults(func=fn)
        return p

    command("load", cmd_load, "parse a file and print a summary")
    command("validate", cmd_validate, "run the validation rules")

    p = command("query", cmd_query, "evaluate a SELECT query")
    p.add_argument("-q", "--query")
    p.add_argument("-f", "--query-file")

    p = command("access-check", cmd_access, "decide whether an agent may act on a system")
    p.add_argument("--agent", required=True)
    p.add_argument("--system", required=True)
    p.add_argument("--type", required=True, help="right type, e.g. :read")
    p.add_argument("--site", help="defaults to the agent's location")
    p.add_argument("--at", help="decision time; defaults to --clock")

    for name, fn, text in (("collaborate", cmd_collaborate, "grant a collaboration role"),
                           ("delegate", cmd_delegate, "grant a delegation role")):
        p = command(name, fn, text)
        p.add_argument("--from", dest="source", required=True)
        p.add_argument("--to", dest="target", required=True)
        p.add_argument("--activity", required=True)
        p.add_argument("--start", required=True)
        p.add_argument("--end", required=True)

    p = command("env-apply", cmd_env, "apply an agent's environment preferences")
    p.add_argument("--agent", required=True)
    p.add_argument("--site")

    p = command("expire", cmd_expire, "retire memberships whose role window has ended")
    p.add_argument("--at")

    p = command("export", cmd_export, "serialize the graph as Turtle")
    p.add_argument("-o", "--output")

    p = command("scenario", cmd_scenario, "run the assembly-line walkthrough")
    p.add_argument("--start", default=DEFAULT_WINDOW[0])
    p.add_argument("--end", default=DEFAULT_WINDOW[1])

    p = command("serve", cmd_serve, "start the JSON-over-HTTP server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TurtleError as exc:
        print(f"error: parse-error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: io-error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
