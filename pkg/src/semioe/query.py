"""SELECT queries over basic graph patterns with an optional MINUS group.

Queries are built programmatically (``Query``/``TriplePattern``/``Variable``)
or parsed from a small SPARQL text subset with :func:`parse_query`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .schema import closure
from .store import Graph
from .terms import BlankNode, Iri, Literal, Term, term_key
from .turtle import PrefixMap, TermReader, TokenStream, TurtleError, render_term, tokenize


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return "?" + self.name


PatternTerm = Union[Term, Variable]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __post_init__(self):
        if isinstance(self.predicate, (Literal, BlankNode)):
            raise QueryError(f"predicate must be an IRI or variable, got {self.predicate!r}")
        if isinstance(self.subject, Literal):
            raise QueryError(f"subject cannot be a literal: {self.subject!r}")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def variables(self) -> list[str]:
        return [t.name for t in self if isinstance(t, Variable)]


@dataclass(frozen=True)
class Query:
    projection: tuple[str, ...]
    where: tuple[TriplePattern, ...]
    minus: tuple[TriplePattern, ...] = ()

    def __init__(self, projection: Iterable[Union[str, Variable]], where: Iterable[TriplePattern],
                 minus: Iterable[TriplePattern] = ()):
        proj = tuple(v.name if isinstance(v, Variable) else v.lstrip("?$") for v in projection)
        object.__setattr__(self, "projection", proj)
        object.__setattr__(self, "where", tuple(where))
        object.__setattr__(self, "minus", tuple(minus))
        if not self.where:
            raise QueryError("query has an empty WHERE group")
        if not proj:
            raise QueryError("query projects no variables")
        bound = {v for p in self.where for v in p.variables()}
        missing = [v for v in proj if v not in bound]
        if missing:
            raise QueryError(f"projected variable(s) not bound in WHERE: {', '.join('?' + m for m in missing)}")


@dataclass
class BindingSet:
    variables: tuple[str, ...]
    rows: list[dict[str, Term]] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def tuples(self) -> list[tuple[Term, ...]]:
        return [tuple(r[v] for v in self.variables) for r in self.rows]

    def column(self, var: str) -> list[Term]:
        return [r[var] for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "rows": [{v: _json_term(r[v]) for v in self.variables} for r in self.rows],
        }

    def to_table(self, prefixes: Optional[PrefixMap] = None, sep: str = "\t") -> str:
        pm = prefixes or PrefixMap()
        lines = [sep.join("?" + v for v in self.variables)]
        for r in self.rows:
            lines.append(sep.join(render_term(r[v], pm) for v in self.variables))
        return "\n".join(lines) + "\n"


def _json_term(t: Term):
    if isinstance(t, Iri):
        return {"type": "iri", "value": t.value}
    if isinstance(t, BlankNode):
        return {"type": "bnode", "value": t.label}
    out = {"type": "literal", "value": t.lexical, "datatype": t.datatype.value}
    if t.lang:
        out["lang"] = t.lang
    return out


# --- evaluation ------------------------------------------------------------

def inferred_graph(g: Graph) -> Graph:
    """Closure-materialized copy of ``g``, cached until ``g`` next changes."""
    with g.lock:
        cached = getattr(g, "_closure_cache", None)
        if cached is not None and cached[0] == g.version:
            return cached[1]
        result = closure(g)
        g._closure_cache = (g.version, result)
        return result


Solution = dict[str, Term]


def _bind(pattern: TriplePattern, sol: Solution) -> tuple:
    return tuple(sol.get(t.name) if isinstance(t, Variable) else t for t in pattern)


def _bound_count(pattern: TriplePattern, names: set) -> int:
    return sum(1 for t in pattern if not isinstance(t, Variable) or t.name in names)


def match_bgp(g: Graph, patterns: Sequence[TriplePattern]) -> list[Solution]:
    """All solutions of a conjunctive pattern group (most-bound pattern first)."""
    solutions: list[Solution] = [{}]
    remaining = list(patterns)
    bound: set[str] = set()
    while remaining and solutions:
        remaining.sort(key=lambda p: -_bound_count(p, bound))
        pattern = remaining.pop(0)
        nxt = []
        for sol in solutions:
            s, p, o = _bind(pattern, sol)
            if isinstance(p, (Literal, BlankNode)) or isinstance(s, Literal):
                continue
            for triple in g.match(s, p, o):
                ext = _extend(pattern, triple, sol)
                if ext is not None:
                    nxt.append(ext)
        solutions = nxt
        bound.update(pattern.variables())
    return solutions


def _extend(pattern: TriplePattern, triple, sol: Solution) -> Optional[Solution]:
    out = dict(sol)
    for slot, value in zip(pattern, triple):
        if isinstance(slot, Variable):
            prev = out.get(slot.name)
            if prev is None:
                out[slot.name] = value
            elif prev != value:
                return None
    return out


def _compatible(a: Solution, b: Solution) -> bool:
    shared = a.keys() & b.keys()
    return bool(shared) and all(a[k] == b[k] for k in shared)


def evaluate(g: Graph, q: Query, inference: bool = True) -> BindingSet:
    """Evaluate ``q``; by default over the subclass closure of ``g``."""
    target = inferred_graph(g) if inference else g
    with target.lock:
        solutions = match_bgp(target, q.where)
        if q.minus:
            removed = match_bgp(target, q.minus)
            solutions = [s for s in solutions if not any(_compatible(s, m) for m in removed)]
    rows = {tuple(s[v] for v in q.projection) for s in solutions}
    ordered = sorted(rows, key=lambda r: tuple(term_key(t) for t in r))
    return BindingSet(q.projection, [dict(zip(q.projection, r)) for r in ordered])


# --- text front-end --------------------------------------------------------

def parse_query(
    text: str,
    prefixes: Optional[PrefixMap] = None,
    params: Optional[Mapping[str, Term]] = None,
) -> Query:
    """Parse ``[PREFIX ...] SELECT ?v ... WHERE { patterns [MINUS { patterns }] }``.

    ``params`` fills placeholder IRIs such as ``<agent>`` in query templates.
    """
    pm = prefixes.copy() if prefixes else PrefixMap.standard()
    try:
        ts = TokenStream(tokenize(text, allow_vars=True))
    except TurtleError as exc:
        raise QueryError(str(exc)) from exc
    reader = TermReader(pm, params)
    try:
        while ts.at_word("PREFIX"):
            ts.next()
            label = ts.expect("PNAME", what="prefix label").text[:-1]
            pm.bind(label, ts.expect("IRIREF", what="namespace IRI").text[1:-1])
        if not ts.at_word("SELECT"):
            raise ts.error("query must start with SELECT", "SELECT")
        ts.next()
        if ts.at_word("DISTINCT"):
            ts.next()
        projection = []
        while ts.at("VAR"):
            projection.append(ts.next().text[1:])
        if not projection:
            raise ts.error("no projected variables", "variable")
        if ts.at_word("WHERE"):
            ts.next()
        where, minus = _group(ts, reader, allow_minus=True)
        if not ts.at("EOF"):
            raise ts.error(f"unexpected {ts.peek().text!r}", "end of query")
    except TurtleError as exc:
        raise QueryError(str(exc)) from exc
    return Query(projection, where, minus)


def _group(ts: TokenStream, reader: TermReader, allow_minus: bool):
    ts.expect("PUNCT", "{", "'{'")
    patterns: list[TriplePattern] = []
    minus: list[TriplePattern] = []
    while not ts.at("PUNCT", "}"):
        if allow_minus and ts.at_word("MINUS"):
            ts.next()
            inner, _ = _group(ts, reader, allow_minus=False)
            minus.extend(inner)
        else:
            _pattern_block(ts, reader, patterns)
        while ts.at("PUNCT", "."):
            ts.next()
    ts.expect("PUNCT", "}", "'}'")
    return patterns, minus


def _read(ts: TokenStream, reader: TermReader, position: str) -> PatternTerm:
    if ts.at("VAR"):
        return Variable(ts.next().text[1:])
    return reader.read(ts, position)


def _pattern_block(ts: TokenStream, reader: TermReader, out: list[TriplePattern]) -> None:
    subject = _read(ts, reader, "subject")
    while True:
        predicate = _read(ts, reader, "predicate")
        while True:
            out.append(TriplePattern(subject, predicate, _read(ts, reader, "object")))
            if ts.at("PUNCT", ","):
                ts.next()
                continue
            break
        if ts.at("PUNCT", ";"):
            ts.next()
            if ts.at("PUNCT", ".") or ts.at("PUNCT", "}"):
                return
            continue
        return
