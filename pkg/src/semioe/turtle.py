"""Parser and serializer for a Turtle subset.

Supported: ``@prefix``/``@base`` (and SPARQL-style ``PREFIX``/``BASE``),
prefixed names, absolute IRIs in angle brackets, ``_:label`` blank nodes,
the ``a`` keyword, ``;`` predicate lists, ``,`` object lists, ``"..."``
strings with ``^^datatype`` or ``@lang``, boolean/integer/decimal/double
shorthand and ``#`` comments. Anything else is rejected with a
position-bearing diagnostic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union
from urllib.parse import urljoin

from .terms import (
    BlankNode,
    DEFAULT_INSTANCE_NS,
    Iri,
    Literal,
    RDF_TYPE,
    Term,
    TermError,
    Triple,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    XSD_STRING,
    escape_string,
    term_key,
)

STANDARD_PREFIXES = {
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "foaf": "http://xmlns.com/foaf/0.1/",
    "ioe": "http://w3id.org/semioe#",
    "ssn": "http://www.w3.org/ns/ssn/",
    "ssn-system": "http://www.w3.org/ns/ssn/systems/",
    "sosa": "http://www.w3.org/ns/sosa/",
    "bot": "https://w3id.org/bot#",
    "org": "http://www.w3.org/ns/org#",
}

_ABSOLUTE = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*:\S*\Z")
_PREFIX = r"(?:[A-Za-z](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)?"
_LOCAL = r"(?:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)?"
_LOCAL_RE = re.compile(_LOCAL + r"\Z")


class TurtleError(ValueError):
    pass


class TurtleSyntaxError(TurtleError):
    def __init__(self, message: str, line: int, column: int, expected: Optional[str] = None):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"{message} at line {line}, column {column}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class UnknownPrefixError(TurtleError):
    def __init__(self, prefix: str, line: int = 0, column: int = 0):
        self.prefix = prefix
        self.line = line
        self.column = column
        super().__init__(f"unknown prefix {prefix!r} at line {line}, column {column}")


@dataclass
class PrefixMap:
    entries: dict[str, str] = field(default_factory=dict)
    base: Optional[str] = None

    def __post_init__(self):
        for label, ns in self.entries.items():
            _check_namespace(label, ns)

    @classmethod
    def standard(cls, instance_ns: str = DEFAULT_INSTANCE_NS) -> "PrefixMap":
        return cls({**STANDARD_PREFIXES, "": instance_ns})

    def bind(self, label: str, namespace: str) -> None:
        _check_namespace(label, namespace)
        self.entries[label] = namespace

    def copy(self) -> "PrefixMap":
        return PrefixMap(dict(self.entries), self.base)

    def expand(self, name: str) -> Iri:
        """Expand ``prefix:local`` (or an absolute IRI) to an Iri."""
        if name.startswith("<") and name.endswith(">"):
            return Iri(name[1:-1])
        label, sep, local = name.partition(":")
        if not sep:
            raise TurtleError(f"not a prefixed name or IRI: {name!r}")
        if label in self.entries:
            return Iri(self.entries[label] + local)
        if local.startswith("//") or label in ("urn", "mailto"):
            return Iri(name)
        raise UnknownPrefixError(label)

    def compress(self, iri: Iri) -> Optional[str]:
        best = None
        for label, ns in self.entries.items():
            if iri.value.startswith(ns):
                local = iri.value[len(ns):]
                if _LOCAL_RE.match(local) and (best is None or len(ns) > len(best[1])):
                    best = (label, ns, local)
        if best is None:
            return None
        return f"{best[0]}:{best[2]}"


def _check_namespace(label, ns):
    if not re.fullmatch(_PREFIX, label):
        raise TurtleError(f"invalid prefix label {label!r}")
    if not _ABSOLUTE.match(ns):
        raise TurtleError(f"namespace for {label!r} is not an absolute IRI: {ns!r}")


@dataclass
class TurtleDocument:
    prefixes: PrefixMap
    triples: list[Triple]

    def graph(self):
        from .store import Graph

        return Graph(self.triples)


# --- tokenizer -------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int
    value: object = None


_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("IRIREF", r"<[^<>\"{}|^`\\\s]*>"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"'),
    ("DIRECTIVE", r"@(?:prefix|base)\b"),
    ("LANGTAG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("DTYPE", r"\^\^"),
    ("DOUBLE", r"[+-]?(?:\d+\.\d*|\.\d+|\d+)[eE][+-]?\d+"),
    ("DECIMAL", r"[+-]?\d*\.\d+"),
    ("INTEGER", r"[+-]?\d+"),
    ("BLANK", r"_:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?"),
    ("VAR", r"[?$][A-Za-z0-9_]+"),
    ("PNAME", _PREFIX + ":" + _LOCAL),
    ("WORD", r"[A-Za-z][A-Za-z0-9_]*"),
    ("PUNCT", r"[.;,{}]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{k}>{p})" for k, p in _TOKEN_SPEC))
_STRING_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


def tokenize(source: str, allow_vars: bool = False) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise TurtleSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        kind, text = m.lastgroup, m.group()
        if kind == "VAR" and not allow_vars:
            raise TurtleSyntaxError(f"unexpected variable {text!r}", line, col)
        if kind == "PUNCT" and text in "{}" and not allow_vars:
            raise TurtleSyntaxError(f"unexpected {text!r}", line, col)
        if kind == "STRING":
            tokens.append(Token(kind, text, line, col, _unescape(text[1:-1], line, col)))
        elif kind not in ("WS", "COMMENT"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _STRING_ESCAPES:
                raise TurtleSyntaxError(f"unsupported escape \\{nxt}", line, col + i + 1)
            out.append(_STRING_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "WORD" and tok.text.upper() == word.upper()

    def expect(self, kind: str, text: Optional[str] = None, what: Optional[str] = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            raise self.error(f"unexpected {_describe(tok)}", what or text or kind)
        return self.next()

    def error(self, message: str, expected: Optional[str] = None) -> TurtleSyntaxError:
        tok = self.peek()
        return TurtleSyntaxError(message, tok.line, tok.column, expected)


def _describe(tok: Token) -> str:
    return "end of input" if tok.kind == "EOF" else repr(tok.text)


# --- term reading, shared with the query front-end -------------------------

class TermReader:
    def __init__(self, prefixes: PrefixMap, params: Optional[Mapping[str, Term]] = None):
        self.prefixes = prefixes
        self.params = params or {}

    def iri(self, tok: Token) -> Iri:
        if tok.kind == "IRIREF":
            ref = tok.text[1:-1]
            if _ABSOLUTE.match(ref):
                return Iri(ref)
            if ref in self.params:
                return self.params[ref]
            if self.prefixes.base:
                return Iri(urljoin(self.prefixes.base, ref))
            raise TurtleSyntaxError(f"relative IRI <{ref}> with no base", tok.line, tok.column)
        if tok.kind == "PNAME":
            label, _, local = tok.text.partition(":")
            if label not in self.prefixes.entries:
                raise UnknownPrefixError(label, tok.line, tok.column)
            try:
                return Iri(self.prefixes.entries[label] + local)
            except TermError as exc:
                raise TurtleSyntaxError(str(exc), tok.line, tok.column) from exc
        raise TurtleSyntaxError(f"unexpected {_describe(tok)}", tok.line, tok.column, "IRI")

    def read(self, ts: TokenStream, position: str) -> Term:
        """Read one term at ``position`` ('subject', 'predicate' or 'object')."""
        tok = ts.peek()
        if tok.kind in ("IRIREF", "PNAME"):
            ts.next()
            return self.iri(tok)
        if position == "predicate":
            if tok.kind == "WORD" and tok.text == "a":
                ts.next()
                return RDF_TYPE
            raise ts.error(f"unexpected {_describe(tok)}", "predicate")
        if tok.kind == "BLANK":
            ts.next()
            return BlankNode(tok.text[2:])
        if position == "subject":
            raise ts.error(f"unexpected {_describe(tok)}", "subject")
        if tok.kind == "STRING":
            ts.next()
            if ts.at("LANGTAG"):
                return Literal(tok.value, lang=ts.next().text[1:])
            if ts.at("DTYPE"):
                ts.next()
                dt = ts.next()
                return Literal(tok.value, self.iri(dt))
            return Literal(tok.value, XSD_STRING)
        if tok.kind in ("INTEGER", "DECIMAL", "DOUBLE"):
            ts.next()
            dt = {"INTEGER": XSD_INTEGER, "DECIMAL": XSD_DECIMAL, "DOUBLE": XSD_DOUBLE}[tok.kind]
            return Literal(tok.text, dt)
        if tok.kind == "WORD" and tok.text in ("true", "false"):
            ts.next()
            return Literal(tok.text, XSD_BOOLEAN)
        raise ts.error(f"unexpected {_describe(tok)}", "object")


# --- parser ----------------------------------------------------------------

def parse_turtle(
    source: str,
    prefixes: Union[PrefixMap, Mapping[str, str], None] = None,
) -> TurtleDocument:
    """Parse Turtle text. ``prefixes`` seeds the prefix map (document directives win)."""
    if prefixes is None:
        pm = PrefixMap()
    elif isinstance(prefixes, PrefixMap):
        pm = prefixes.copy()
    else:
        pm = PrefixMap(dict(prefixes))
    ts = TokenStream(tokenize(source))
    reader = TermReader(pm)
    triples: list[Triple] = []
    while not ts.at("EOF"):
        if ts.at("DIRECTIVE"):
            directive = ts.next().text
            _directive(ts, pm, directive[1:])
            ts.expect("PUNCT", ".", "'.' after directive")
        elif ts.at_word("PREFIX") or ts.at_word("BASE"):
            _directive(ts, pm, ts.next().text.lower())
        else:
            _statement(ts, reader, triples)
    return TurtleDocument(pm, triples)


def _directive(ts: TokenStream, pm: PrefixMap, name: str) -> None:
    if name == "prefix":
        tok = ts.expect("PNAME", what="prefix label")
        label, _, local = tok.text.partition(":")
        if local:
            raise TurtleSyntaxError("prefix label must end with ':'", tok.line, tok.column, "prefix label")
        iri_tok = ts.expect("IRIREF", what="namespace IRI")
        ns = iri_tok.text[1:-1]
        if not _ABSOLUTE.match(ns):
            if not pm.base:
                raise TurtleSyntaxError("namespace is not an absolute IRI", iri_tok.line, iri_tok.column)
            ns = urljoin(pm.base, ns)
        pm.bind(label, ns)
    else:
        iri_tok = ts.expect("IRIREF", what="base IRI")
        ref = iri_tok.text[1:-1]
        pm.base = urljoin(pm.base, ref) if pm.base else ref


def _statement(ts: TokenStream, reader: TermReader, out: list[Triple]) -> None:
    subject = reader.read(ts, "subject")
    while True:
        predicate = reader.read(ts, "predicate")
        while True:
            obj = reader.read(ts, "object")
            out.append(Triple(subject, predicate, obj))
            if ts.at("PUNCT", ","):
                ts.next()
                continue
            break
        if ts.at("PUNCT", ";"):
            while ts.at("PUNCT", ";"):
                ts.next()
            if ts.at("PUNCT", "."):
                break
            continue
        break
    if not ts.at("PUNCT", "."):
        tok = ts.peek()
        if tok.kind == "EOF":
            raise ts.error("unterminated statement", "'.'")
        raise ts.error(f"unexpected {_describe(tok)}", "'.', ';' or ','")
    ts.next()


def load_turtle(path, prefixes=None) -> TurtleDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_turtle(fh.read(), prefixes)


# --- serializer ------------------------------------------------------------

def render_term(term: Term, prefixes: PrefixMap) -> str:
    if isinstance(term, Iri):
        return prefixes.compress(term) or term.n3()
    if isinstance(term, BlankNode):
        return str(term)
    body = '"' + escape_string(term.lexical) + '"'
    if term.lang:
        return f"{body}@{term.lang}"
    if term.datatype == XSD_STRING:
        return body
    return f"{body}^^{render_term(term.datatype, prefixes)}"


def serialize_turtle(doc: Union[TurtleDocument, Iterable[Triple]], prefixes: Optional[PrefixMap] = None) -> str:
    """Deterministic Turtle text: sorted subjects grouped with ';', objects with ','."""
    if isinstance(doc, TurtleDocument):
        prefixes = prefixes or doc.prefixes
        triples = doc.triples
    else:
        triples = list(doc)
        prefixes = prefixes or PrefixMap()
    lines = []
    if prefixes.base:
        lines.append(f"@base <{prefixes.base}> .")
    for label in sorted(prefixes.entries):
        lines.append(f"@prefix {label}: <{prefixes.entries[label]}> .")
    grouped: dict[Term, dict[Iri, set[Term]]] = {}
    for s, p, o in triples:
        grouped.setdefault(s, {}).setdefault(p, set()).add(o)
    for s in sorted(grouped, key=term_key):
        lines.append("")
        preds = sorted(grouped[s], key=term_key)
        head = render_term(s, prefixes)
        parts = []
        for p in preds:
            objs = ", ".join(render_term(o, prefixes) for o in sorted(grouped[s][p], key=term_key))
            parts.append(f"{render_term(p, prefixes)} {objs}")
        lines.append(head + " " + (" ;\n    ".join(parts)) + " .")
    return "\n".join(lines) + "\n"


def parse_term(text: str, prefixes: PrefixMap) -> Term:
    """Parse a single term in Turtle syntax; bare absolute IRIs are accepted too."""
    text = text.strip()
    if _ABSOLUTE.match(text) and "://" in text:
        return Iri(text)
    ts = TokenStream(tokenize(text))
    term = TermReader(prefixes).read(ts, "object")
    if not ts.at("EOF"):
        raise ts.error(f"unexpected {_describe(ts.peek())}", "end of term")
    return term
