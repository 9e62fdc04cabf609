"""RDF terms, triples, namespaces and xsd:dateTime handling."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Union

_WS = re.compile(r"\s")


class TermError(ValueError):
    """Raised for structurally invalid terms or triples."""


@dataclass(frozen=True)
class Iri:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or not self.value or _WS.search(self.value):
            raise TermError(f"invalid IRI: {self.value!r}")

    def __str__(self):
        return self.value

    def n3(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True)
class BlankNode:
    label: str

    def __post_init__(self):
        if not self.label or _WS.search(self.label):
            raise TermError(f"invalid blank node label: {self.label!r}")

    def __str__(self):
        return f"_:{self.label}"

    def n3(self) -> str:
        return str(self)


XSD = "http://www.w3.org/2001/XMLSchema#"
RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_STRING = Iri(XSD + "string")
XSD_BOOLEAN = Iri(XSD + "boolean")
XSD_INTEGER = Iri(XSD + "integer")
XSD_DECIMAL = Iri(XSD + "decimal")
XSD_DOUBLE = Iri(XSD + "double")
XSD_DATETIME = Iri(XSD + "dateTime")
RDF_LANGSTRING = Iri(RDF_NS + "langString")


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: Iri = field(default=XSD_STRING)
    lang: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.lexical, str):
            raise TermError(f"literal lexical form must be a string: {self.lexical!r}")
        if self.lang is not None:
            if not re.fullmatch(r"[A-Za-z]+(-[A-Za-z0-9]+)*", self.lang):
                raise TermError(f"invalid language tag: {self.lang!r}")
            if self.datatype == XSD_STRING:
                object.__setattr__(self, "datatype", RDF_LANGSTRING)

    def __str__(self):
        return self.lexical

    def n3(self) -> str:
        body = '"' + escape_string(self.lexical) + '"'
        if self.lang:
            return f"{body}@{self.lang}"
        if self.datatype == XSD_STRING:
            return body
        return f"{body}^^{self.datatype.n3()}"


Term = Union[Iri, BlankNode, Literal]

_RANK = {Iri: 0, BlankNode: 1, Literal: 2}


def term_key(term: Term) -> tuple:
    """Total order on terms: IRIs, then blank nodes, then literals; lexicographic within."""
    if isinstance(term, Iri):
        return (0, term.value)
    if isinstance(term, BlankNode):
        return (1, term.label)
    return (2, term.lexical, term.datatype.value, term.lang or "")


@dataclass(frozen=True)
class Triple:
    subject: Term
    predicate: Iri
    object: Term

    def __post_init__(self):
        if not isinstance(self.subject, (Iri, BlankNode)):
            raise TermError(f"triple subject must be an IRI or blank node, got {self.subject!r}")
        if not isinstance(self.predicate, Iri):
            raise TermError(f"triple predicate must be an IRI, got {self.predicate!r}")
        if type(self.object) not in _RANK:
            raise TermError(f"triple object must be a term, got {self.object!r}")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def sort_key(self) -> tuple:
        return (term_key(self.subject), term_key(self.predicate), term_key(self.object))


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def escape_string(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


class Namespace(str):
    """IRI prefix; attribute or item access yields an Iri."""

    def __getattr__(self, name: str) -> Iri:
        if name.startswith("__"):
            raise AttributeError(name)
        return Iri(self + name)

    def __getitem__(self, name):
        if isinstance(name, str):
            return Iri(self + name)
        return str.__getitem__(self, name)


RDF = Namespace(RDF_NS)
RDFS = Namespace("http://www.w3.org/2000/01/rdf-schema#")
OWL = Namespace("http://www.w3.org/2002/07/owl#")
XSDNS = Namespace(XSD)
IOE = Namespace("http://w3id.org/semioe#")
SSN = Namespace("http://www.w3.org/ns/ssn/")
SSN_SYSTEM = Namespace("http://www.w3.org/ns/ssn/systems/")
SOSA = Namespace("http://www.w3.org/ns/sosa/")
BOT = Namespace("https://w3id.org/bot#")
ORG = Namespace("http://www.w3.org/ns/org#")
FOAF = Namespace("http://xmlns.com/foaf/0.1/")

DEFAULT_INSTANCE_NS = "http://w3id.org/semioe/data#"

RDF_TYPE = RDF.type


def boolean(value: bool) -> Literal:
    return Literal("true" if value else "false", XSD_BOOLEAN)


def parse_boolean(term: Term) -> Optional[bool]:
    """Value of an xsd:boolean literal, or None when the term is not one."""
    if isinstance(term, Literal) and term.datatype == XSD_BOOLEAN:
        return {"true": True, "1": True, "false": False, "0": False}.get(term.lexical)
    return None


def parse_datetime(text: str) -> datetime:
    """Parse an xsd:dateTime lexical form; values without a timezone are taken as UTC."""
    s = text.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    try:
        value = datetime.fromisoformat(s)
    except ValueError as exc:
        raise TermError(f"invalid xsd:dateTime: {text!r}") from exc
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value


def datetime_literal(value: Union[datetime, str]) -> Literal:
    if isinstance(value, str):
        value = parse_datetime(value)
    value = value.astimezone(timezone.utc)
    return Literal(value.strftime("%Y-%m-%dT%H:%M:%S") + "Z", XSD_DATETIME)


def literal_datetime(term: Term) -> Optional[datetime]:
    """Value of an xsd:dateTime literal, or None for anything else (including malformed lexical forms)."""
    if isinstance(term, Literal) and term.datatype == XSD_DATETIME:
        try:
            return parse_datetime(term.lexical)
        except TermError:
            return None
    return None
