"""Semantic knowledge base for Internet-of-Everything access and collaboration."""

from .store import Graph
from .terms import BlankNode, Iri, Literal, Namespace, Triple, IOE
from .turtle import PrefixMap, TurtleSyntaxError, UnknownPrefixError, load_turtle, parse_turtle, serialize_turtle
from .schema import SEMIOE, ValidationReport, closure, inferred_types, load_vocabulary, validate
from .query import Query, QueryError, Variable, TriplePattern, evaluate, parse_query
from .services import (
    ServiceError,
    TimeWindow,
    access_control,
    collaborate,
    delegate,
    environment_setting,
    expire_roles,
)
from .scenario import load_fixture, scenario_walkthrough

__version__ = "0.1.0"

__all__ = [
    "Graph", "BlankNode", "Iri", "Literal", "Namespace", "Triple", "IOE",
    "PrefixMap", "TurtleSyntaxError", "UnknownPrefixError", "load_turtle", "parse_turtle", "serialize_turtle",
    "SEMIOE", "ValidationReport", "closure", "inferred_types", "load_vocabulary", "validate",
    "Query", "QueryError", "Variable", "TriplePattern", "evaluate", "parse_query",
    "ServiceError", "TimeWindow", "access_control", "collaborate", "delegate",
    "environment_setting", "expire_roles", "load_fixture", "scenario_walkthrough",
]
