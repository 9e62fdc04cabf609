"""Entity-layer lookups over a knowledge graph.

Each lookup is implemented by direct index traversal. The ``LISTINGS``
templates and the ``*_q`` functions in this module give the same answers
through :func:`semioe.query.evaluate`; tests hold the two paths equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Optional, Union

from .query import Query, TriplePattern, Variable, evaluate, parse_query
from .schema import (
    FOR_PROPERTY,
    FOR_SITE,
    HAS_CURRENT_VALUE,
    HAS_PREFERENCE,
    ON_OBJECT,
    RETIRED_AT,
    closure,
    has_type,
    instances,
    objects_via,
)
from .store import Graph
from .terms import IOE, ORG, RDF_TYPE, SSN, Iri, Term, Triple, literal_datetime, parse_boolean, parse_datetime, term_key


class AmbiguityError(LookupError):
    """A lookup that must yield one value found several."""


Timestamp = Union[datetime, str]


def as_datetime(at: Optional[Timestamp]) -> Optional[datetime]:
    if at is None or isinstance(at, datetime):
        return at
    return parse_datetime(at)


def _sorted(terms: Iterable[Term]) -> list:
    return sorted(set(terms), key=term_key)


# --- query templates -------------------------------------------------------

LISTINGS = {
    "instance": """SELECT ?p ?o
  WHERE {<ins> a <entity>;
               ?p ?o}""",
    "locatedIn": """SELECT ?site
  WHERE {<agent> a ioe:Agent;
                 ioe:locatedIn ?site}""",
    "getRole": """SELECT ?role
  WHERE {?m a org:Membership;
            org:member <agent>;
            org:role ?role}""",
    "getRights": """SELECT ?right
  WHERE {?right a ioe:Right;
                ioe:forRole <role>}""",
    "getSystemsFromRight": """SELECT ?sys
  WHERE {<right> a ioe:RightOnSystem;
                   ioe:onSystem ?sys}""",
    "availableAgents": """SELECT ?agent
  WHERE {?agent a ioe:HAgent.
         MINUS {?agent ioe:engagedIn ?act.
                ?atc a ioe:Activity.}}""",
}


def listing_query(name: str, **params: Term) -> Query:
    return parse_query(LISTINGS[name], params=params)


# --- direct traversal ------------------------------------------------------

def describe(g: Graph, instance: Iri, entity: Optional[Iri] = None,
             inference: bool = False) -> list[tuple[Iri, Term]]:
    """(predicate, object) pairs of ``instance``; empty unless it is typed ``entity``.

    With ``inference`` the description is read from the subclass closure.
    """
    if inference:
        g = closure(g)
    if entity is not None and Triple(instance, RDF_TYPE, entity) not in g:
        return []
    return [(t.predicate, t.object) for t in g.match(instance, None, None)]


def located_in(g: Graph, node: Term) -> Optional[Iri]:
    """The ioe:Site an agent or smart object is located in."""
    if not has_type(g, node, IOE.Agent):
        return None
    sites = _sorted(g.objects(node, IOE.locatedIn))
    if len(sites) > 1:
        raise AmbiguityError(f"{node} is located in {len(sites)} sites")
    return sites[0] if sites else None


def memberships(g: Graph, agent: Term) -> list[tuple[Term, Term]]:
    """Active (membership, role) pairs of ``agent``; retired memberships are skipped."""
    out = []
    for m in g.subjects(ORG.member, agent):
        if not has_type(g, m, ORG.Membership) or g.objects(m, RETIRED_AT):
            continue
        for role in g.objects(m, ORG.role):
            out.append((m, role))
    return sorted(out, key=lambda mr: (term_key(mr[0]), term_key(mr[1])))


def role_window(g: Graph, role: Term) -> tuple[Optional[datetime], Optional[datetime]]:
    start = end = None
    for t in g.objects(role, IOE.startTime):
        start = literal_datetime(t)
    for t in g.objects(role, IOE.endTime):
        end = literal_datetime(t)
    return start, end


def role_valid_at(g: Graph, role: Term, at: Optional[datetime]) -> bool:
    if at is None:
        return True
    start, end = role_window(g, role)
    # a timestamp that is present but unreadable never grants validity
    if (start is None and g.objects(role, IOE.startTime)) or (end is None and g.objects(role, IOE.endTime)):
        return False
    return (start is None or start <= at) and (end is None or at <= end)


def select_role(g: Graph, roles: Iterable[Term], at: Optional[Timestamp]) -> Optional[Term]:
    """Pick the effective role among candidates valid at ``at``.

    Temporary roles (those with a start time) beat permanent ones; among
    temporary roles the latest start wins.
    """
    at = as_datetime(at)
    valid = [r for r in set(roles) if role_valid_at(g, r, at)]
    if not valid:
        return None
    temporary = [(role_window(g, r)[0], r) for r in valid if role_window(g, r)[0] is not None]
    if temporary:
        latest = max(st for st, _ in temporary)
        return min((r for st, r in temporary if st == latest), key=term_key)
    return min(valid, key=term_key)


def get_role(g: Graph, agent: Term, at: Optional[Timestamp] = None) -> Optional[Term]:
    return select_role(g, [role for _, role in memberships(g, agent)], at)


def get_rights(g: Graph, role: Term) -> list[Term]:
    return [r for r in g.subjects(IOE.forRole, role) if has_type(g, r, IOE.Right)]


def right_type(g: Graph, right: Term) -> Optional[Term]:
    return g.value(right, IOE.hasType)


def is_transferable(g: Graph, role: Optional[Term]) -> bool:
    if role is None:
        return False
    return any(parse_boolean(v) for v in g.objects(role, IOE.isTransferable))


def get_included_systems(g: Graph, obj: Term) -> list[Term]:
    """Systems included in a smart object, plus their subsystems at any depth."""
    found: set[Term] = set()
    stack = list(g.subjects(IOE.includedIn, obj))
    while stack:
        s = stack.pop()
        if s in found:
            continue
        found.add(s)
        stack.extend(g.objects(s, SSN.hasSubSystem))
    return _sorted(found)


def get_objects_located_in(g: Graph, site: Term) -> list[Term]:
    return [o for o in g.subjects(IOE.locatedIn, site) if has_type(g, o, IOE.SmartObject)]


def get_objects_engaged_in_activity(g: Graph, activity: Term) -> list[Term]:
    return [o for o in g.subjects(IOE.engagedIn, activity) if has_type(g, o, IOE.SmartObject)]


def get_systems_properties(g: Graph, systems: Iterable[Term]) -> list[Term]:
    return _sorted(p for s in systems for p in g.objects(s, SSN.hasProperty))


def environment_of_right(g: Graph, right: Term) -> list[Term]:
    return g.objects(right, IOE.onEnvironment)


def smart_object_targets(g: Graph, right: Term) -> list[Term]:
    return objects_via(g, right, ON_OBJECT)


def get_systems_from_right(g: Graph, right: Term) -> list[Term]:
    """Every system a right applies to, whatever its scope."""
    systems: set[Term] = set()
    if has_type(g, right, IOE.RightOnSystem):
        systems.update(g.objects(right, IOE.onSystem))
    if has_type(g, right, IOE.RightOnSmartObject):
        for obj in smart_object_targets(g, right):
            systems.update(get_included_systems(g, obj))
    if has_type(g, right, IOE.RightOnEnvironment):
        for site in environment_of_right(g, right):
            for obj in get_objects_located_in(g, site):
                systems.update(get_included_systems(g, obj))
    return _sorted(systems)


def get_rights_on_objects(g: Graph, objects: Iterable[Term]) -> list[Term]:
    wanted = set(objects)
    return _sorted(
        r for r in instances(g, IOE.RightOnSmartObject) if wanted.intersection(smart_object_targets(g, r))
    )


def get_rights_on_systems(g: Graph, systems: Iterable[Term]) -> list[Term]:
    wanted = set(systems)
    return _sorted(
        r for r in instances(g, IOE.RightOnSystem) if wanted.intersection(g.objects(r, IOE.onSystem))
    )


def engaged_activities(g: Graph, agent: Term) -> list[Term]:
    return [a for a in g.objects(agent, IOE.engagedIn) if has_type(g, a, IOE.Activity)]


def available_agents(g: Graph) -> list[Term]:
    """Human agents not engaged in any activity."""
    return [a for a in instances(g, IOE.HAgent) if not engaged_activities(g, a)]


def system_objects(g: Graph, system: Term) -> list[Term]:
    """Smart objects that include ``system`` directly or through parent systems."""
    found, seen = set(), set()
    stack = [system]
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        found.update(g.objects(s, IOE.includedIn))
        stack.extend(g.subjects(SSN.hasSubSystem, s))
    return _sorted(found)


def system_location(g: Graph, system: Term) -> Optional[Term]:
    sites = _sorted(site for obj in system_objects(g, system) for site in g.objects(obj, IOE.locatedIn))
    if len(sites) > 1:
        raise AmbiguityError(f"system {system} is located in {len(sites)} sites")
    return sites[0] if sites else None


@dataclass(frozen=True)
class PreferenceView:
    node: Term
    property: Optional[Term]
    site: Optional[Term]
    value: Optional[Term]


def get_env_preferences(g: Graph, agent: Term) -> list[PreferenceView]:
    out = []
    for pref in _sorted(g.objects(agent, HAS_PREFERENCE)):
        if not has_type(g, pref, IOE.Preference):
            continue
        out.append(PreferenceView(pref, g.value(pref, FOR_PROPERTY), g.value(pref, FOR_SITE),
                                  g.value(pref, IOE.hasPreferenceValue)))
    return out


def current_value(g: Graph, prop: Term) -> Optional[Term]:
    return g.value(prop, HAS_CURRENT_VALUE)


# --- query-based twins -----------------------------------------------------

def _v(name):
    return Variable(name)


def _col(bs, var):
    return bs.column(var)


def describe_q(g: Graph, instance: Iri, entity: Iri, inference: bool = False) -> list[tuple[Iri, Term]]:
    bs = evaluate(g, listing_query("instance", ins=instance, entity=entity), inference=inference)
    return bs.tuples()


def located_in_q(g: Graph, node: Term) -> Optional[Iri]:
    sites = _col(evaluate(g, listing_query("locatedIn", agent=node)), "site")
    if len(sites) > 1:
        raise AmbiguityError(f"{node} is located in {len(sites)} sites")
    return sites[0] if sites else None


def get_role_q(g: Graph, agent: Term, at: Optional[Timestamp] = None) -> Optional[Term]:
    q = Query(["m", "role"], [
        TriplePattern(_v("m"), RDF_TYPE, ORG.Membership),
        TriplePattern(_v("m"), ORG.member, agent),
        TriplePattern(_v("m"), ORG.role, _v("role")),
    ], minus=[TriplePattern(_v("m"), RETIRED_AT, _v("when"))])
    return select_role(g, _col(evaluate(g, q), "role"), at)


def get_rights_q(g: Graph, role: Term) -> list[Term]:
    return _col(evaluate(g, listing_query("getRights", role=role)), "right")


def get_included_systems_q(g: Graph, obj: Term) -> list[Term]:
    frontier = _col(evaluate(g, Query(["s"], [TriplePattern(_v("s"), IOE.includedIn, obj)])), "s")
    found: set[Term] = set()
    while frontier:
        found.update(frontier)
        nxt = []
        for s in frontier:
            q = Query(["sub"], [TriplePattern(s, SSN.hasSubSystem, _v("sub"))])
            nxt.extend(x for x in _col(evaluate(g, q), "sub") if x not in found)
        frontier = nxt
    return _sorted(found)


def get_objects_located_in_q(g: Graph, site: Term) -> list[Term]:
    q = Query(["o"], [TriplePattern(_v("o"), RDF_TYPE, IOE.SmartObject), TriplePattern(_v("o"), IOE.locatedIn, site)])
    return _col(evaluate(g, q), "o")


def get_objects_engaged_in_activity_q(g: Graph, activity: Term) -> list[Term]:
    q = Query(["o"], [TriplePattern(_v("o"), RDF_TYPE, IOE.SmartObject), TriplePattern(_v("o"), IOE.engagedIn, activity)])
    return _col(evaluate(g, q), "o")


def get_systems_properties_q(g: Graph, systems: Iterable[Term]) -> list[Term]:
    out = []
    for s in systems:
        out.extend(_col(evaluate(g, Query(["p"], [TriplePattern(s, SSN.hasProperty, _v("p"))])), "p"))
    return _sorted(out)


def get_systems_from_right_q(g: Graph, right: Term) -> list[Term]:
    systems = set(_col(evaluate(g, listing_query("getSystemsFromRight", right=right)), "sys"))
    q_obj = Query(["o"], [TriplePattern(right, RDF_TYPE, IOE.RightOnSmartObject), TriplePattern(right, ON_OBJECT, _v("o"))])
    for obj in _col(evaluate(g, q_obj), "o"):
        systems.update(get_included_systems_q(g, obj))
    q_env = Query(["o"], [
        TriplePattern(right, RDF_TYPE, IOE.RightOnEnvironment),
        TriplePattern(right, IOE.onEnvironment, _v("site")),
        TriplePattern(_v("o"), IOE.locatedIn, _v("site")),
        TriplePattern(_v("o"), RDF_TYPE, IOE.SmartObject),
    ])
    for obj in _col(evaluate(g, q_env), "o"):
        systems.update(get_included_systems_q(g, obj))
    return _sorted(systems)


def available_agents_q(g: Graph) -> list[Term]:
    q = Query(["agent"], [TriplePattern(_v("agent"), RDF_TYPE, IOE.HAgent)], minus=[
        TriplePattern(_v("agent"), IOE.engagedIn, _v("act")),
        TriplePattern(_v("act"), RDF_TYPE, IOE.Activity),
    ])
    return _col(evaluate(g, q), "agent")


def get_env_preferences_q(g: Graph, agent: Term) -> list[PreferenceView]:
    q = Query(["pref", "prop", "site", "value"], [
        TriplePattern(agent, HAS_PREFERENCE, _v("pref")),
        TriplePattern(_v("pref"), RDF_TYPE, IOE.Preference),
        TriplePattern(_v("pref"), FOR_PROPERTY, _v("prop")),
        TriplePattern(_v("pref"), FOR_SITE, _v("site")),
        TriplePattern(_v("pref"), IOE.hasPreferenceValue, _v("value")),
    ])
    return [PreferenceView(*row) for row in evaluate(g, q).tuples()]

