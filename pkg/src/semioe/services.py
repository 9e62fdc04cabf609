"""Support-layer services: access control, collaboration, secure delegation,
environment setting and expiry of temporary roles.

Every service takes explicit time arguments and returns a decision object
carrying an audit trail. Mutating services compute their full effect under
the graph lock and apply it in one ``Graph.update`` call.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

from . import entities as E
from .schema import HAS_CURRENT_VALUE, RETIRED_AT, has_type
from .store import Graph
from .terms import (
    DEFAULT_INSTANCE_NS,
    IOE,
    ORG,
    RDF_TYPE,
    Iri,
    Literal,
    Term,
    Triple,
    boolean,
    datetime_literal,
    term_key,
)

logger = logging.getLogger(__name__)


class ServiceError(Exception):
    """A service refused a request. ``code`` is machine readable."""

    def __init__(self, code: str, message: str, audit: Optional[list] = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.audit = audit or []


@dataclass(frozen=True)
class TimeWindow:
    start: datetime
    end: datetime

    def __post_init__(self):
        start, end = E.as_datetime(self.start), E.as_datetime(self.end)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)
        if start > end:
            raise ValueError(f"window start {start.isoformat()} is after end {end.isoformat()}")

    def contains(self, t) -> bool:
        t = E.as_datetime(t)
        return self.start <= t <= self.end

    def to_dict(self) -> dict:
        return {"start": datetime_literal(self.start).lexical, "end": datetime_literal(self.end).lexical}


@dataclass(frozen=True)
class AuditStep:
    service: str
    rule: str
    outcome: str
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"service": self.service, "rule": self.rule, "outcome": self.outcome, "detail": self.detail}


def audit_lines(audit: list[AuditStep]) -> list[str]:
    """One JSON object per audit step, for structured logs."""
    return [json.dumps(step.to_dict(), sort_keys=True) for step in audit]


class _Audit(list):
    def __init__(self, service: str):
        super().__init__()
        self.service = service

    def log(self, rule: str, outcome: str, **detail) -> None:
        step = AuditStep(self.service, rule, outcome, {k: _plain(v) for k, v in detail.items()})
        self.append(step)
        logger.debug("%s", json.dumps(step.to_dict(), sort_keys=True))

    def fail(self, code: str, message: str, **detail) -> ServiceError:
        self.log(code, "error", message=message, **detail)
        return ServiceError(code, message, list(self))


def _plain(v):
    if isinstance(v, (Iri, Literal)):
        return str(v)
    if isinstance(v, (list, tuple, set, frozenset)):
        items = sorted(v, key=term_key) if isinstance(v, (set, frozenset)) else v
        return [_plain(x) for x in items]
    if isinstance(v, datetime):
        return datetime_literal(v).lexical
    if isinstance(v, TimeWindow):
        return v.to_dict()
    return v if v is None or isinstance(v, (str, int, float, bool, dict)) else str(v)


@dataclass(frozen=True)
class RightView:
    id: Term
    right_type: Optional[Term]
    scope: str  # "system" | "smart_object" | "environment"
    target: Optional[Term]
    roles: frozenset


def right_view(g: Graph, right: Term) -> RightView:
    if has_type(g, right, IOE.RightOnSystem):
        scope, target = "system", g.value(right, IOE.onSystem)
    elif has_type(g, right, IOE.RightOnSmartObject):
        targets = E.smart_object_targets(g, right)
        scope, target = "smart_object", targets[0] if targets else None
    elif has_type(g, right, IOE.RightOnEnvironment):
        scope, target = "environment", g.value(right, IOE.onEnvironment)
    else:
        raise ValueError(f"{right} is not typed with a right subclass")
    return RightView(right, E.right_type(g, right), scope, target, frozenset(g.objects(right, IOE.forRole)))


# --- decisions -------------------------------------------------------------

@dataclass
class AccessDecision:
    allowed: bool
    matched_right: Optional[Term] = None
    reason: str = ""
    audit: list[AuditStep] = field(default_factory=list)
    kind = "access"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "allowed": self.allowed,
            "matchedRight": _plain(self.matched_right),
            "reason": self.reason,
            "audit": [s.to_dict() for s in self.audit],
        }


@dataclass
class RoleGrant:
    kind: str  # "collaboration" | "delegation"
    temp_role: Iri
    rights: frozenset
    window: TimeWindow
    relation: Iri
    membership: Iri
    audit: list[AuditStep] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "tempRole": str(self.temp_role),
            "rights": _plain(self.rights),
            "window": self.window.to_dict(),
            "relation": str(self.relation),
            "membership": str(self.membership),
            "audit": [s.to_dict() for s in self.audit],
        }


@dataclass(frozen=True)
class Adjustment:
    property: Term
    old_value: Optional[Literal]
    new_value: Literal


@dataclass
class EnvironmentAdjustment:
    adjustments: list[Adjustment]
    audit: list[AuditStep] = field(default_factory=list)
    kind = "environment"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "adjustments": [
                {"property": str(a.property), "old": _literal_json(a.old_value), "new": _literal_json(a.new_value)}
                for a in self.adjustments
            ],
            "audit": [s.to_dict() for s in self.audit],
        }


def _literal_json(lit: Optional[Literal]):
    if lit is None:
        return None
    return {"value": lit.lexical, "datatype": lit.datatype.value}


# --- access control --------------------------------------------------------

def access_control(g: Graph, agent: Term, system: Term, site: Term, rtype: Term, at) -> AccessDecision:
    """Decide whether ``agent`` may exercise ``rtype`` on ``system`` at time ``at``.

    Rights scoped to a system, to a whole smart object (expanded to its
    systems) and to the agent's site are all honoured.
    """
    at = E.as_datetime(at)
    audit = _Audit("access-control")
    audit.log("request", "received", agent=agent, system=system, site=site, type=rtype, at=at)
    with g.lock:
        sys_site = E.system_location(g, system)
        if sys_site is None:
            raise audit.fail("location-undefined", f"system {system} is included in no located smart object")
        agent_site = E.located_in(g, agent)
        if sys_site != agent_site:
            audit.log("co-location", "deny", system_site=sys_site, agent_site=agent_site)
            return AccessDecision(False, None, "not-co-located", list(audit))
        audit.log("co-location", "pass", site=sys_site)
        role = E.get_role(g, agent, at)
        if role is None:
            audit.log("no-role", "deny")
            return AccessDecision(False, None, "no-role", list(audit))
        rights = E.get_rights(g, role)
        audit.log("role", "resolved", role=role, rights=rights)
        for right in rights:
            if E.right_type(g, right) != rtype:
                continue
            if has_type(g, right, IOE.RightOnSystem) and system in g.objects(right, IOE.onSystem):
                audit.log("right-on-system", "allow", right=right)
                return AccessDecision(True, right, "right-on-system", list(audit))
            if has_type(g, right, IOE.RightOnEnvironment):
                envs = E.environment_of_right(g, right)
                if site in envs and site == agent_site:
                    audit.log("right-on-environment", "allow", right=right, environment=site)
                    return AccessDecision(True, right, "right-on-environment", list(audit))
            if has_type(g, right, IOE.RightOnSmartObject):
                if system in E.get_systems_from_right(g, right):
                    audit.log("right-on-smart-object", "allow", right=right)
                    return AccessDecision(True, right, "right-on-smart-object", list(audit))
        audit.log("no-matching-right", "deny")
        return AccessDecision(False, None, "no-matching-right", list(audit))


# --- temporary roles -------------------------------------------------------

def _instance_ns(agent: Term) -> str:
    if isinstance(agent, Iri):
        m = re.match(r"(.*[#/])[^#/]*$", agent.value)
        if m:
            return m.group(1)
    return DEFAULT_INSTANCE_NS


def _next_index(g: Graph, ns: str) -> int:
    pattern = re.compile(re.escape(ns) + r"temp_role_(\d+)$")
    used = [int(m.group(1)) for t in g.match(None, RDF_TYPE, IOE.CurrentRole)
            if isinstance(t.subject, Iri) and (m := pattern.match(t.subject.value))]
    return max(used, default=0) + 1


def _temp_role_triples(g, kind, a1, a2, activity, window, rights, ns):
    n = _next_index(g, ns)
    role = Iri(f"{ns}temp_role_{n}")
    relation = Iri(f"{ns}{kind}_{n}")
    membership = Iri(f"{ns}temp_membership_{n}")
    triples = [
        Triple(role, RDF_TYPE, IOE.CurrentRole),
        Triple(role, IOE.startTime, datetime_literal(window.start)),
        Triple(role, IOE.endTime, datetime_literal(window.end)),
        Triple(role, IOE.isTransferable, boolean(False)),
        Triple(relation, RDF_TYPE, IOE.Collaboration if kind == "collaboration" else IOE.Delegation),
        Triple(relation, IOE.fromAgent, a1),
        Triple(relation, IOE.toAgent, a2),
        Triple(relation, IOE.forWorkflowElement, activity),
        Triple(membership, RDF_TYPE, ORG.Membership),
        Triple(membership, ORG.member, a2),
        Triple(membership, ORG.role, role),
        Triple(a2, IOE.engagedIn, activity),
    ]
    triples += [Triple(r, IOE.forRole, role) for r in sorted(rights, key=term_key)]
    return role, relation, membership, triples


def _check_pair(g, audit, a1, a2):
    if a1 == a2:
        raise audit.fail("precondition", "an agent cannot grant a role to itself")
    for a in (a1, a2):
        if not has_type(g, a, IOE.Agent):
            raise audit.fail("precondition", f"{a} is not an ioe:Agent")


def collaborate(g: Graph, a1: Term, a2: Term, activity: Term, window: TimeWindow) -> RoleGrant:
    """Give ``a2`` a temporary role holding the union of both agents' rights."""
    audit = _Audit("collaboration")
    audit.log("request", "received", requester=a1, collaborator=a2, activity=activity, window=window)
    with g.lock:
        _check_pair(g, audit, a1, a2)
        if activity not in g.objects(a1, IOE.engagedIn):
            raise audit.fail("not-engaged", f"{a1} is not engaged in {activity}")
        r1 = E.get_role(g, a1, window.start)
        if not E.is_transferable(g, r1):
            raise audit.fail("not-transferable", f"role {r1} of {a1} is not transferable", role=r1)
        audit.log("transferable", "pass", role=r1)
        site1, site2 = E.located_in(g, a1), E.located_in(g, a2)
        if site1 is None or site1 != site2:
            raise audit.fail("not-co-located", f"{a1} and {a2} are not in the same site", sites=[site1, site2])
        audit.log("co-location", "pass", site=site1)
        r2 = E.get_role(g, a2, window.start)
        rh1 = set(E.get_rights(g, r1))
        rh2 = set(E.get_rights(g, r2)) if r2 is not None else set()
        rights = frozenset(rh1 | rh2)
        audit.log("union", "computed", requester_rights=rh1, collaborator_rights=rh2, rights=rights)
        role, relation, membership, triples = _temp_role_triples(
            g, "collaboration", a1, a2, activity, window, rights, _instance_ns(a1))
        g.update(add=triples)
        audit.log("assign", "granted", temp_role=role, relation=relation, membership=membership)
    return RoleGrant("collaboration", role, rights, window, relation, membership, list(audit))


def delegate(g: Graph, a1: Term, a2: Term, activity: Term, window: TimeWindow) -> RoleGrant:
    """Give ``a2`` a temporary role restricted to ``a1``'s rights over the activity's objects."""
    audit = _Audit("delegation")
    audit.log("request", "received", delegator=a1, delegatee=a2, activity=activity, window=window)
    with g.lock:
        _check_pair(g, audit, a1, a2)
        r1 = E.get_role(g, a1, window.start)
        if not E.is_transferable(g, r1):
            raise audit.fail("not-transferable", f"role {r1} of {a1} is not transferable", role=r1)
        audit.log("transferable", "pass", role=r1)
        busy = E.engaged_activities(g, a2)
        if busy:
            raise audit.fail("delegatee-busy", f"{a2} is engaged in another activity", activities=busy)
        rh1 = set(E.get_rights(g, r1))
        objects = [o for o in E.get_objects_engaged_in_activity(g, activity) if o not in (a1, a2)]
        rh_objects = set(E.get_rights_on_objects(g, objects))
        systems = sorted({s for o in objects for s in E.get_included_systems(g, o)}, key=term_key)
        rh_systems = set(E.get_rights_on_systems(g, systems))
        reachable = rh_objects | rh_systems
        rights = frozenset(reachable & rh1)
        audit.log("intersection", "computed", objects=objects, systems=systems,
                  reachable_rights=reachable, delegator_rights=rh1, rights=rights)
        if not rights:
            audit.log("empty-delegation", "warning", message="no delegator right applies to the activity")
        role, relation, membership, triples = _temp_role_triples(
            g, "delegation", a1, a2, activity, window, rights, _instance_ns(a1))
        g.update(add=triples)
        audit.log("assign", "granted", temp_role=role, relation=relation, membership=membership)
    return RoleGrant("delegation", role, rights, window, relation, membership, list(audit))


# --- environment setting ---------------------------------------------------

def environment_setting(g: Graph, agent: Term, site: Term) -> EnvironmentAdjustment:
    """Apply ``agent``'s preferences for ``site`` to the properties of systems there."""
    audit = _Audit("environment-setting")
    audit.log("request", "received", agent=agent, site=site)
    with g.lock:
        if E.located_in(g, agent) != site:
            raise audit.fail("not-located", f"{agent} is not located in {site}")
        prefs = [p for p in E.get_env_preferences(g, agent) if p.site == site and p.value is not None]
        audit.log("preferences", "loaded", preferences=[p.node for p in prefs])
        systems = [s for o in E.get_objects_located_in(g, site) for s in E.get_included_systems(g, o)]
        properties = E.get_systems_properties(g, systems)
        audit.log("properties", "loaded", systems=sorted(set(systems), key=term_key), properties=properties)
        adjustments, add, remove = [], [], []
        for prop in properties:
            matching = [p for p in prefs if p.property == prop]
            if not matching:
                continue
            if len(matching) > 1:
                audit.log("preference-conflict", "last-writer-wins",
                          property=prop, preferences=[p.node for p in matching])
            chosen = matching[-1]
            old = E.current_value(g, prop)
            remove += [Triple(prop, HAS_CURRENT_VALUE, v) for v in g.objects(prop, HAS_CURRENT_VALUE)]
            add.append(Triple(prop, HAS_CURRENT_VALUE, chosen.value))
            adjustments.append(Adjustment(prop, old, chosen.value))
            audit.log("apply", "set", property=prop, preference=chosen.node, old=old, new=chosen.value)
        g.update(add=add, remove=remove)
    return EnvironmentAdjustment(adjustments, list(audit))


# --- expiry ----------------------------------------------------------------

def expire_roles(g: Graph, at) -> int:
    """Retire memberships whose role window ended before ``at``; returns how many."""
    at = E.as_datetime(at)
    stamp = datetime_literal(at)
    with g.lock:
        add = []
        for m in g.subjects(RDF_TYPE, ORG.Membership):
            if g.objects(m, RETIRED_AT):
                continue
            for role in g.objects(m, ORG.role):
                _, end = E.role_window(g, role)
                if end is not None and end < at:
                    add.append(Triple(m, RETIRED_AT, stamp))
                    break
        g.update(add=add)
    return len(add)
