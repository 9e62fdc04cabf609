"""SemIoE vocabulary, RDFS-lite inference and structural validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable, Optional

from .store import Graph
from .terms import (
    BOT,
    FOAF,
    IOE,
    Iri,
    Literal,
    ORG,
    OWL,
    RDF_TYPE,
    RDFS,
    SOSA,
    SSN,
    SSN_SYSTEM,
    Term,
    Triple,
    literal_datetime,
    parse_boolean,
    term_key,
)

# Properties the ontology leaves unnamed; minted under the ioe namespace.
HAS_PREFERENCE = IOE.hasPreference
FOR_PROPERTY = IOE.forProperty
FOR_SITE = IOE.forSite
HAS_CURRENT_VALUE = IOE.hasCurrentValue
RETIRED_AT = IOE.retiredAt

ON_OBJECT = IOE.onObject
ON_SMART_OBJECT = IOE.onSmartObject  # name used by the published example graph
SMART_OBJECT_TARGETS = (ON_OBJECT, ON_SMART_OBJECT)


@dataclass(frozen=True)
class Vocabulary:
    classes: frozenset[Iri]
    object_properties: frozenset[Iri]
    data_properties: frozenset[Iri]
    subclass_axioms: frozenset[tuple[Iri, Iri]]
    subproperty_axioms: frozenset[tuple[Iri, Iri]] = frozenset()

    @cached_property
    def superclasses(self) -> dict[Iri, frozenset[Iri]]:
        return _closure(self.subclass_axioms)

    @cached_property
    def subclasses(self) -> dict[Iri, frozenset[Iri]]:
        return _closure((sup, sub) for sub, sup in self.subclass_axioms)

    @cached_property
    def superproperties(self) -> dict[Iri, frozenset[Iri]]:
        return _closure(self.subproperty_axioms)

    def supers_of(self, cls: Iri) -> frozenset[Iri]:
        return self.superclasses.get(cls, frozenset((cls,)))

    def subs_of(self, cls: Iri) -> frozenset[Iri]:
        return self.subclasses.get(cls, frozenset((cls,)))

    @classmethod
    def from_graph(cls, g: Graph) -> "Vocabulary":
        return cls(
            classes=frozenset(t.subject for t in g.match(None, RDF_TYPE, OWL.Class)),
            object_properties=frozenset(t.subject for t in g.match(None, RDF_TYPE, OWL.ObjectProperty)),
            data_properties=frozenset(t.subject for t in g.match(None, RDF_TYPE, OWL.DatatypeProperty)),
            subclass_axioms=frozenset((t.subject, t.object) for t in g.match(None, RDFS.subClassOf, None)),
            subproperty_axioms=frozenset((t.subject, t.object) for t in g.match(None, RDFS.subPropertyOf, None)),
        )

    def to_graph(self) -> Graph:
        g = Graph()
        for c in self.classes:
            g.add(Triple(c, RDF_TYPE, OWL.Class))
        for p in self.object_properties:
            g.add(Triple(p, RDF_TYPE, OWL.ObjectProperty))
        for p in self.data_properties:
            g.add(Triple(p, RDF_TYPE, OWL.DatatypeProperty))
        for sub, sup in self.subclass_axioms:
            g.add(Triple(sub, RDFS.subClassOf, sup))
        for sub, sup in self.subproperty_axioms:
            g.add(Triple(sub, RDFS.subPropertyOf, sup))
        return g


def _closure(edges: Iterable[tuple[Iri, Iri]]) -> dict[Iri, frozenset[Iri]]:
    direct: dict[Iri, set[Iri]] = {}
    for a, b in edges:
        direct.setdefault(a, set()).add(b)
        direct.setdefault(b, set())
    result = {}
    for start in direct:
        seen = {start}
        stack = [start]
        while stack:
            for nxt in direct[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        result[start] = frozenset(seen)
    return result


BRIDGE_CLASSES = frozenset(
    IOE[name]
    for name in (
        "Agent", "HAgent", "SmartObject", "System", "Site", "Activity", "Process",
        "WorkflowElement", "Right", "RightType", "RightOnSystem", "RightOnSmartObject",
        "RightOnEnvironment", "CurrentRole", "Preference", "AgentRelation",
        "Collaboration", "Delegation",
    )
)
EXTERNAL_CLASSES = frozenset({
    SSN.System, SSN.Property, SSN_SYSTEM.SystemCapability, SOSA.Sensor, SOSA.Actuator,
    BOT.Site, BOT.Zone, ORG.Site, ORG.Role, ORG.Membership, FOAF.Agent,
})
BRIDGE_OBJECT_PROPERTIES = frozenset(
    IOE[name]
    for name in (
        "locatedIn", "engagedIn", "includedIn", "onSystem", "onObject", "onEnvironment",
        "forRole", "hasType", "fromAgent", "toAgent", "forWorkflowElement",
    )
)
EXTENSION_OBJECT_PROPERTIES = frozenset({ON_SMART_OBJECT, HAS_PREFERENCE, FOR_PROPERTY, FOR_SITE})
EXTERNAL_OBJECT_PROPERTIES = frozenset({SSN.hasSubSystem, SSN.hasProperty, ORG.member, ORG.role})
BRIDGE_DATA_PROPERTIES = frozenset(
    IOE[name] for name in ("hasPreferenceValue", "startTime", "endTime", "isTransferable")
)
EXTENSION_DATA_PROPERTIES = frozenset({HAS_CURRENT_VALUE, RETIRED_AT})

SUBCLASS_AXIOMS = frozenset({
    (IOE.HAgent, IOE.Agent),
    (IOE.SmartObject, IOE.Agent),
    (IOE.Collaboration, IOE.AgentRelation),
    (IOE.Delegation, IOE.AgentRelation),
    (IOE.Activity, IOE.WorkflowElement),
    (IOE.Process, IOE.WorkflowElement),
    (IOE.RightOnSystem, IOE.Right),
    (IOE.RightOnSmartObject, IOE.Right),
    (IOE.RightOnEnvironment, IOE.Right),
    (IOE.System, SSN.System),
    (IOE.HAgent, FOAF.Agent),
    (IOE.CurrentRole, ORG.Role),
    (IOE.Site, ORG.Site),
    (IOE.Site, BOT.Site),
    (SOSA.Sensor, SSN.System),
    (SOSA.Actuator, SSN.System),
    # imported from BOT and SSN
    (BOT.Site, BOT.Zone),
    (SSN_SYSTEM.SystemCapability, SSN.Property),
})

SEMIOE = Vocabulary(
    classes=BRIDGE_CLASSES | EXTERNAL_CLASSES,
    object_properties=BRIDGE_OBJECT_PROPERTIES | EXTENSION_OBJECT_PROPERTIES | EXTERNAL_OBJECT_PROPERTIES,
    data_properties=BRIDGE_DATA_PROPERTIES | EXTENSION_DATA_PROPERTIES,
    subclass_axioms=SUBCLASS_AXIOMS,
    subproperty_axioms=frozenset({(ON_SMART_OBJECT, ON_OBJECT)}),
)


def load_vocabulary() -> Vocabulary:
    """Read the bundled ontology serialization (data/semioe.ttl)."""
    from .turtle import parse_turtle

    text = resources.files("semioe").joinpath("data/semioe.ttl").read_text(encoding="utf-8")
    return Vocabulary.from_graph(parse_turtle(text).graph())


# --- inference -------------------------------------------------------------

def asserted_types(g: Graph, node: Term) -> set[Iri]:
    return {o for o in g.objects(node, RDF_TYPE) if isinstance(o, Iri)}


def inferred_types(g: Graph, node: Term, vocab: Vocabulary = SEMIOE) -> set[Iri]:
    """Asserted rdf:type classes of ``node`` plus all their superclasses."""
    out: set[Iri] = set()
    for cls in asserted_types(g, node):
        out |= vocab.supers_of(cls)
    return out


def has_type(g: Graph, node: Term, cls: Iri, vocab: Vocabulary = SEMIOE) -> bool:
    return any(g.count(node, RDF_TYPE, sub) for sub in vocab.subs_of(cls))


def instances(g: Graph, cls: Iri, vocab: Vocabulary = SEMIOE) -> list[Term]:
    """Every node typed ``cls`` directly or through a subclass, sorted."""
    found = set()
    for sub in vocab.subs_of(cls):
        found.update(g.subjects(RDF_TYPE, sub))
    return sorted(found, key=term_key)


def objects_via(g: Graph, node: Term, prop: Iri, vocab: Vocabulary = SEMIOE) -> list[Term]:
    """Objects of ``prop`` or of any of its subproperties."""
    subs = {a for a, sups in vocab.superproperties.items() if prop in sups} | {prop}
    found = set()
    for p in subs:
        found.update(g.objects(node, p))
    return sorted(found, key=term_key)


def entailments(g: Graph, vocab: Vocabulary = SEMIOE) -> set[Triple]:
    """Triples implied by the subclass and subproperty axioms but not asserted."""
    new = set()
    for t in g.match(None, RDF_TYPE, None):
        if isinstance(t.object, Iri):
            for sup in vocab.supers_of(t.object):
                new.add(Triple(t.subject, RDF_TYPE, sup))
    for sub, sups in vocab.superproperties.items():
        for t in g.match(None, sub, None):
            for sup in sups:
                new.add(Triple(t.subject, sup, t.object))
    return {t for t in new if t not in g}


def materialize_closure(g: Graph, vocab: Vocabulary = SEMIOE) -> Graph:
    """Add all entailed triples to ``g`` in place; idempotent. Returns ``g``."""
    with g.lock:
        # one pass suffices: both closures are already reflexive-transitive
        g.update(add=entailments(g, vocab))
    return g


def closure(g: Graph, vocab: Vocabulary = SEMIOE) -> Graph:
    return materialize_closure(g.copy(), vocab)


# --- validation ------------------------------------------------------------

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    rule_id: str
    focus: Term
    message: str
    severity: str = ERROR

    def to_dict(self) -> dict:
        return {"rule": self.rule_id, "focus": str(self.focus), "message": self.message, "severity": self.severity}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, v: Violation) -> None:
        (self.warnings if v.severity == WARNING else self.violations).append(v)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [v.to_dict() for v in self.violations],
            "warnings": [v.to_dict() for v in self.warnings],
        }


def validate(g: Graph, vocab: Vocabulary = SEMIOE) -> ValidationReport:
    report = ValidationReport()
    with g.lock:
        for rule in RULES:
            for v in rule(g, vocab):
                report.add(v)
    return report


def _r1_smart_object_systems(g, vocab):
    for obj in instances(g, IOE.SmartObject, vocab):
        systems = [s for s in g.subjects(IOE.includedIn, obj) if has_type(g, s, IOE.System, vocab) or has_type(g, s, SSN.System, vocab)]
        if not systems:
            yield Violation("R1", obj, "smart object includes no ioe:System", WARNING)


def _r2_right_shape(g, vocab):
    for right in instances(g, IOE.Right, vocab):
        n_types = len(g.objects(right, IOE.hasType))
        if n_types != 1:
            yield Violation("R2", right, f"right must have exactly one ioe:hasType, found {n_types}")
        if not g.objects(right, IOE.forRole):
            yield Violation("R2", right, "right has no ioe:forRole")


def _r3_right_scope(g, vocab):
    for right in instances(g, IOE.RightOnSystem, vocab):
        if not g.objects(right, IOE.onSystem):
            yield Violation("R3", right, "ioe:RightOnSystem has no ioe:onSystem target")
    for right in instances(g, IOE.RightOnSmartObject, vocab):
        if not objects_via(g, right, ON_OBJECT, vocab):
            yield Violation("R3", right, "ioe:RightOnSmartObject has no smart-object target")
    for right in instances(g, IOE.RightOnEnvironment, vocab):
        if not g.objects(right, IOE.onEnvironment):
            yield Violation("R3", right, "ioe:RightOnEnvironment has no ioe:onEnvironment target")


def _r4_agent_relation(g, vocab):
    for rel in instances(g, IOE.AgentRelation, vocab):
        for prop in (IOE.fromAgent, IOE.toAgent):
            n = len(g.objects(rel, prop))
            if n != 1:
                yield Violation("R4", rel, f"agent relation must have exactly one {_local(prop)}, found {n}")
        if not g.objects(rel, IOE.forWorkflowElement):
            yield Violation("R4", rel, "agent relation has no ioe:forWorkflowElement")


def _r5_role_window(g, vocab):
    for role in instances(g, IOE.CurrentRole, vocab):
        starts = g.objects(role, IOE.startTime)
        ends = g.objects(role, IOE.endTime)
        for t in starts + ends:
            if literal_datetime(t) is None:
                yield Violation("R5", role, f"role timestamp is not an xsd:dateTime: {t.n3()}")
        if starts and ends:
            st = [literal_datetime(t) for t in starts]
            et = [literal_datetime(t) for t in ends]
            if None not in st and None not in et and max(st) > min(et):
                yield Violation("R5", role, "role startTime is after endTime")


def _r6_transferable(g, vocab):
    for t in g.match(None, IOE.isTransferable, None):
        if parse_boolean(t.object) is None:
            yield Violation("R6", t.subject, f"ioe:isTransferable must be an xsd:boolean, got {t.object.n3()}")


def _r7_preference(g, vocab):
    for pref in instances(g, IOE.Preference, vocab):
        props = g.objects(pref, FOR_PROPERTY)
        sites = g.objects(pref, FOR_SITE)
        values = g.objects(pref, IOE.hasPreferenceValue)
        if len(props) != 1 or not has_type(g, props[0], SSN.Property, vocab):
            yield Violation("R7", pref, "preference must reference exactly one ssn:Property")
        if len(sites) != 1 or not has_type(g, sites[0], IOE.Site, vocab):
            yield Violation("R7", pref, "preference must reference exactly one ioe:Site")
        if len(values) != 1 or not isinstance(values[0], Literal):
            yield Violation("R7", pref, "preference must carry exactly one literal ioe:hasPreferenceValue")


def _local(iri: Iri) -> str:
    return "ioe:" + iri.value.rsplit("#", 1)[-1]


RULES = (
    _r1_smart_object_systems,
    _r2_right_shape,
    _r3_right_scope,
    _r4_agent_relation,
    _r5_role_window,
    _r6_transferable,
    _r7_preference,
)
