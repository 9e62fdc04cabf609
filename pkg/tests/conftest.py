import itertools
import random
from datetime import datetime, timezone

import pytest

from semioe.scenario import D, load_fixture
from semioe.store import Graph
from semioe.terms import IOE, ORG, RDF_TYPE, BlankNode, Iri, Literal, Triple, XSD_INTEGER

LISTING1_TRIPLES = 33  # hand-expanded count, see README "Fixtures"


@pytest.fixture
def listing1():
    return load_fixture("listing1.ttl")


@pytest.fixture
def extended():
    return load_fixture()


def utc(text):
    return datetime.fromisoformat(text.replace("Z", "+00:00")).astimezone(timezone.utc)


# --- random graphs ---------------------------------------------------------

POOL_IRIS = [Iri(f"http://example.org/n{i}") for i in range(8)]
POOL_PREDICATES = [Iri(f"http://example.org/p{i}") for i in range(4)]
POOL_OBJECTS = POOL_IRIS + [BlankNode("b0"), BlankNode("b1"), Literal("x"), Literal("1", XSD_INTEGER)]


def random_graph(rng: random.Random, max_triples=200) -> Graph:
    n = rng.randint(0, max_triples)
    triples = [
        Triple(rng.choice(POOL_IRIS + [BlankNode("b0")]), rng.choice(POOL_PREDICATES), rng.choice(POOL_OBJECTS))
        for _ in range(n)
    ]
    return Graph(triples)


# --- independent oracles ---------------------------------------------------

def scan(triples, s=None, p=None, o=None):
    """Linear filter over a plain triple collection."""
    return {t for t in triples
            if (s is None or t.subject == s) and (p is None or t.predicate == p) and (o is None or t.object == o)}


def brute_force_select(triples, where, projection, minus=()):
    """Enumerate every assignment of graph terms to variables and filter.

    Patterns are (s, p, o) with variables given as strings starting with '?'.
    """
    triples = set(tuple(t) for t in triples)
    terms = sorted({x for t in triples for x in t}, key=repr)

    def variables(patterns):
        return sorted({x for pat in patterns for x in pat if isinstance(x, str)})

    def solutions(patterns):
        vs = variables(patterns)
        out = []
        for combo in itertools.product(terms, repeat=len(vs)):
            env = dict(zip(vs, combo))
            if all(tuple(env.get(x, x) if isinstance(x, str) else x for x in pat) in triples for pat in patterns):
                out.append(env)
        return out

    rows = solutions(where)
    if minus:
        minus_rows = solutions(minus)
        kept = []
        for r in rows:
            excluded = False
            for m in minus_rows:
                shared = set(r) & set(m)
                if shared and all(r[v] == m[v] for v in shared):
                    excluded = True
                    break
            if not excluded:
                kept.append(r)
        rows = kept
    return {tuple(r[v] for v in projection) for r in rows}


def fixpoint_types(triples, axioms):
    """Naive saturation of rdf:type under (sub, super) axioms."""
    current = set(triples)
    while True:
        new = {
            Triple(t.subject, RDF_TYPE, sup)
            for t in current if t.predicate == RDF_TYPE
            for sub, sup in axioms if t.object == sub
        } - current
        if not new:
            return current
        current |= new


# --- role/right micrographs ------------------------------------------------

def micrograph(rng: random.Random):
    """Two co-located agents with random rights on a smart object, plus one spare agent.

    Returns (graph, a1, a2, activity). a1's role is transferable and a1 is
    engaged in the activity; a2 is idle.
    """
    g = Graph()
    add = g.add
    site = D.m_site
    add(Triple(site, RDF_TYPE, IOE.Site))
    objects = [D[f"m_obj{i}"] for i in range(rng.randint(1, 3))]
    systems = []
    for i, obj in enumerate(objects):
        add(Triple(obj, RDF_TYPE, IOE.SmartObject))
        add(Triple(obj, IOE.locatedIn, site))
        for j in range(rng.randint(1, 2)):
            s = D[f"m_sys{i}_{j}"]
            systems.append(s)
            add(Triple(s, RDF_TYPE, IOE.System))
            add(Triple(s, IOE.includedIn, obj))
    activity = D.m_act
    add(Triple(activity, RDF_TYPE, IOE.Activity))
    for obj in objects:
        if rng.random() < 0.6:
            add(Triple(obj, IOE.engagedIn, activity))
    types = [D.read, D.configure]
    for t in types:
        add(Triple(t, RDF_TYPE, IOE.RightType))
    agents = [D.m_a1, D.m_a2]
    roles = [D.m_role1, D.m_role2]
    for k, (agent, role) in enumerate(zip(agents, roles)):
        add(Triple(agent, RDF_TYPE, IOE.HAgent))
        add(Triple(agent, IOE.locatedIn, site))
        add(Triple(role, RDF_TYPE, IOE.CurrentRole))
        add(Triple(role, IOE.isTransferable, Literal("true" if k == 0 else rng.choice(["true", "false"]),
                                                        Iri("http://www.w3.org/2001/XMLSchema#boolean"))))
        m = D[f"m_membership{k}"]
        add(Triple(m, RDF_TYPE, ORG.Membership))
        add(Triple(m, ORG.member, agent))
        add(Triple(m, ORG.role, role))
    add(Triple(D.m_a1, IOE.engagedIn, activity))
    for r in range(rng.randint(1, 6)):
        right = D[f"m_right{r}"]
        add(Triple(right, IOE.hasType, rng.choice(types)))
        kind = rng.choice(["sys", "obj", "env"])
        if kind == "sys":
            add(Triple(right, RDF_TYPE, IOE.RightOnSystem))
            add(Triple(right, IOE.onSystem, rng.choice(systems)))
        elif kind == "obj":
            add(Triple(right, RDF_TYPE, IOE.RightOnSmartObject))
            add(Triple(right, IOE.onSmartObject, rng.choice(objects)))
        else:
            add(Triple(right, RDF_TYPE, IOE.RightOnEnvironment))
            add(Triple(right, IOE.onEnvironment, site))
        holders = rng.sample(roles, rng.randint(1, 2))
        for role in holders:
            add(Triple(right, IOE.forRole, role))
    return g, D.m_a1, D.m_a2, activity
