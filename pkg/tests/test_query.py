import random

import pytest

from semioe.entities import LISTINGS, listing_query
from semioe.query import Query, QueryError, TriplePattern, Variable, evaluate, parse_query
from semioe.scenario import D
from semioe.store import Graph
from semioe.terms import BOT, IOE, ORG, RDF_TYPE, Literal, Triple

from conftest import POOL_IRIS, POOL_OBJECTS, POOL_PREDICATES, brute_force_select, random_graph

V = Variable


def rows(bs):
    return bs.tuples()


class TestListingGoldens:
    def test_instance_description_raw(self, listing1):
        bs = evaluate(listing1, listing_query("instance", ins=D.john_doe, entity=IOE.HAgent), inference=False)
        # rows follow the term order: the ioe: namespace sorts before rdf:
        assert rows(bs) == [
            (IOE.engagedIn, D.calibration),
            (IOE.locatedIn, D.assembly_line_1),
            (RDF_TYPE, IOE.HAgent),
        ]

    def test_instance_of_wrong_class_empty(self, listing1):
        bs = evaluate(listing1, listing_query("instance", ins=D.john_doe, entity=IOE.Site), inference=False)
        assert rows(bs) == []

    @pytest.mark.parametrize("agent,site", [("john_doe", "assembly_line_1"), ("CNC_machine", "assembly_line_1")])
    def test_located_in(self, listing1, agent, site):
        assert rows(evaluate(listing1, listing_query("locatedIn", agent=D[agent]))) == [(D[site],)]

    def test_located_in_unknown(self, listing1):
        assert rows(evaluate(listing1, listing_query("locatedIn", agent=D.nobody))) == []

    @pytest.mark.parametrize("agent,role", [("john_doe", "CNC_machinist_level_1"),
                                            ("jane_smith", "CNC_machinist_level_2")])
    def test_get_role(self, listing1, agent, role):
        assert rows(evaluate(listing1, listing_query("getRole", agent=D[agent]))) == [(D[role],)]

    @pytest.mark.parametrize("role,rights", [
        ("CNC_machinist_level_1", ["right_config_CNC_machine", "right_read_CNC_machine"]),
        ("CNC_machinist_level_2", ["right_read_CNC_machine"]),
        ("no_such_role", []),
    ])
    def test_get_rights(self, listing1, role, rights):
        assert rows(evaluate(listing1, listing_query("getRights", role=D[role]))) == [(D[r],) for r in rights]

    def test_get_rights_needs_inference(self, listing1):
        q = listing_query("getRights", role=D.CNC_machinist_level_1)
        assert rows(evaluate(listing1, q, inference=False)) == []

    def test_get_systems_from_right(self, extended):
        bs = evaluate(extended, listing_query("getSystemsFromRight", right=D.right_config_filtration))
        assert rows(bs) == [(D.filtration_unit,)]

    def test_get_systems_from_right_smart_object_scope_empty(self, listing1):
        assert rows(evaluate(listing1, listing_query("getSystemsFromRight", right=D.right_read_CNC_machine))) == []

    def test_available_agents_verbatim(self, listing1):
        assert rows(evaluate(listing1, parse_query(LISTINGS["availableAgents"]))) == [(D.jane_smith,)]

    def test_available_agents_after_release(self, listing1):
        listing1.remove(Triple(D.john_doe, IOE.engagedIn, D.calibration))
        got = rows(evaluate(listing1, parse_query(LISTINGS["availableAgents"])))
        assert got == [(D.jane_smith,), (D.john_doe,)]

    def test_no_agents(self):
        g = Graph([Triple(D.calibration, RDF_TYPE, IOE.Activity)])
        assert rows(evaluate(g, parse_query(LISTINGS["availableAgents"]))) == []

    @pytest.mark.parametrize("name", sorted(LISTINGS))
    def test_every_listing_parses(self, name):
        params = {k: D.x for k in ("ins", "entity", "agent", "role", "right")}
        q = parse_query(LISTINGS[name], params=params)
        assert q.where


class TestEvaluate:
    def test_empty_where_rejected(self):
        with pytest.raises(QueryError):
            Query(["x"], [])

    def test_unbound_projection_rejected(self):
        with pytest.raises(QueryError):
            Query(["y"], [TriplePattern(V("x"), RDF_TYPE, IOE.Site)])

    def test_literal_predicate_rejected(self):
        with pytest.raises(QueryError):
            TriplePattern(V("x"), Literal("p"), V("y"))

    def test_rows_deduplicated_and_sorted(self, listing1):
        q = Query(["s"], [TriplePattern(V("s"), V("p"), V("o"))])
        got = rows(evaluate(listing1, q, inference=False))
        assert len(got) == len(set(got))
        assert got == sorted(got, key=lambda r: (0, r[0].value))

    def test_repeated_variable_in_pattern(self):
        g = Graph([Triple(D.a, D.p, D.a), Triple(D.a, D.p, D.b)])
        assert rows(evaluate(g, Query(["x"], [TriplePattern(V("x"), D.p, V("x"))]))) == [(D.a,)]

    def test_inference_sensitivity(self, extended):
        sites = rows(evaluate(extended, Query(["x"], [TriplePattern(V("x"), RDF_TYPE, IOE.Site)])))
        for cls in (BOT.Site, ORG.Site, BOT.Zone):
            got = rows(evaluate(extended, Query(["x"], [TriplePattern(V("x"), RDF_TYPE, cls)])))
            assert set(sites) <= set(got)
        assert rows(evaluate(extended, Query(["x"], [TriplePattern(V("x"), RDF_TYPE, BOT.Site)]),
                             inference=False)) == []

    def test_closure_cache_tracks_mutation(self, listing1):
        q = Query(["x"], [TriplePattern(V("x"), RDF_TYPE, BOT.Site)])
        before = rows(evaluate(listing1, q))
        listing1.add(Triple(D.new_site, RDF_TYPE, IOE.Site))
        assert rows(evaluate(listing1, q)) == sorted(before + [(D.new_site,)], key=lambda r: r[0].value)

    def test_binding_set_json(self, listing1):
        out = evaluate(listing1, listing_query("locatedIn", agent=D.john_doe)).to_dict()
        assert out == {"variables": ["site"],
                       "rows": [{"site": {"type": "iri", "value": D.assembly_line_1.value}}]}


class TestMinus:
    def test_disjoint_variables_remove_nothing(self, listing1):
        base = Query(["a"], [TriplePattern(V("a"), RDF_TYPE, IOE.HAgent)])
        q = Query(["a"], base.where, minus=[TriplePattern(V("z"), RDF_TYPE, IOE.Activity)])
        assert rows(evaluate(listing1, q)) == rows(evaluate(listing1, base))

    def test_empty_minus_solutions_remove_nothing(self, listing1):
        base = Query(["a"], [TriplePattern(V("a"), RDF_TYPE, IOE.HAgent)])
        q = Query(["a"], base.where, minus=[TriplePattern(V("a"), D.never_used, V("z"))])
        assert rows(evaluate(listing1, q)) == rows(evaluate(listing1, base))

    def test_shared_variable_excludes(self, listing1):
        q = Query(["a"], [TriplePattern(V("a"), RDF_TYPE, IOE.HAgent)],
                  minus=[TriplePattern(V("a"), IOE.engagedIn, D.calibration)])
        assert rows(evaluate(listing1, q)) == [(D.jane_smith,)]


class TestTextFrontEnd:
    def test_prefix_declarations(self, listing1):
        text = "PREFIX x: <http://w3id.org/semioe#>\nSELECT ?s WHERE { ?s a x:Site }"
        assert rows(evaluate(listing1, parse_query(text))) == [(D.assembly_line_1,)]

    def test_distinct_and_dot_separated(self, listing1):
        text = "SELECT DISTINCT ?s ?o WHERE { ?s ioe:locatedIn ?o . ?s a ioe:HAgent . }"
        assert len(rows(evaluate(listing1, parse_query(text)))) == 2

    def test_literal_objects(self, listing1):
        text = 'SELECT ?r WHERE { ?r ioe:isTransferable "true"^^xsd:boolean }'
        assert rows(evaluate(listing1, parse_query(text))) == [(D.CNC_machinist_level_1,)]

    @pytest.mark.parametrize("text", [
        "SELECT WHERE { ?s ?p ?o }",
        "SELECT ?s WHERE { }",
        "SELECT ?s WHERE { ?s ?p ?o",
        "SELECT ?x WHERE { ?s ?p ?o }",
        "SELECT ?s WHERE { ?s zz:p ?o }",
        "SELECT ?s WHERE { ?s <param> ?o }",
        "ASK { ?s ?p ?o }",
    ])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_query(text)


# --- oracle ----------------------------------------------------------------

def _random_query(rng):
    names = ["x", "y", "z"]

    def term(pool):
        return V(rng.choice(names)) if rng.random() < 0.6 else rng.choice(pool)

    def pattern():
        return TriplePattern(term(POOL_IRIS), term(POOL_PREDICATES) if rng.random() < 0.7 else rng.choice(
            POOL_PREDICATES), term(POOL_OBJECTS))

    where = [pattern() for _ in range(rng.randint(1, 3))]
    bound = sorted({v for p in where for v in p.variables()})
    if not bound:
        where.append(TriplePattern(V("x"), rng.choice(POOL_PREDICATES), V("y")))
        bound = ["x", "y"]
    projection = rng.sample(bound, rng.randint(1, len(bound)))
    minus = [pattern() for _ in range(rng.randint(0, 2))]
    return Query(projection, where, minus)


def _plain(patterns):
    return [tuple("?" + t.name if isinstance(t, Variable) else t for t in p) for p in patterns]


def test_evaluate_matches_brute_force_join():
    rng = random.Random(20240101)
    for _ in range(100):
        g = random_graph(rng, max_triples=200)
        q = _random_query(rng)
        got = set(evaluate(g, q, inference=False).tuples())
        expected = brute_force_select(g.triples(), _plain(q.where), ["?" + v for v in q.projection], _plain(q.minus))
        assert got == expected, q
