import pytest

from semioe import entities as E
from semioe.scenario import D
from semioe.schema import inferred_types
from semioe.store import Graph
from semioe.terms import IOE, ORG, RDF_TYPE, SSN, Literal, Triple, XSD_DATETIME, XSD_INTEGER, datetime_literal


class TestLocatedIn:
    @pytest.mark.parametrize("node,site", [("john_doe", "assembly_line_1"), ("CNC_machine", "assembly_line_1")])
    def test_known(self, listing1, node, site):
        assert E.located_in(listing1, D[node]) == D[site]

    def test_unknown(self, listing1):
        assert E.located_in(listing1, D.nobody) is None

    def test_ambiguous(self, listing1):
        listing1.add(Triple(D.john_doe, IOE.locatedIn, D.elsewhere))
        with pytest.raises(E.AmbiguityError):
            E.located_in(listing1, D.john_doe)


class TestGetRole:
    def test_permanent(self, listing1):
        assert E.get_role(listing1, D.john_doe, "2030-01-01T00:00:00Z") == D.CNC_machinist_level_1

    def test_no_membership(self, listing1):
        assert E.get_role(listing1, D.nobody) is None

    @pytest.fixture
    def two_roles(self, listing1):
        g = listing1
        g.add(Triple(D.temp, RDF_TYPE, IOE.CurrentRole))
        g.add(Triple(D.temp, IOE.startTime, datetime_literal("2024-01-01T09:00:00Z")))
        g.add(Triple(D.temp, IOE.endTime, datetime_literal("2024-01-01T17:00:00Z")))
        g.add(Triple(D.m_temp, RDF_TYPE, ORG.Membership))
        g.add(Triple(D.m_temp, ORG.member, D.jane_smith))
        g.add(Triple(D.m_temp, ORG.role, D.temp))
        return g

    @pytest.mark.parametrize("at,role", [
        ("2024-01-01T08:59:59Z", "CNC_machinist_level_2"),
        ("2024-01-01T09:00:00Z", "temp"),
        ("2024-01-01T12:00:00Z", "temp"),
        ("2024-01-01T17:00:00Z", "temp"),
        ("2024-01-01T17:00:01Z", "CNC_machinist_level_2"),
    ])
    def test_temporary_wins_inside_window(self, two_roles, at, role):
        assert E.get_role(two_roles, D.jane_smith, at) == D[role]
        assert E.get_role_q(two_roles, D.jane_smith, at) == D[role]

    def test_latest_start_wins(self, two_roles):
        g = two_roles
        g.add(Triple(D.temp2, IOE.startTime, datetime_literal("2024-01-01T10:00:00Z")))
        g.add(Triple(D.m_temp2, RDF_TYPE, ORG.Membership))
        g.add(Triple(D.m_temp2, ORG.member, D.jane_smith))
        g.add(Triple(D.m_temp2, ORG.role, D.temp2))
        assert E.get_role(g, D.jane_smith, "2024-01-01T11:00:00Z") == D.temp2

    def test_malformed_window_never_valid(self, two_roles):
        two_roles.add(Triple(D.temp, IOE.startTime, Literal("soon", XSD_DATETIME)))
        two_roles.remove(Triple(D.temp, IOE.startTime, datetime_literal("2024-01-01T09:00:00Z")))
        assert E.get_role(two_roles, D.jane_smith, "2024-01-01T12:00:00Z") == D.CNC_machinist_level_2


class TestRights:
    @pytest.mark.parametrize("role,rights", [
        ("CNC_machinist_level_1", ["right_config_CNC_machine", "right_read_CNC_machine"]),
        ("CNC_machinist_level_2", ["right_read_CNC_machine"]),
        ("unassigned", []),
    ])
    def test_get_rights(self, listing1, role, rights):
        assert E.get_rights(listing1, D[role]) == [D[r] for r in rights]

    def test_smart_object_right_expands(self, extended):
        assert E.get_systems_from_right(extended, D.right_read_CNC_machine) == [D.spindle_sensor]

    def test_system_right(self, extended):
        assert E.get_systems_from_right(extended, D.right_config_filtration) == [D.filtration_unit]

    def test_environment_right_covers_site(self, extended):
        expected = set()
        for obj in (D.CNC_machine, D.cobot, D.air_purifier):
            expected.update(E.get_included_systems(extended, obj))
        assert set(E.get_systems_from_right(extended, D.right_read_line_1)) == expected
        assert {D.spindle_sensor, D.cobot_controller, D.cobot_gripper, D.filtration_unit} <= expected


class TestTraversal:
    def test_engaged_objects(self, listing1):
        listing1.add(Triple(D.CNC_machine, IOE.engagedIn, D.calibration))
        assert E.get_objects_engaged_in_activity(listing1, D.calibration) == [D.CNC_machine]

    def test_two_level_subsystems(self):
        g = Graph([
            Triple(D.top, IOE.includedIn, D.obj),
            Triple(D.top, SSN.hasSubSystem, D.mid),
            Triple(D.mid, SSN.hasSubSystem, D.leaf),
        ])
        assert E.get_included_systems(g, D.obj) == [D.leaf, D.mid, D.top]
        assert E.get_included_systems_q(g, D.obj) == [D.leaf, D.mid, D.top]

    def test_subsystem_cycle_terminates(self):
        g = Graph([
            Triple(D.a, IOE.includedIn, D.obj),
            Triple(D.a, SSN.hasSubSystem, D.b),
            Triple(D.b, SSN.hasSubSystem, D.a),
        ])
        assert E.get_included_systems(g, D.obj) == [D.a, D.b]

    def test_no_preferences(self, listing1):
        assert E.get_env_preferences(listing1, D.john_doe) == []

    def test_preferences(self, extended):
        prefs = E.get_env_preferences(extended, D.CNC_machine)
        assert prefs == [E.PreferenceView(D.pref_filtration_power, D.filtration_power, D.assembly_line_1,
                                          Literal("80", XSD_INTEGER))]

    def test_system_properties(self, extended):
        assert E.get_systems_properties(extended, [D.filtration_unit]) == [D.filtration_power]

    def test_available_agents(self, listing1):
        assert E.available_agents(listing1) == [D.jane_smith]


# --- both implementation paths agree ----------------------------------------

def _nodes(g):
    return sorted({t.subject for t in g.triples()}, key=lambda n: n.value)


@pytest.mark.parametrize("fixture", ["listing1", "extended"])
def test_dual_paths_agree(fixture, request):
    g = request.getfixturevalue(fixture)
    nodes = _nodes(g)
    for n in nodes:
        for cls in inferred_types(g, n):
            for inference in (False, True):
                assert E.describe(g, n, cls, inference) == E.describe_q(g, n, cls, inference)
        try:
            direct = E.located_in(g, n)
        except E.AmbiguityError:
            direct = "ambiguous"
        try:
            queried = E.located_in_q(g, n)
        except E.AmbiguityError:
            queried = "ambiguous"
        assert direct == queried, n
        for at in (None, "2024-01-01T12:00:00Z"):
            assert E.get_role(g, n, at) == E.get_role_q(g, n, at), n
        assert E.get_rights(g, n) == E.get_rights_q(g, n), n
        assert E.get_included_systems(g, n) == E.get_included_systems_q(g, n), n
        assert E.get_objects_located_in(g, n) == E.get_objects_located_in_q(g, n), n
        assert E.get_objects_engaged_in_activity(g, n) == E.get_objects_engaged_in_activity_q(g, n), n
        assert E.get_systems_properties(g, [n]) == E.get_systems_properties_q(g, [n]), n
        assert E.get_systems_from_right(g, n) == E.get_systems_from_right_q(g, n), n
        assert E.get_env_preferences(g, n) == E.get_env_preferences_q(g, n), n
    assert E.available_agents(g) == E.available_agents_q(g)
