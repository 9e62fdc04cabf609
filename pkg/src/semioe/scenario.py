"""End-to-end walkthrough of the assembly-line use case.

Four steps run in order against the extended fixture: John's access check,
John/Jane collaboration on calibration, air-purifier to cobot delegation of
anomaly detection, and the CNC machine's environment setting. Each step's
outcome is compared with a frozen expectation; the first mismatch stops the
run. Probes then check the temporary roles at the configured clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from . import services as S
from .entities import as_datetime
from .schema import validate
from .store import Graph
from .terms import DEFAULT_INSTANCE_NS, Iri, Literal, Namespace, XSD_INTEGER
from .turtle import load_turtle

D = Namespace(DEFAULT_INSTANCE_NS)

DEFAULT_CLOCK = "2024-01-01T09:00:00Z"
DEFAULT_WINDOW = ("2024-01-01T09:00:00Z", "2024-01-01T17:00:00Z")


def fixture_path(name: str):
    return resources.files("semioe").joinpath("fixtures").joinpath(name)


def load_fixture(name: str = "scenario_extended.ttl") -> Graph:
    with resources.as_file(fixture_path(name)) as path:
        return load_turtle(path).graph()


@dataclass
class StepRecord:
    name: str
    expected: tuple
    actual: tuple
    decision: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.expected == self.actual

    def to_dict(self) -> dict:
        return {
            "step": self.name,
            "ok": self.ok,
            "expected": _json(self.expected),
            "actual": _json(self.actual),
            "decision": self.decision,
        }


def _json(v):
    if isinstance(v, (tuple, list, frozenset, set)):
        items = sorted(v, key=str) if isinstance(v, (set, frozenset)) else v
        return [_json(x) for x in items]
    if isinstance(v, (Iri, Literal)):
        return str(v)
    return v


@dataclass
class Transcript:
    steps: list[StepRecord] = field(default_factory=list)
    probes: list[StepRecord] = field(default_factory=list)
    validation: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return (
            len(self.steps) == 4
            and all(s.ok for s in self.steps)
            and all(p.ok for p in self.probes)
            and self.validation is not None
            and self.validation["valid"]
            and [w["focus"] for w in self.validation["warnings"]] == [str(D.packaging_robot)]
        )

    @property
    def first_failure(self) -> Optional[StepRecord]:
        return next((s for s in self.steps + self.probes if not s.ok), None)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "steps": [s.to_dict() for s in self.steps],
            "probes": [p.to_dict() for p in self.probes],
            "validation": self.validation,
        }

    def lines(self) -> list[str]:
        out = []
        for rec in self.steps + self.probes:
            mark = "ok  " if rec.ok else "FAIL"
            out.append(f"{mark} {rec.name}: {_json(rec.actual)}")
            if not rec.ok:
                out.append(f"     expected {_json(rec.expected)}")
        if self.validation is not None:
            out.append(f"validation: valid={self.validation['valid']} warnings={len(self.validation['warnings'])}")
        return out


def _access(g, agent, system, rtype, at):
    d = S.access_control(g, agent, system, D.assembly_line_1, rtype, at)
    return ("allowed" if d.allowed else "denied", d.matched_right), d.to_dict()


def _run(fn):
    try:
        decision = fn()
    except S.ServiceError as exc:
        return ("error", exc.code), {"error": exc.code, "message": exc.message}
    return None, decision


def scenario_walkthrough(g: Graph, clock=DEFAULT_CLOCK, window=DEFAULT_WINDOW) -> Transcript:
    """Run the four-step use case on ``g`` (mutated) and compare with the frozen outcomes."""
    at = as_datetime(clock)
    win = S.TimeWindow(*window)
    t = Transcript()

    actual, decision = _access(g, D.john_doe, D.spindle_sensor, D.configure, at)
    t.steps.append(StepRecord("access-control john_doe configure spindle_sensor",
                              ("allowed", D.right_config_CNC_machine), actual, decision))
    if not t.steps[-1].ok:
        return t

    err, grant = _run(lambda: S.collaborate(g, D.john_doe, D.jane_smith, D.calibration, win))
    actual = err or ("granted", frozenset(grant.rights))
    t.steps.append(StepRecord("collaboration john_doe -> jane_smith on calibration",
                              ("granted", frozenset({D.right_read_CNC_machine, D.right_config_CNC_machine})),
                              actual, grant if err else grant.to_dict()))
    if not t.steps[-1].ok:
        return t

    err, grant = _run(lambda: S.delegate(g, D.air_purifier, D.cobot, D.anomaly_detection, win))
    actual = err or ("granted", frozenset(grant.rights))
    t.steps.append(StepRecord("delegation air_purifier -> cobot on anomaly_detection",
                              ("granted", frozenset({D.right_read_CNC_machine})),
                              actual, grant if err else grant.to_dict()))
    if not t.steps[-1].ok:
        return t

    err, adj = _run(lambda: S.environment_setting(g, D.CNC_machine, D.assembly_line_1))
    actual = err or ("applied", tuple((a.property, a.old_value, a.new_value) for a in adj.adjustments))
    t.steps.append(StepRecord("environment-setting CNC_machine at assembly_line_1",
                              ("applied", ((D.filtration_power, Literal("40", XSD_INTEGER),
                                            Literal("80", XSD_INTEGER)),)),
                              actual, adj if err else adj.to_dict()))
    if not t.steps[-1].ok:
        return t

    # temporary rights hold only inside the grant window
    inside = win.contains(at)
    expect = "allowed" if inside else "denied"
    for agent, rtype in ((D.jane_smith, D.configure), (D.cobot, D.read)):
        actual, decision = _access(g, agent, D.spindle_sensor, rtype, at)
        t.probes.append(StepRecord(f"probe {agent.value.rsplit('#', 1)[-1]} {rtype.value.rsplit('#', 1)[-1]} spindle_sensor",
                                   (expect,), actual[:1], decision))

    t.validation = validate(g).to_dict()
    return t
