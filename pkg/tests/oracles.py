"""Naive reference implementations used as test oracles.

These read the triple set directly with set comprehensions and share no
code with the package beyond term classes and the vocabulary's axiom list.
"""

from datetime import datetime, timezone

from semioe.schema import SEMIOE
from semioe.terms import IOE, ORG, RDF_TYPE, SSN, Literal

ON_TARGETS = {IOE.onObject, IOE.onSmartObject}


def _dt(lit):
    if not isinstance(lit, Literal):
        return None
    text = lit.lexical.replace("Z", "+00:00")
    try:
        value = datetime.fromisoformat(text)
    except ValueError:
        return "bad"
    return value if value.tzinfo else value.replace(tzinfo=timezone.utc)


class Snapshot:
    def __init__(self, g):
        self.t = set(g.triple_set())
        supers = {}
        for sub, sup in SEMIOE.subclass_axioms:
            supers.setdefault(sub, set()).add(sup)
        changed = True
        while changed:
            changed = False
            for c, ss in supers.items():
                extra = set().union(*(supers.get(s, set()) for s in ss)) - ss
                if extra:
                    ss |= extra
                    changed = True
        self.supers = supers

    def objs(self, s, p):
        return {o for (a, b, o) in self.t if a == s and b == p}

    def subs(self, p, o):
        return {a for (a, b, c) in self.t if b == p and c == o}

    def is_a(self, x, cls):
        for c in self.objs(x, RDF_TYPE):
            if c == cls or cls in self.supers.get(c, ()):
                return True
        return False

    def all_of(self, cls):
        return {a for (a, b, c) in self.t if b == RDF_TYPE and self.is_a(a, cls)}

    def systems_of(self, obj):
        found = set(self.subs(IOE.includedIn, obj))
        while True:
            more = {o for s in found for o in self.objs(s, SSN.hasSubSystem)} - found
            if not more:
                return found
            found |= more

    def system_sites(self, system):
        objects = {o for (a, b, o) in self.t if b == IOE.includedIn}
        return {site for o in objects if system in self.systems_of(o) for site in self.objs(o, IOE.locatedIn)}

    def role_at(self, agent, at):
        temps, perms = [], []
        for m in self.subs(ORG.member, agent):
            if not self.is_a(m, ORG.Membership) or self.objs(m, IOE.retiredAt):
                continue
            for r in self.objs(m, ORG.role):
                starts = [_dt(x) for x in self.objs(r, IOE.startTime)]
                ends = [_dt(x) for x in self.objs(r, IOE.endTime)]
                if "bad" in starts + ends:
                    continue
                if at is not None and any(s > at for s in starts):
                    continue
                if at is not None and any(e < at for e in ends):
                    continue
                (temps if starts else perms).append((max(starts) if starts else None, r))
        if temps:
            latest = max(st for st, _ in temps)
            return min((r for st, r in temps if st == latest), key=lambda r: r.value)
        if perms:
            return min(perms, key=lambda p: p[1].value)[1]
        return None

    def granted(self, role, agent_site):
        """Every (system, right type, right) reachable from ``role``."""
        out = set()
        for r in self.subs(IOE.forRole, role):
            if not self.is_a(r, IOE.Right):
                continue
            for rtype in self.objs(r, IOE.hasType):
                systems = set()
                if self.is_a(r, IOE.RightOnSystem):
                    systems |= self.objs(r, IOE.onSystem)
                if self.is_a(r, IOE.RightOnSmartObject):
                    for p in ON_TARGETS:
                        for o in self.objs(r, p):
                            systems |= self.systems_of(o)
                if self.is_a(r, IOE.RightOnEnvironment):
                    for site in self.objs(r, IOE.onEnvironment):
                        if site != agent_site:
                            continue
                        for o in self.subs(IOE.locatedIn, site):
                            if self.is_a(o, IOE.SmartObject):
                                systems |= self.systems_of(o)
                out |= {(s, rtype, r) for s in systems}
        return out


def oracle_access(snap: Snapshot, agent, system, rtype, at):
    """'error', or whether access is allowed."""
    sites = snap.system_sites(system)
    if not sites:
        return "error"
    agent_sites = snap.objs(agent, IOE.locatedIn)
    if agent_sites != sites or len(sites) != 1:
        return False
    (site,) = sites
    role = snap.role_at(agent, at)
    if role is None:
        return False
    return any(s == system and t == rtype for s, t, _ in snap.granted(role, site))


def sweep_space(snap: Snapshot):
    agents = sorted(snap.all_of(IOE.Agent), key=lambda x: x.value)
    systems = sorted({a for (a, b, c) in snap.t if b in (IOE.includedIn, SSN.hasSubSystem)}
                     | {c for (a, b, c) in snap.t if b == SSN.hasSubSystem}, key=lambda x: x.value)
    types = sorted(snap.all_of(IOE.RightType), key=lambda x: x.value)
    return agents, systems, types
