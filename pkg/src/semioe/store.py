"""In-memory indexed triple store.

Triples are kept in a set with three nested-dict indexes (SPO, POS, OSP).
Every lookup returns a list sorted by the term total order, so enumeration is
deterministic for a given graph content.

Concurrency: one writer at a time, readers see either the state before or
after a mutation. All public methods take the graph lock; callers composing a
read-modify-write sequence hold ``graph.lock`` across it.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from contextlib import contextmanager
from typing import Iterable, Iterator, Optional

from .terms import Iri, Term, Triple


def _index():
    return defaultdict(lambda: defaultdict(set))


class Graph:
    def __init__(self, triples: Iterable[Triple] = ()):
        self.lock = threading.RLock()
        self._triples: set[Triple] = set()
        self._spo = _index()
        self._pos = _index()
        self._osp = _index()
        self.version = 0
        for t in triples:
            self.add(t)

    def __len__(self):
        return len(self._triples)

    def __contains__(self, triple: Triple):
        return triple in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples())

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __repr__(self):
        return f"<Graph with {len(self)} triples>"

    def triples(self) -> list[Triple]:
        with self.lock:
            return sorted(self._triples, key=Triple.sort_key)

    def triple_set(self) -> frozenset[Triple]:
        with self.lock:
            return frozenset(self._triples)

    def copy(self) -> "Graph":
        with self.lock:
            return Graph(self._triples)

    def add(self, triple: Triple) -> bool:
        """Insert a triple; returns True when it was not already present."""
        if not isinstance(triple, Triple):
            raise TypeError(f"expected Triple, got {type(triple).__name__}")
        with self.lock:
            if triple in self._triples:
                return False
            s, p, o = triple
            self._triples.add(triple)
            self._spo[s][p].add(o)
            self._pos[p][o].add(s)
            self._osp[o][s].add(p)
            self.version += 1
            return True

    def remove(self, triple: Triple) -> bool:
        """Delete a triple; returns True when it was present."""
        with self.lock:
            if triple not in self._triples:
                return False
            s, p, o = triple
            self._triples.discard(triple)
            _drop(self._spo, s, p, o)
            _drop(self._pos, p, o, s)
            _drop(self._osp, o, s, p)
            self.version += 1
            return True

    def update(self, add: Iterable[Triple] = (), remove: Iterable[Triple] = ()) -> None:
        """Apply removals then additions as one atomic step."""
        add, remove = list(add), list(remove)
        with self.lock:
            for t in remove:
                self.remove(t)
            for t in add:
                self.add(t)

    def clear(self) -> None:
        with self.lock:
            for t in list(self._triples):
                self.remove(t)

    @contextmanager
    def transaction(self):
        with self.lock:
            yield self

    def match(
        self,
        s: Optional[Term] = None,
        p: Optional[Term] = None,
        o: Optional[Term] = None,
    ) -> list[Triple]:
        """All triples agreeing with every bound position, in sorted order."""
        with self.lock:
            found = list(self._scan(s, p, o))
        found.sort(key=Triple.sort_key)
        return found

    def _scan(self, s, p, o) -> Iterator[Triple]:
        if s is not None:
            by_p = self._spo.get(s)
            if not by_p:
                return
            preds = [p] if p is not None else list(by_p)
            for pp in preds:
                objs = by_p.get(pp, ())
                if o is not None:
                    if o in objs:
                        yield Triple(s, pp, o)
                else:
                    for oo in objs:
                        yield Triple(s, pp, oo)
        elif p is not None:
            by_o = self._pos.get(p)
            if not by_o:
                return
            objs = [o] if o is not None else list(by_o)
            for oo in objs:
                for ss in by_o.get(oo, ()):
                    yield Triple(ss, p, oo)
        elif o is not None:
            for ss, preds in self._osp.get(o, {}).items():
                for pp in preds:
                    yield Triple(ss, pp, o)
        else:
            yield from self._triples

    def count(self, s=None, p=None, o=None) -> int:
        with self.lock:
            return sum(1 for _ in self._scan(s, p, o))

    def objects(self, s: Term, p: Iri) -> list[Term]:
        return [t.object for t in self.match(s, p, None)]

    def subjects(self, p: Iri, o: Term) -> list[Term]:
        return [t.subject for t in self.match(None, p, o)]

    def value(self, s: Term, p: Iri) -> Optional[Term]:
        objs = self.objects(s, p)
        return objs[0] if objs else None

    def index_consistent(self) -> bool:
        """Check that the three indexes describe exactly the triple set."""
        with self.lock:
            spo = {Triple(s, p, o) for s, d in self._spo.items() for p, os in d.items() for o in os}
            pos = {Triple(s, p, o) for p, d in self._pos.items() for o, ss in d.items() for s in ss}
            osp = {Triple(s, p, o) for o, d in self._osp.items() for s, ps in d.items() for p in ps}
            return spo == pos == osp == self._triples


def _drop(index, a, b, c):
    inner = index[a]
    inner[b].discard(c)
    if not inner[b]:
        del inner[b]
    if not inner:
        del index[a]
