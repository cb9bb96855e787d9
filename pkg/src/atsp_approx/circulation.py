"""Cycle decompositions of fractional circulations and class redirection.

Both cover-solvers follow the same recipe: decompose the circulation into
closed walks, pick entering flow of a prescribed mass for each vertex
class, reroute that flow (and the matching exits) through a fresh
auxiliary vertex per class, and drop the flow it carried inside the
class. This module implements that recipe on closed-walk decompositions
so that every rerouted amount is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .errors import check
from .graph import Digraph, Edge

Cycle = tuple[tuple[int, ...], Fraction]


def cycle_decomposition(g: Digraph, x: Mapping[int, Fraction]) -> list[Cycle]:
    """Strip simple cycles off a circulation, always following the smallest edge id."""
    rest = {eid: Fraction(v) for eid, v in x.items() if v}
    out: list[Cycle] = []
    while rest:
        start = min(rest)
        walk: list[int] = []
        seen: dict[int, int] = {g.edge(start).tail: 0}
        eid = start
        while True:
            walk.append(eid)
            v = g.edge(eid).head
            if v in seen:
                cyc = walk[seen[v]:]
                break
            seen[v] = len(walk)
            options = [e.id for e in g.out_edges(v) if e.id in rest]
            check(bool(options), "cycle-decomposition", f"flow is not a circulation at vertex {v}")
            eid = min(options)
        lam = min(rest[e] for e in cyc)
        for e in cyc:
            rest[e] -= lam
            if not rest[e]:
                del rest[e]
        out.append((tuple(cyc), lam))
    return out


@dataclass(frozen=True)
class Selection:
    cycle: int
    position: int
    cls: int
    amount: Fraction


def select_entries(
    g: Digraph,
    cycles: Sequence[Cycle],
    cls: int,
    members: frozenset[int],
    target: Fraction,
    allowed: Callable[[int], bool] = lambda eid: True,
) -> list[Selection]:
    """Entering occurrences of total mass ``target``, by edge id then cycle index.

    The last occurrence may be taken only partially.
    """
    cands = []
    for c, (edges, _) in enumerate(cycles):
        for p, eid in enumerate(edges):
            e = g.edge(eid)
            if e.head in members and e.tail not in members and allowed(eid):
                cands.append((eid, c, p))
    cands.sort()
    need = Fraction(target)
    chosen = []
    for eid, c, p in cands:
        if need <= 0:
            break
        take = min(cycles[c][1], need)
        chosen.append(Selection(c, p, cls, take))
        need -= take
    check(need == 0, "select-entries", f"class {cls} has entering mass below {target}")
    return chosen


@dataclass
class Redirected:
    graph: Digraph
    x: dict[int, Fraction]
    source: dict[int, int]  # new edge id -> edge id of the decomposed graph
    aux: list[int]
    internal: list[dict[int, Fraction]] = field(default_factory=list)


def redirect(
    g: Digraph,
    cycles: Sequence[Cycle],
    classes: Sequence[frozenset[int]],
    selections: Sequence[Selection],
    first_id: int,
    key: Callable[[int], object] = lambda eid: None,
) -> Redirected:
    """Reroute selected entries and their first exits through one auxiliary vertex per class.

    ``key`` lets callers keep otherwise equal pieces apart (e.g. by mark).
    """
    aux = [g.n + j for j in range(len(classes))]
    by_cycle: dict[int, dict[int, Selection]] = {}
    for s in selections:
        by_cycle.setdefault(s.cycle, {})[s.position] = s
    pieces: dict[tuple, Fraction] = {}
    internal: list[dict[int, Fraction]] = [dict() for _ in classes]
    for c, (edges, lam) in enumerate(cycles):
        sels = by_cycle.get(c, {})
        marks = sorted({Fraction(0), lam} | {s.amount for s in sels.values()})
        length = len(edges)
        for lo, hi in zip(marks, marks[1:]):
            amount = hi - lo
            new_tail: dict[int, int] = {}
            new_head: dict[int, int] = {}
            removed: dict[int, int] = {}
            for p, s in sels.items():
                if s.amount < hi:
                    continue
                members = classes[s.cls]
                new_head[p] = aux[s.cls]
                q = (p + 1) % length
                while g.edge(edges[q]).head in members:
                    check(q != p, "redirect", "walk never leaves its class")
                    removed[q] = s.cls
                    q = (q + 1) % length
                new_tail[q] = aux[s.cls]
            for q, eid in enumerate(edges):
                if q in removed:
                    bucket = internal[removed[q]]
                    bucket[eid] = bucket.get(eid, Fraction(0)) + amount
                    continue
                e = g.edge(eid)
                k = (eid, new_tail.get(q, e.tail), new_head.get(q, e.head), key(eid))
                pieces[k] = pieces.get(k, Fraction(0)) + amount
    edges_out = []
    x = {}
    source = {}
    for n_id, (k, amount) in enumerate(sorted(pieces.items(), key=lambda kv: kv[0][:3])):
        eid, t, h, _ = k
        new_id = first_id + n_id
        edges_out.append(Edge(new_id, t, h, preimage=eid))
        x[new_id] = amount
        source[new_id] = eid
    graph = Digraph(g.n + len(classes), edges_out)
    for v in range(graph.n):
        bal = sum((x[e.id] for e in graph.out_edges(v)), Fraction(0)) - sum(
            (x[e.id] for e in graph.in_edges(v)), Fraction(0)
        )
        check(bal == 0, "redirect", f"redirected flow unbalanced at vertex {v}")
    return Redirected(graph, x, source, aux, internal)
