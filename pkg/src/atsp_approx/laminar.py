"""Tight-set structure and the contraction/induction toolkit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import InvariantViolation, check
from .graph import (
    Digraph,
    Edge,
    EdgeMultiset,
    Subtour,
    as_subtour,
    crosses,
    distances_from,
    eulerian_components,
    scc_topological,
    shortest_path,
)
from .instance import Instance, LaminarForest, in_flow, out_flow

VertexSet = frozenset[int]


def _set_of(i: Instance, s) -> VertexSet:
    """Accept either a laminar set id or an explicit vertex collection."""
    if isinstance(s, int):
        return i.laminar.sets[s]
    return frozenset(s)


def scc_chain(i: Instance, s) -> list[VertexSet]:
    """Strongly connected pieces of a tight set, in the only order they can be traversed."""
    s = _set_of(i, s)
    if out_flow(i, s) != 1 or in_flow(i, s) != 1:
        raise InvariantViolation("scc-chain", f"set {sorted(s)} is not tight")
    comps = scc_topological(i.g, s)
    ids = lambda edges: frozenset(e.id for e in edges)
    ok = ids(i.g.delta_in(comps[0])) == ids(i.g.delta_in(s))
    ok &= ids(i.g.delta_out(comps[-1])) == ids(i.g.delta_out(s))
    for a, b in zip(comps, comps[1:]):
        ok &= ids(i.g.delta_out(a)) == ids(i.g.delta_in(b))
    check(ok, "scc-chain", f"instance corrupt: components of {sorted(s)} do not form a chain")
    return comps


def path_crossings(g: Digraph, path: Iterable[int], r: VertexSet) -> int:
    return sum(1 for eid in path if crosses(g.edge(eid), r))


def _path_vertices(g: Digraph, u: int, path: list[int]) -> list[int]:
    return [u] + [g.edge(eid).head for eid in path]


def _inside_path(i: Instance, a: int, b: int, within: VertexSet) -> list[int]:
    got = shortest_path(i.g, i.weights, a, b, within)
    if got is None:
        raise InvariantViolation("short-path", f"no path {a}->{b} inside {sorted(within)}")
    return list(got[0])


def _crossing_limit(hits: int, special: bool) -> int:
    if hits == 0:
        return 2
    if hits == 1:
        return 1
    return 0 if special else 2


def short_path(i: Instance, s, u: int, v: int) -> list[int]:
    """A u->v path inside S crossing every laminar set a bounded number of times.

    Sets strictly inside S that hold neither endpoint are crossed at most
    twice, sets holding one endpoint at most once. When u is an entry
    vertex or v an exit vertex of S, sets holding both endpoints are never
    left.
    """
    s = _set_of(i, s)
    g = i.g
    if u not in s or v not in s:
        raise ValueError("endpoints must lie in S")
    got = shortest_path(g, i.weights, u, v, s)
    if got is None:
        raise InvariantViolation("short-path", f"unreachable inside S: {u}->{v}")
    path = list(got[0])
    special = u in i.s_in(s) or v in i.s_out(s)
    inner = sorted((k, r) for k, r in i.laminar.sets.items() if r < s)
    repaired: set[int] = set()
    while True:
        worst = None
        for k, r in inner:
            hits = (u in r) + (v in r)
            if path_crossings(g, path, r) > _crossing_limit(hits, special):
                key = (-len(r), k)
                if worst is None or key < worst[0]:
                    worst = (key, k, r, hits)
        if worst is None:
            break
        _, k, r, hits = worst
        check(k not in repaired, "short-path", f"set {k} needed repair twice")
        repaired.add(k)
        verts = _path_vertices(g, u, path)
        inside = [t for t, x in enumerate(verts) if x in r]
        if hits == 0:
            a, b = inside[0], inside[-1]
            path = path[:a] + _inside_path(i, verts[a], verts[b], r) + path[b:]
        elif hits == 1 and u in r:
            b = inside[-1]
            path = _inside_path(i, u, verts[b], r) + path[b:]
        elif hits == 1:
            a = inside[0]
            path = path[:a] + _inside_path(i, verts[a], v, r)
        elif special:
            path = _inside_path(i, u, v, r)
        else:
            entries = i.s_in(r)
            a = next(t for t, x in enumerate(verts) if x in entries)
            path = path[:a] + _inside_path(i, verts[a], v, r)

    verts = _path_vertices(g, u, path)
    check(all(x in s for x in verts), "short-path", "path leaves S")
    bound = Fraction(0)
    for k, r in i.laminar.sets.items():
        c = path_crossings(g, path, r)
        check(c <= 2, "short-path", f"set {k} crossed {c} times")
        if r < s:
            hits = (u in r) + (v in r)
            check(c <= _crossing_limit(hits, special), "short-path", f"set {k} crossed {c} times")
            bound += (2 - hits if special else 2) * i.laminar.y[k]
    c = i.cost(EdgeMultiset(path))
    check(c <= i.value(s) and c <= bound, "short-path", "path cost exceeds its bound")
    return path


def distance_dS(i: Instance, s, u: int, v: int):
    s = _set_of(i, s)
    got = shortest_path(i.g, i.weights, u, v, s)
    return math.inf if got is None else got[1]


def enclosing_mass(i: Instance, s: VertexSet, v: int) -> Fraction:
    """Total y of laminar sets that contain v and lie strictly inside S."""
    return sum((i.laminar.y[k] for k, r in i.laminar.sets.items() if v in r and r < s), Fraction(0))


def distance_DS(i: Instance, s, u: int, v: int):
    """Enclosing mass at u, plus the inside-S distance, plus enclosing mass at v."""
    s = _set_of(i, s)
    d = distance_dS(i, s, u, v)
    return d + enclosing_mass(i, s, u) + enclosing_mass(i, s, v)


def max_DS(i: Instance, s) -> tuple[Fraction, int, int]:
    s = _set_of(i, s)
    best = None
    entries, exits = sorted(i.s_in(s)), sorted(i.s_out(s))
    mass = {v: enclosing_mass(i, s, v) for v in s}
    for u in entries:
        dist = _inside_distances(i, s, u)
        for v in exits:
            d = dist.get(v, math.inf) + mass[u] + mass[v]
            check(d <= i.value(s), "bound-on-D", f"D_S({u},{v}) = {d} exceeds value(S) = {i.value(s)}")
            if best is None or d > best[0]:
                best = (d, u, v)
    check(best is not None, "max-D", f"set {sorted(s)} has no entry or exit")
    return best


def _inside_distances(i: Instance, s: VertexSet, u: int) -> dict[int, Fraction]:
    return distances_from(i.g, i.weights, u, s)


def is_reducible(i: Instance, s, delta: Fraction) -> bool:
    s = _set_of(i, s)
    if len(s) <= 1:
        return False
    return max_DS(i, s)[0] < delta * i.value(s)


@dataclass(frozen=True)
class ContractionRecord:
    kind: str  # "contract" or "induce"
    set_id: int
    members: VertexSet  # S, in parent vertex ids
    new_vertex: int
    vertex_map: dict[int, int]  # parent vertex -> child vertex
    y_new: Fraction
    parent: Instance
    child: Instance

    def edge_map(self) -> dict[int, int]:
        """Child edge id -> parent edge id (ids are preserved)."""
        return {e.id: e.id for e in self.child.g.edges}


def _rebuild(i: Instance, keep: list[int], collapse: VertexSet, drop_inside: VertexSet):
    vmap = {v: k for k, v in enumerate(keep)}
    new = len(keep)
    for v in collapse:
        vmap[v] = new
    edges = [
        Edge(e.id, vmap[e.tail], vmap[e.head])
        for e in i.g.edges
        if not (e.tail in drop_inside and e.head in drop_inside)
    ]
    g = Digraph(new + 1, edges)
    x = {e.id: i.x[e.id] for e in edges}
    return vmap, new, g, x


def contract(i: Instance, s) -> tuple[Instance, ContractionRecord]:
    """Shrink the laminar set S to one vertex carrying the worst traversal cost."""
    sid = s if isinstance(s, int) else _find_set(i, s)
    members = i.laminar.sets[sid]
    max_d = max_DS(i, members)[0]
    keep = [v for v in range(i.n) if v not in members]
    vmap, s_new, g, x = _rebuild(i, keep, members, members)
    sets, ys = {}, {}
    y_new = i.laminar.y[sid] + max_d / 2
    for k, r in i.laminar.sets.items():
        if k == sid:
            sets[k], ys[k] = frozenset([s_new]), y_new
        elif not r < members:
            sets[k], ys[k] = frozenset(vmap[v] for v in r), i.laminar.y[k]
    child = Instance(g, LaminarForest.build(sets, ys), x)
    expected = i.total_value() - (i.value(members) - max_d)
    check(child.total_value() == expected, "contract", "value of contracted instance is off")
    check(child.total_value() <= i.total_value(), "contract", "contraction increased the value")
    return child, ContractionRecord("contract", sid, members, s_new, vmap, y_new, i, child)


def induce(i: Instance, s) -> tuple[Instance, ContractionRecord]:
    """Keep S and shrink everything outside it to one vertex."""
    sid = s if isinstance(s, int) else _find_set(i, s)
    members = i.laminar.sets[sid]
    outside = frozenset(range(i.n)) - members
    if not outside:
        raise ValueError("cannot induce on the whole vertex set")
    keep = sorted(members)
    vmap, s_bar, g, x = _rebuild(i, keep, outside, outside)
    sets, ys = {}, {}
    for k, r in i.laminar.sets.items():
        if r < members:
            sets[k], ys[k] = frozenset(vmap[v] for v in r), i.laminar.y[k]
    y_new = i.value(members) / 2
    if y_new > 0:
        sets[sid], ys[sid] = frozenset([s_bar]), y_new
    child = Instance(g, LaminarForest.build(sets, ys), x)
    check(child.total_value() == 2 * i.value(members), "induce", "value of induced instance is off")
    return child, ContractionRecord("induce", sid, members, s_bar, vmap, y_new, i, child)


def _find_set(i: Instance, s) -> int:
    s = frozenset(s)
    for k, r in i.laminar.sets.items():
        if r == s:
            return k
    raise KeyError(f"{sorted(s)} is not a laminar set")


def _walk_of(g: Digraph, t) -> tuple[int, ...]:
    if isinstance(t, Subtour):
        return t.walk
    return as_subtour(g, EdgeMultiset(t)).walk


def lift(rec: ContractionRecord, t, restricted: bool = True) -> Subtour:
    """Expand every pass of a walk through the contracted vertex by an inside path."""
    if rec.kind != "contract":
        raise ValueError("lift expects a contraction record")
    parent, child = rec.parent, rec.child
    walk = _walk_of(child.g, t)
    s_new = rec.new_vertex
    if not any(child.g.edge(eid).head == s_new for eid in walk):
        raise ValueError("not a tour: the walk never visits the contracted vertex")
    within = rec.members if restricted else None
    out: list[int] = []
    m = len(walk)
    for p, eid in enumerate(walk):
        out.append(eid)
        if child.g.edge(eid).head == s_new:
            nxt = walk[(p + 1) % m]
            a, b = parent.g.edge(eid).head, parent.g.edge(nxt).tail
            if a != b:
                got = shortest_path(parent.g, parent.weights, a, b, within)
                check(got is not None, "lift", f"no path {a}->{b} inside the contracted set")
                out.extend(got[0])
    # Rotate so the walk is a closed walk starting at a tail in the parent graph.
    lifted = EdgeMultiset(out)
    verts = lifted.vertices(parent.g)
    result = Subtour(lifted, tuple(out), verts)
    check(lifted.is_eulerian(parent.g), "lift", "lifted walk is not Eulerian")
    check(parent.cost(lifted) <= child.cost(EdgeMultiset(walk)), "lift", "lifting increased the cost")
    return result


def make_contractible(i: Instance, s, t, induced: Instance | None = None) -> EdgeMultiset:
    """Turn a tour of the induced instance into one closed walk per piece of S."""
    members = _set_of(i, s)
    if induced is None:
        induced = induce(i, members)[0]
    walk = _walk_of(induced.g, t)
    m = len(walk)
    g = i.g
    pieces = []
    for comp in scc_topological(g, members):
        kept: list[int] = []
        exits: list[int] = []
        for p, eid in enumerate(walk):
            e = g.edge(eid)
            if e.tail in comp and e.head in comp:
                kept.append(eid)
            elif e.tail in comp:
                exits.append(p)
        check(bool(exits), "make-contractible", "tour never leaves a component of S")
        stitches: list[int] = []
        for p in exits:
            q = (p + 1) % m
            while g.edge(walk[q]).head not in comp:
                q = (q + 1) % m
            a, b = g.edge(walk[p]).tail, g.edge(walk[q]).head
            if a != b:
                got = shortest_path(g, i.weights, a, b, comp)
                check(got is not None, "make-contractible", "component is not strongly connected")
                stitches.extend(got[0])
        piece = EdgeMultiset(kept + stitches)
        if len(comp) > 1 or piece:
            subs = eulerian_components(g, piece)
            check(len(subs) == 1 and subs[0].vertices == comp, "make-contractible",
                  "component walk is not a single covering closed walk")
        pieces.append(piece)
    total = EdgeMultiset()
    for piece in pieces:
        total = total + piece
    check(i.cost(total) <= induced.cost(EdgeMultiset(walk)), "make-contractible", "cost increased")
    return total


def contract_many(i: Instance, set_ids: Iterable[int]) -> tuple[Instance, list[ContractionRecord]]:
    """Contract pairwise disjoint laminar sets one after another."""
    records = []
    cur = i
    for sid in set_ids:
        cur, rec = contract(cur, sid)
        records.append(rec)
    return cur, records


def lift_many(records: list[ContractionRecord], t) -> Subtour:
    cur = t
    for rec in reversed(records):
        cur = lift(rec, cur)
    if isinstance(cur, Subtour):
        return cur
    return as_subtour(records[0].parent.g, EdgeMultiset(cur)) if records else cur
