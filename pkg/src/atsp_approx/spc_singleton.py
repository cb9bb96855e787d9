"""Subtour cover for singleton instances with an empty backbone.

Every class receives one unit of entering flow through an auxiliary
vertex, the resulting circulation is rounded to an integral one whose
out-degree is at most one at every weighted vertex, and each class is
then patched internally with a single path. Every closed walk of the
result costs at most twice its lower bound.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .circulation import cycle_decomposition, redirect, select_entries
from .errors import check
from .flow import FlowNetwork, min_cost_integral_flow
from .graph import EdgeMultiset, eulerian_components, is_strongly_connected, shortest_path
from .instance import Instance


class InvalidPartition(ValueError):
    pass


def _validate_partition(i: Instance, partition: Sequence) -> list[frozenset[int]]:
    classes = [frozenset(c) for c in partition]
    seen: set[int] = set()
    for c in classes:
        if not c:
            raise InvalidPartition("empty class")
        if len(c) == i.n:
            raise InvalidPartition("partition class equals V")
        if seen & c:
            raise InvalidPartition("classes overlap")
        seen |= c
        if not is_strongly_connected(i.g, c):
            raise InvalidPartition(f"class {sorted(c)} does not induce a strongly connected graph")
    return classes


def solve_spc_singleton(i: Instance, partition: Sequence, _cycles=None) -> EdgeMultiset:
    if not i.is_singleton():
        raise ValueError("instance is not singleton")
    classes = _validate_partition(i, partition)
    if set().union(*classes) != set(range(i.n)):
        raise InvalidPartition("partition does not cover V")
    g = i.g
    cycles = _cycles if _cycles is not None else cycle_decomposition(g, i.x)
    selections = []
    for j, members in enumerate(classes):
        selections += select_entries(g, cycles, j, members, Fraction(1))
    first_id = max(g.edge_ids(), default=-1) + 1
    red = redirect(g, cycles, classes, selections, first_id)
    gp, xp = red.graph, red.x

    stage = "spc-singleton"
    for j, a in enumerate(red.aux):
        check(sum(xp[e.id] for e in gp.out_edges(a)) == 1, stage, f"aux vertex {a} does not carry unit flow")
    weighted = {v for v in range(i.n) if i.vertex_y.get(v, 0) > 0}
    for v in weighted:
        check(sum(xp[e.id] for e in gp.out_edges(v)) <= 1, stage, f"vertex {v} exceeds unit out-flow")

    net = FlowNetwork()
    for v in range(gp.n):
        if v in red.aux:
            lo, hi = 1, 1
        elif v in weighted:
            lo, hi = 0, 1
        else:
            lo, hi = 0, None
        net.add(("v", v), ("in", v), ("out", v), lo, hi)
    for e in gp.edges:
        net.add(("e", e.id), ("out", e.tail), ("in", e.head), 0, None, i.weight(red.source[e.id]))
    flow, _ = min_cost_integral_flow(net)

    counts: dict[int, int] = {}
    enter_at, leave_at = {}, {}
    for e in gp.edges:
        z = flow[("e", e.id)]
        if not z:
            continue
        orig = red.source[e.id]
        counts[orig] = counts.get(orig, 0) + z
        if e.head in red.aux:
            enter_at[e.head] = g.edge(orig).head
        if e.tail in red.aux:
            leave_at[e.tail] = g.edge(orig).tail
    for j, a in enumerate(red.aux):
        u, v = enter_at[a], leave_at[a]
        if u != v:
            got = shortest_path(g, i.weights, u, v, classes[j])
            check(got is not None, stage, f"class {j} is not strongly connected")
            for eid in got[0]:
                counts[eid] = counts.get(eid, 0) + 1
    f = EdgeMultiset(counts)

    check(f.is_eulerian(g), stage, "output is not Eulerian")
    for j, members in enumerate(classes):
        check(f.crossing_out(g, members) >= 1, stage, f"class {j} is not crossed")
    for v in weighted:
        check(f.out_degree(g, v) <= 2, stage, f"vertex {v} has out-degree above 2")
    for t in eulerian_components(g, f):
        check(i.cost(t.edges) <= 2 * i.lb_set(t.vertices), stage, "a closed walk is heavier than 2 lb")
    return f
