"""Subtour cover for vertebrate pairs.

A vertebrate pair is an instance together with a backbone subtour that
meets every non-singleton laminar set. The cover is built from the LP
circulation: a witness flow certifies that every closed walk crossing a
non-singleton set reaches the backbone, and a joint integral rounding of
the circulation and its witness flow keeps that certificate intact.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from . import lp
from .circulation import Cycle, redirect, select_entries
from .errors import SolveError, check
from .flow import FlowNetwork, min_cost_integral_flow
from .graph import (
    Digraph,
    Edge,
    EdgeMultiset,
    Subtour,
    crosses,
    eulerian_components,
    is_strongly_connected,
    scc_topological,
    shortest_path,
)
from .instance import Instance
from .spc_singleton import InvalidPartition, solve_spc_singleton

FORWARD, BACKWARD, NEUTRAL = "forward", "backward", "neutral"


@dataclass(frozen=True)
class LevelOrder:
    sets: tuple[frozenset[int], ...]  # non-singleton sets and V, by size
    level: dict[int, int]

    @classmethod
    def of(cls, i: Instance) -> "LevelOrder":
        family = sorted(
            i.non_singleton_sets().items(), key=lambda kv: (len(kv[1]), kv[0])
        )
        sets = tuple(s for _, s in family) + (frozenset(range(i.n)),)
        level = {}
        for v in range(i.n):
            level[v] = next(k for k, s in enumerate(sets) if v in s)
        return cls(sets, level)

    def classify(self, e: Edge) -> str:
        lu, lv = self.level[e.tail], self.level[e.head]
        if lv < lu:
            return FORWARD
        if lu < lv:
            return BACKWARD
        return NEUTRAL


def classify_edges(i: Instance) -> dict[int, str]:
    order = LevelOrder.of(i)
    return {e.id: order.classify(e) for e in i.g.edges}


def witness_problems(
    g: Digraph,
    tags: Mapping[int, str],
    z: Mapping[int, Fraction],
    f: Mapping[int, Fraction],
    backbone: frozenset[int],
) -> list[str]:
    """Violated witness-flow conditions of ``f`` for circulation ``z``."""
    problems = []
    for e in g.edges:
        ze, fe = z.get(e.id, 0), f.get(e.id, 0)
        if fe < 0 or fe > ze:
            problems.append(f"capacity: edge {e.id}")
        if tags.get(e.id) == BACKWARD and fe != 0:
            problems.append(f"backward: edge {e.id} carries witness flow")
        if tags.get(e.id) == FORWARD and fe != ze:
            problems.append(f"forward: edge {e.id} not saturated")
    for v in range(g.n):
        if v in backbone:
            continue
        out = sum((f.get(e.id, 0) for e in g.out_edges(v)), Fraction(0))
        into = sum((f.get(e.id, 0) for e in g.in_edges(v)), Fraction(0))
        if out < into:
            problems.append(f"balance: vertex {v}")
    return problems


_witness_cache: "weakref.WeakKeyDictionary[Instance, dict]" = weakref.WeakKeyDictionary()


def compute_witness_flow(i: Instance, backbone: Subtour) -> dict[int, Fraction]:
    per_instance = _witness_cache.setdefault(i, {})
    if backbone.vertices in per_instance:
        return dict(per_instance[backbone.vertices])
    tags = classify_edges(i)
    prog = lp.LinearProgram(sense="max")
    var = {}
    for e in i.g.edges:
        upper = 0 if tags[e.id] == BACKWARD else i.x[e.id]
        var[e.id] = prog.add_variable(1 if tags[e.id] == FORWARD else 0, 0, upper)
    for v in range(i.n):
        if v in backbone.vertices:
            continue
        coeffs: dict[int, int] = {}
        for e in i.g.out_edges(v):
            coeffs[var[e.id]] = coeffs.get(var[e.id], 0) + 1
        for e in i.g.in_edges(v):
            coeffs[var[e.id]] = coeffs.get(var[e.id], 0) - 1
        if any(coeffs.values()):
            prog.add_row(coeffs, ">=", 0)
    out = lp.solve(prog)
    target = sum((i.x[eid] for eid, t in tags.items() if t == FORWARD), Fraction(0))
    if out.status != "optimal" or out.objective != target:
        raise SolveError("witness flow does not saturate forward edges: not a vertebrate pair")
    f = {eid: out.primal.get(k, Fraction(0)) for eid, k in var.items()}
    problems = witness_problems(i.g, tags, i.x, f, backbone.vertices)
    check(not problems, "witness-flow", "; ".join(problems))
    per_instance[backbone.vertices] = dict(f)
    return f


@dataclass
class MarkedSplit:
    graph: Digraph
    x: dict[int, Fraction]
    marked: dict[int, bool]

    def source(self, eid: int) -> int:
        return self.graph.edge(eid).preimage


def split_to_marks(g: Digraph, x: Mapping[int, Fraction], f: Mapping[int, Fraction]) -> MarkedSplit:
    """Parallel copies so that every copy carries witness flow 0 or all of its x."""
    edges, xs, marks = [], {}, {}
    for e in sorted(g.edges, key=lambda e: e.id):
        xe, fe = Fraction(x[e.id]), Fraction(f.get(e.id, 0))
        parts = []
        if fe > 0:
            parts.append((fe, True))
        if xe - fe > 0:
            parts.append((xe - fe, False))
        for amount, mark in parts:
            k = len(edges)
            edges.append(Edge(k, e.tail, e.head, preimage=e.id))
            xs[k] = amount
            marks[k] = mark
    return MarkedSplit(Digraph(g.n, edges), xs, marks)


def marked_balance_ok(g: Digraph, x, marked, backbone) -> bool:
    for v in range(g.n):
        if v in backbone:
            continue
        out = sum((x.get(e.id, 0) for e in g.out_edges(v) if marked[e.id]), Fraction(0))
        into = sum((x.get(e.id, 0) for e in g.in_edges(v) if marked[e.id]), Fraction(0))
        if out < into:
            return False
    return True


def is_consistent(g: Digraph, cycle: Sequence[int], marked, backbone) -> bool:
    length = len(cycle)
    for k in range(length):
        a, b = cycle[k], cycle[(k + 1) % length]
        if g.edge(a).head not in backbone and marked[a] and not marked[b]:
            return False
    return True


def consistent_2cycle_decomposition(
    g: Digraph, x: Mapping[int, Fraction], marked: Mapping[int, bool], backbone: frozenset[int]
) -> list[Cycle]:
    """Decompose ``x`` into consistent closed walks visiting each vertex at most twice."""
    rest = {eid: Fraction(v) for eid, v in x.items() if v}
    stage = "2-cycles"
    check(marked_balance_ok(g, rest, marked, backbone), stage, "marked flow unbalanced off the backbone")
    out: list[Cycle] = []
    while rest:
        walk = [min(rest)]
        visits: dict[int, list[int]] = {g.edge(walk[0]).tail: [0]}
        while True:
            k = len(walk)
            v = g.edge(walk[-1]).head
            seen = visits.setdefault(v, [])
            seen.append(k)
            cycle = None
            if len(seen) == 2:
                a = seen[0]
                if v in backbone:
                    cycle = walk[a:k]
                else:
                    same = marked[walk[a]] == marked[walk[k - 1]]
                    all_marked = all(marked[e.id] for e in g.out_edges(v) if e.id in rest)
                    if same or all_marked:
                        cycle = walk[a:k]
            elif len(seen) == 3:
                a, b = seen[0], seen[1]
                if marked[walk[b]] == marked[walk[k - 1]]:
                    cycle = walk[b:k]
                else:
                    cycle = walk[a:k]
            if cycle is not None:
                break
            used = set(walk)
            options = [e.id for e in g.out_edges(v) if e.id in rest and e.id not in used]
            check(bool(options), stage, f"walk is stuck at vertex {v}")
            same_type = [eid for eid in options if marked[eid] == marked[walk[-1]]]
            walk.append(min(same_type or options))
        check(len(set(cycle)) == len(cycle), stage, "cycle repeats an edge")
        counts: dict[int, int] = {}
        for eid in cycle:
            counts[g.edge(eid).head] = counts.get(g.edge(eid).head, 0) + 1
        check(max(counts.values()) <= 2, stage, "cycle visits a vertex three times")
        check(is_consistent(g, cycle, marked, backbone), stage, "cycle is not consistent")
        lam = min(rest[eid] for eid in cycle)
        for eid in cycle:
            rest[eid] -= lam
            if not rest[eid]:
                del rest[eid]
        out.append((tuple(cycle), lam))
        check(marked_balance_ok(g, rest, marked, backbone), stage, "marked flow unbalanced after extraction")
    return out


def _floor(q: Fraction) -> int:
    return math.floor(q)


def _ceil(q: Fraction) -> int:
    return math.ceil(q)


def tu_round(
    g: Digraph,
    w: Mapping[int, Fraction],
    z: Mapping[int, Fraction],
    f: Mapping[int, Fraction],
    balanced: frozenset[int] | None = None,
) -> tuple[dict[int, int], dict[int, int]]:
    """Jointly round a circulation ``z`` and a subflow ``f`` to integers.

    ``balanced`` lists the vertices where out-going ``f`` must stay at
    least the in-coming ``f``; by default every vertex where that holds
    for the input. Returns integral (z, f).
    """
    z = {e.id: Fraction(z.get(e.id, 0)) for e in g.edges}
    f = {e.id: Fraction(f.get(e.id, 0)) for e in g.edges}
    gap = {eid: z[eid] - f[eid] for eid in z}
    f_in = {v: sum((f[e.id] for e in g.in_edges(v)), Fraction(0)) for v in range(g.n)}
    f_out = {v: sum((f[e.id] for e in g.out_edges(v)), Fraction(0)) for v in range(g.n)}
    g_in = {v: sum((gap[e.id] for e in g.in_edges(v)), Fraction(0)) for v in range(g.n)}
    if balanced is None:
        balanced = frozenset(v for v in range(g.n) if f_out[v] >= f_in[v])

    net = FlowNetwork()
    for v in range(g.n):
        net.add(("fin", v), ("f'", v), ("f", v), _floor(f_in[v]), _ceil(f_in[v]))
        net.add(("gin", v), ("g'", v), ("g", v), _floor(g_in[v]), _ceil(g_in[v]))
        net.add(("gf", v), ("g", v), ("f", v), 0, None)
        if v not in balanced:
            net.add(("fg", v), ("f", v), ("g", v), 0, None)
    for e in g.edges:
        net.add(("fe", e.id), ("f", e.tail), ("f'", e.head), 0, 0 if f[e.id] == 0 else None, w[e.id])
        net.add(("ge", e.id), ("g", e.tail), ("g'", e.head), 0, 0 if f[e.id] == z[e.id] else None, w[e.id])
    flow, _ = min_cost_integral_flow(net)
    f_bar = {e.id: int(flow[("fe", e.id)]) for e in g.edges}
    z_bar = {e.id: f_bar[e.id] + int(flow[("ge", e.id)]) for e in g.edges}

    stage = "tu-round"
    problems = rounding_problems(g, w, z, f, z_bar, f_bar, balanced)
    check(not problems, stage, "; ".join(problems))
    return z_bar, f_bar


def rounding_problems(g, w, z, f, z_bar, f_bar, balanced) -> list[str]:
    """Violations of the joint rounding guarantees."""
    problems = []
    for eid in z_bar:
        if z_bar[eid] != int(z_bar[eid]) or f_bar[eid] != int(f_bar[eid]):
            problems.append(f"integrality: edge {eid}")
        if f_bar[eid] < 0 or f_bar[eid] > z_bar[eid]:
            problems.append(f"capacity: edge {eid}")
        if f[eid] == z[eid] and f_bar[eid] != z_bar[eid]:
            problems.append(f"saturation: edge {eid}")
        if f[eid] == 0 and f_bar[eid] != 0:
            problems.append(f"support: edge {eid}")
    if sum(w[e] * z_bar[e] for e in z_bar) > sum(w[e] * z[e] for e in z):
        problems.append("cost increased")
    for v in range(g.n):
        zi = sum(z_bar[e.id] for e in g.in_edges(v))
        zo = sum(z_bar[e.id] for e in g.out_edges(v))
        if zi != zo:
            problems.append(f"circulation: vertex {v}")
        fi = sum(f_bar[e.id] for e in g.in_edges(v))
        fo = sum(f_bar[e.id] for e in g.out_edges(v))
        if v in balanced and fo < fi:
            problems.append(f"balance: vertex {v}")
        frac_fi = sum((f[e.id] for e in g.in_edges(v)), Fraction(0))
        frac_gi = sum((z[e.id] - f[e.id] for e in g.in_edges(v)), Fraction(0))
        if not _floor(frac_fi) <= fi <= _ceil(frac_fi):
            problems.append(f"f-degree: vertex {v}")
        if not _floor(frac_gi) <= zi - fi <= _ceil(frac_gi):
            problems.append(f"g-degree: vertex {v}")
    return problems


def crossing_sets(i: Instance, t: Subtour) -> list[frozenset[int]]:
    return [s for s in i.non_singleton_sets().values() if any(crosses(i.g.edge(e), s) for e in t.edges)]


def verify_witnessed_components(
    z: EdgeMultiset, f: Mapping[int, int], i: Instance, backbone: Subtour
) -> Subtour | None:
    """First component of ``z`` crossing a non-singleton set away from the backbone, if any.

    ``f`` is accepted for the caller's audit trail; the check itself only
    uses the components of ``z``.
    """
    for t in eulerian_components(i.g, z):
        if crossing_sets(i, t) and not (t.vertices & backbone.vertices):
            return t
    return None


def _validate_family(i: Instance, backbone: Subtour, family: Sequence[frozenset[int]]) -> None:
    seen: set[int] = set()
    for u in family:
        if not u:
            raise SolveError("empty set in the family")
        if u & backbone.vertices:
            raise SolveError(f"set {sorted(u)} meets the backbone")
        if u & seen:
            raise SolveError(f"set {sorted(u)} overlaps another set")
        seen |= u
        if not is_strongly_connected(i.g, u):
            raise SolveError(f"set {sorted(u)} is not strongly connected")
        for s in i.non_singleton_sets().values():
            if u & s and not u <= s:
                raise SolveError(f"set {sorted(u)} cuts laminar set {sorted(s)}")


def solve_main_lemma(i: Instance, backbone: Subtour, family: Sequence) -> tuple[EdgeMultiset, dict[int, int]]:
    """Eulerian multiset entering every set of ``family``, with its witness flow."""
    family = [frozenset(u) for u in family]
    _validate_family(i, backbone, family)
    if not family:
        return EdgeMultiset(), {}
    g = i.g
    bb = backbone.vertices
    tags = classify_edges(i)
    f = compute_witness_flow(i, backbone)
    split = split_to_marks(g, i.x, f)
    sg, marked = split.graph, split.marked
    cycles = consistent_2cycle_decomposition(sg, split.x, marked, bb)

    half = Fraction(1, 2)
    selections = []
    for j, u in enumerate(family):
        marked_mass = sum((split.x[e.id] for e in sg.delta_in(u) if marked[e.id]), Fraction(0))
        want = marked_mass >= half
        selections += select_entries(sg, cycles, j, u, half, lambda eid, want=want: marked[eid] == want)
    first_id = max(sg.edge_ids()) + 1
    red = redirect(sg, cycles, family, selections, first_id, key=lambda eid: marked[eid])
    gp, xp = red.graph, red.x
    marked_p = {eid: marked[red.source[eid]] for eid in xp}
    fp = {eid: (xp[eid] if marked_p[eid] else Fraction(0)) for eid in xp}

    stage = "backbone-cover"
    for a in red.aux:
        check(sum(xp[e.id] for e in gp.in_edges(a)) == half, stage, f"aux vertex {a} does not carry 1/2")
        f_aux = sum((fp[e.id] for e in gp.in_edges(a)), Fraction(0))
        check(f_aux in (0, half), stage, f"aux vertex {a} has mixed witness flow")
    off_backbone = frozenset(v for v in range(gp.n) if v not in bb)
    for v in off_backbone:
        fo = sum((fp[e.id] for e in gp.out_edges(v)), Fraction(0))
        fi = sum((fp[e.id] for e in gp.in_edges(v)), Fraction(0))
        check(fo >= fi, stage, f"redirected witness flow unbalanced at {v}")

    wp = {eid: i.weight(sg.edge(red.source[eid]).preimage) for eid in xp}
    z_bar, f_bar = tu_round(gp, wp, {k: 2 * v for k, v in xp.items()}, {k: 2 * v for k, v in fp.items()}, off_backbone)

    z_star: dict[int, int] = {}
    f_star: dict[int, int] = {}
    enter_at, leave_at, raised = {}, {}, {}
    for e in gp.edges:
        if not z_bar[e.id]:
            continue
        orig = g.edge(sg.edge(red.source[e.id]).preimage)
        z_star[orig.id] = z_star.get(orig.id, 0) + z_bar[e.id]
        if f_bar[e.id]:
            f_star[orig.id] = f_star.get(orig.id, 0) + f_bar[e.id]
        if e.head in red.aux:
            check(e.head not in enter_at, stage, "aux vertex entered twice")
            enter_at[e.head] = orig.head
            raised[e.head] = f_bar[e.id] == 1
        if e.tail in red.aux:
            leave_at[e.tail] = orig.tail
    for j, a in enumerate(red.aux):
        check(a in enter_at and a in leave_at, stage, f"aux vertex {a} unused")
        u, v = enter_at[a], leave_at[a]
        if u == v:
            continue
        got = shortest_path(g, i.weights, u, v, family[j])
        check(got is not None, stage, f"no path inside set {j}")
        for eid in got[0]:
            z_star[eid] = z_star.get(eid, 0) + 1
            if raised[a]:
                f_star[eid] = f_star.get(eid, 0) + 1
    out = EdgeMultiset(z_star)

    check(out.is_eulerian(g), stage, "output is not Eulerian")
    check(i.cost(out) <= 2 * i.total_value() + i.lb_bar(backbone), stage, "(a) cost bound fails")
    for j, u in enumerate(family):
        check(out.crossing_in(g, u) >= 1, stage, f"(b) set {j} is not entered")
    for v in range(i.n):
        if sum((i.x[e.id] for e in g.in_edges(v)), Fraction(0)) == 1:
            check(out.in_degree(g, v) <= 4, stage, f"(c) vertex {v} has in-degree above 4")
    problems = witness_problems(g, tags, out, f_star, bb)
    check(not problems, stage, "witness: " + "; ".join(problems))
    check(verify_witnessed_components(out, f_star, i, backbone) is None, stage, "(d) crossing walk misses the backbone")
    return out, f_star


def source_components(i: Instance, backbone: Subtour, partition: Sequence[frozenset[int]]) -> list[frozenset[int]]:
    """One strongly connected source piece per class, inside its smallest meeting laminar set."""
    candidates = sorted(
        list(i.non_singleton_sets().values()) + [frozenset(range(i.n))],
        key=lambda s: (len(s), sorted(s)),
    )
    family = []
    for c in partition:
        s = next(s for s in candidates if s & c)
        family.append(scc_topological(i.g, c & s)[0])
    return family


def solve_spc_vertebrate(i: Instance, backbone: Subtour, partition: Sequence) -> EdgeMultiset:
    if not backbone.vertices:
        return solve_spc_singleton(i, partition)
    classes = [frozenset(c) for c in partition]
    covered: set[int] = set()
    for c in classes:
        if not c or c & covered or c & backbone.vertices:
            raise InvalidPartition("classes must be nonempty, disjoint and avoid the backbone")
        if not is_strongly_connected(i.g, c):
            raise InvalidPartition(f"class {sorted(c)} does not induce a strongly connected graph")
        covered |= c
    if covered | backbone.vertices != set(range(i.n)):
        raise InvalidPartition("partition does not cover the vertices off the backbone")
    for s in i.non_singleton_sets().values():
        if not s & backbone.vertices:
            raise SolveError(f"backbone misses laminar set {sorted(s)}")

    family = source_components(i, backbone, classes)
    out, _ = solve_main_lemma(i, backbone, family)

    stage = "spc-vertebrate"
    for j, c in enumerate(classes):
        check(out.crossing_out(i.g, c) >= 1, stage, f"class {j} is not crossed")
    beta = 2 * i.total_value() + i.lb_bar(backbone)
    touching = Fraction(0)
    for t in eulerian_components(i.g, out):
        if t.vertices & backbone.vertices:
            touching += i.cost(t.edges)
        else:
            check(i.cost(t.edges) <= 4 * i.lb_set(t.vertices), stage, "walk off the backbone is heavier than 4 lb")
    check(touching <= beta, stage, "walks meeting the backbone are too heavy")
    return out
