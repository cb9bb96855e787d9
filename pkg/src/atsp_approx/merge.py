"""From local subtour covers to one tour.

Given a backbone B and an oracle that covers any partition of the
vertices off B with light closed walks, repeatedly merge closed walks
into a growing collection until it becomes a tour. A bookkeeping check
after every round detects rounds where too much lower bound was merged
into one initial walk; the run then restarts from a richer set of
initial walks, which raises a bounded potential.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .errors import InvariantViolation, check
from .graph import EdgeMultiset, Subtour, as_subtour, distances_from, eulerian_components, shortest_path
from .instance import Instance, fraction_text

INF = math.inf
Oracle = Callable[[Instance, Subtour, list], EdgeMultiset]


class OracleContractBreach(RuntimeError):
    def __init__(self, message: str, subtour: Subtour | None = None):
        super().__init__(message)
        self.subtour = subtour


@dataclass
class MergeState:
    instance: Instance
    backbone: Subtour
    alpha: Fraction
    beta: Fraction
    eps: Fraction
    inits: list[Subtour] = field(default_factory=list)
    tstar: EdgeMultiset = field(default_factory=EdgeMultiset)
    reinits: int = 0
    rounds: int = 0
    trace: Callable[[dict], None] | None = None
    _dist: dict[int, dict[int, Fraction]] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def lb_bar(self) -> Fraction:
        return self.instance.lb_bar(self.backbone)

    def lb_eps_vertices(self, vertices) -> Fraction:
        vertices = set(vertices)
        return self.instance.lb_set(vertices) + self.eps * Fraction(len(vertices), self.n) * self.lb_bar

    def potential(self) -> Fraction:
        return sum((lb_eps(self, t) ** 2 for t in self.inits), Fraction(0))

    def init_vertex_sets(self) -> list[frozenset[int]]:
        return [self.backbone.vertices] + [t.vertices for t in self.inits]

    def init_lb_eps(self, j) -> Fraction:
        if j == INF:
            return Fraction(0)
        if j == 0:
            return lb_eps(self, self.backbone)
        return lb_eps(self, self.inits[j - 1])

    def distances(self, source: int) -> dict[int, Fraction]:
        if source not in self._dist:
            self._dist[source] = distances_from(self.instance.g, self.instance.weights, source)
        return self._dist[source]

    def emit(self, record: dict) -> None:
        if self.trace is not None:
            self.trace(record)


@dataclass(frozen=True)
class MergeResult:
    tour: Subtour
    weight: Fraction
    bound: Fraction
    reinits: int
    rounds: int


def lb_eps(state: MergeState, t: Subtour) -> Fraction:
    return state.lb_eps_vertices(t.vertices)


def low(state: MergeState, t) -> float | int:
    vertices = t.vertices if isinstance(t, Subtour) else frozenset(t)
    for j, s in enumerate(state.init_vertex_sets()):
        if s & vertices:
            return j
    return INF


def light_cycle_search(state: MergeState, t, bound: Fraction) -> Subtour | None:
    """Cheapest cycle through an edge leaving V(T), if it weighs at most ``bound``."""
    i = state.instance
    inside = t.vertices if isinstance(t, Subtour) else frozenset(t)
    best = None
    for e in i.g.delta_out(inside):
        back = state.distances(e.head).get(e.tail)
        if back is None:
            continue
        total = i.weight(e.id) + back
        if best is None or total < best[0] or (total == best[0] and e.id < best[1].id):
            best = (total, e)
    if best is None or best[0] > bound:
        return None
    e = best[1]
    path, _ = shortest_path(i.g, i.weights, e.head, e.tail)
    return as_subtour(i.g, EdgeMultiset((e.id,) + tuple(path)))


def _component_count(state: MergeState, f: EdgeMultiset) -> int:
    comps = eulerian_components(state.instance.g, f)
    covered = set().union(*(c.vertices for c in comps)) if comps else set()
    return len(comps) + state.n - len(covered)


def _is_tour(state: MergeState, f: EdgeMultiset) -> bool:
    comps = eulerian_components(state.instance.g, f)
    return len(comps) == 1 and len(comps[0].vertices) == state.n


def _digest(f: EdgeMultiset) -> str:
    return hashlib.sha256(json.dumps(sorted(f.items())).encode()).hexdigest()[:16]


def _check_oracle(state: MergeState, classes, f: EdgeMultiset) -> list[Subtour]:
    i = state.instance
    g = i.g
    for eid in f:
        if not g.has_edge(eid):
            raise OracleContractBreach(f"oracle used unknown edge {eid}")
    if not f.is_eulerian(g):
        raise OracleContractBreach("oracle output is not Eulerian")
    for c in classes:
        if f.crossing_out(g, c) < 1:
            raise OracleContractBreach(f"oracle output does not cross class {sorted(c)}")
    subs = eulerian_components(g, f)
    touching = Fraction(0)
    for t in subs:
        if t.vertices & state.backbone.vertices:
            touching += i.cost(t.edges)
        elif i.cost(t.edges) > state.alpha * i.lb_set(t.vertices):
            raise OracleContractBreach("closed walk off the backbone is not light", t)
    if touching > state.beta:
        raise OracleContractBreach("closed walks meeting the backbone are too heavy")
    return subs


def _merge_pass(state: MergeState, oracle: Oracle):
    """One merge procedure from the current initial walks.

    Returns None on success (state.tstar is a tour), otherwise the data
    needed to reinitialize: (round, index, offending family).
    """
    i = state.instance
    g = i.g
    b = state.backbone
    tstar = b.edges
    for t in state.inits:
        tstar = tstar + t.edges
    marks: dict = {}
    nonempty_round: dict[int, int] = {}
    r = 0
    while not _is_tour(state, tstar):
        r += 1
        state.rounds += 1
        comps = eulerian_components(g, tstar)
        classes = []
        covered = set(b.vertices)
        for c in comps:
            if c.vertices & b.vertices:
                check(c.vertices == b.vertices and c.edges == b.edges, "merge",
                      "backbone merged before the final round")
                continue
            classes.append(c.vertices)
            covered |= c.vertices
        classes += [frozenset([v]) for v in range(state.n) if v not in covered]
        f = oracle(i, b, classes)
        subs = _check_oracle(state, classes, f)
        subs = [t for t in subs if not any(t.vertices <= c.vertices for c in comps)]

        cycles: list[tuple[Subtour, object]] = []
        while True:
            union = tstar
            for t in subs:
                union = union + t.edges
            for c, _ in cycles:
                union = union + c.edges
            pool = eulerian_components(g, union)
            chosen = max(pool, key=lambda t: (low(state, t), i.lb_set(t.vertices), -t.ident))
            j = low(state, chosen)
            bound = 3 * state.alpha * state.init_lb_eps(j)
            c = light_cycle_search(state, chosen, bound)
            if c is None:
                break
            cycles.append((c, j))

        f_round = [t for t in subs if t.vertices <= chosen.vertices]
        x_round = [(c, j) for c, j in cycles if c.vertices <= chosen.vertices]
        grown = tstar
        for t in f_round:
            grown = grown + t.edges
        for c, _ in x_round:
            grown = grown + c.edges
        check(_component_count(state, grown) < _component_count(state, tstar), "merge",
              "update phase did not reduce the number of components")

        groups: dict = {}
        for t in f_round:
            groups.setdefault(low(state, t), []).append(t)
        violated = None
        for j in range(1, len(state.inits) + 1):
            if j in groups and i.lb_set(_vertices(groups[j])) > 3 * state.init_lb_eps(j):
                violated = j
                break
        if violated is None and INF in groups and i.lb_set(_vertices(groups[INF])) > 0:
            violated = INF
        state.emit({
            "event": "round",
            "round": r,
            "partition": [sorted(c) for c in classes],
            "oracle_digest": _digest(f),
            "cycles_added": [list(c.walk) for c, _ in x_round],
            "selected_low": None if j == INF else j,
        })
        if violated is not None:
            return r, violated, groups[violated]
        for j in groups:
            if j != INF and j >= 1:
                check(j not in nonempty_round, "merge", f"offending family for index {j} reappeared")
                nonempty_round[j] = r
        for c, j in x_round:
            if i.cost(c.edges) > 0:
                check(j not in marks, "merge", f"second positive cycle marked by index {j}")
                marks[j] = c
        tstar = grown
    state.tstar = tstar
    return None


def _vertices(ts: Sequence[Subtour]) -> frozenset[int]:
    out: set[int] = set()
    for t in ts:
        out |= t.vertices
    return frozenset(out)


def reinitialize(state: MergeState, r: int, index, family: Sequence[Subtour]) -> list[Subtour]:
    i = state.instance
    g = i.g
    before = state.potential()
    inits = list(state.inits)
    if index == INF:
        pick = max(family, key=lambda t: (lb_eps(state, t), -t.ident))
        new = inits + [pick]
    else:
        fam_v = _vertices(family)
        hit = [j for j in range(1, len(inits) + 1) if inits[j - 1].vertices & fam_v]
        check(index in hit, "reinit", "offending family misses its own initial walk")
        others = [j for j in hit if j != index]
        outside = {j: state.lb_eps_vertices(inits[j - 1].vertices - fam_v) for j in others}
        shared = {j: state.lb_eps_vertices(inits[j - 1].vertices & fam_v) for j in others}
        others.sort(key=lambda j: (-(outside[j] / shared[j]), j))
        need = sum(outside.values(), Fraction(0)) / 3 - lb_eps(state, inits[index - 1])
        prefix: list[int] = []
        acc = Fraction(0)
        for j in others:
            if acc >= need:
                break
            prefix.append(j)
            acc += outside[j]
        merged = inits[index - 1].edges
        for t in family:
            merged = merged + t.edges
        for j in prefix:
            merged = merged + inits[j - 1].edges
        new = [as_subtour(g, merged)] + [inits[j - 1] for j in range(1, len(inits) + 1) if j not in hit]
    new.sort(key=lambda t: (-lb_eps(state, t), t.ident))

    stage = "reinit"
    seen = set(state.backbone.vertices)
    for t in new:
        check(not (t.vertices & seen), stage, "initial walks overlap")
        seen |= t.vertices
        check(i.cost(t.edges) <= 3 * state.alpha * lb_eps(state, t), stage, "initial walk is too heavy")
    state.inits = new
    gain = state.potential() - before
    check(gain >= state.eps ** 2 / (3 * state.n ** 2) * state.lb_bar ** 2, stage, "potential gain too small")
    state.emit({"event": "reinit", "round": r, "index": None if index == INF else index,
                "inits": [sorted(t.vertices) for t in new]})
    return new


def reinit_limit(n: int, eps: Fraction) -> Fraction:
    return 3 * n * n * (1 + eps) ** 2 / eps ** 2


def weight_bound(i: Instance, backbone: Subtour, alpha, beta, eps) -> Fraction:
    return 9 * (1 + eps) * alpha * i.lb_bar(backbone) + beta + i.cost(backbone.edges)


def run(
    i: Instance,
    backbone: Subtour,
    oracle: Oracle,
    alpha,
    beta,
    eps,
    trace: Callable[[dict], None] | None = None,
) -> MergeResult:
    alpha, beta, eps = Fraction(alpha), Fraction(beta), Fraction(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    bound = weight_bound(i, backbone, alpha, beta, eps)
    if len(backbone.vertices) == i.n:
        return MergeResult(backbone, i.cost(backbone.edges), bound, 0, 0)
    state = MergeState(i, backbone, alpha, beta, eps, trace=trace)
    limit = reinit_limit(i.n, eps)
    while True:
        failed = _merge_pass(state, oracle)
        if failed is None:
            break
        reinitialize(state, *failed)
        state.reinits += 1
        check(state.reinits <= limit, "merge", "too many reinitializations")
    tour = as_subtour(i.g, state.tstar)
    weight = i.cost(tour.edges)
    check(weight <= bound, "merge", f"tour weight {weight} exceeds {bound}")
    state.emit({"event": "done", "weight": fraction_text(weight), "bound": fraction_text(bound),
                "reinits": state.reinits, "reinit_limit": fraction_text(limit), "n": i.n,
                "alpha": fraction_text(alpha), "beta": fraction_text(beta), "epsilon": fraction_text(eps),
                "lb_bar": fraction_text(i.lb_bar(backbone)),
                "backbone_weight": fraction_text(i.cost(backbone.edges))})
    return MergeResult(tour, weight, bound, state.reinits, state.rounds)
