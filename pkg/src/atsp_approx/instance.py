"""Laminarly-weighted ATSP instances.

An instance is a digraph carrying a positive circulation ``x`` together
with a laminar family of tight vertex sets, each with a positive value
``y``. An edge weighs the total ``y`` of the sets it crosses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import SolveError
from .graph import Digraph, Edge, EdgeMultiset, Subtour, crosses, is_strongly_connected
from .heldkarp import DualSolution, HeldKarpSolution, cut_value, is_laminar, separate

VertexSet = frozenset[int]


@dataclass(frozen=True)
class LaminarForest:
    sets: dict[int, VertexSet]
    y: dict[int, Fraction]
    parent: dict[int, int | None] = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, sets: Mapping[int, Iterable[int]], y: Mapping[int, Fraction]) -> "LaminarForest":
        clean = {k: frozenset(s) for k, s in sorted(sets.items())}
        parent: dict[int, int | None] = {}
        for k, s in clean.items():
            best = None
            for j, r in clean.items():
                if j != k and s < r and (best is None or len(r) < len(clean[best])):
                    best = j
            parent[k] = best
        return cls(clean, {k: Fraction(y[k]) for k in clean}, parent)

    def ids(self) -> list[int]:
        return list(self.sets)

    def children(self, k: int) -> list[int]:
        return [j for j, p in self.parent.items() if p == k]

    def maximal(self) -> list[int]:
        return [k for k, p in self.parent.items() if p is None]

    def strictly_inside(self, s: VertexSet) -> list[int]:
        return [k for k, r in self.sets.items() if r < s]

    def non_singletons(self) -> list[int]:
        return [k for k, r in self.sets.items() if len(r) >= 2]


class Instance:
    """Immutable laminarly-weighted instance ``(g, laminar, x)``."""

    def __init__(self, g: Digraph, laminar: LaminarForest, x: Mapping[int, Fraction]):
        self.g = g
        self.laminar = laminar
        self.x = {e.id: Fraction(x[e.id]) for e in g.edges}
        self.weights = {
            e.id: sum((laminar.y[k] for k, s in laminar.sets.items() if crosses(e, s)), Fraction(0))
            for e in g.edges
        }
        self.vertex_y = {next(iter(s)): laminar.y[k] for k, s in laminar.sets.items() if len(s) == 1}
        self._value_cache: dict[VertexSet, Fraction] = {}

    @property
    def n(self) -> int:
        return self.g.n

    def weight(self, eid: int) -> Fraction:
        return self.weights[eid]

    def cost(self, f: Mapping[int, int]) -> Fraction:
        return sum((self.weights[eid] * k for eid, k in f.items()), Fraction(0))

    def value(self, s: Iterable[int]) -> Fraction:
        s = frozenset(s)
        got = self._value_cache.get(s)
        if got is None:
            got = 2 * sum((self.laminar.y[k] for k in self.laminar.strictly_inside(s)), Fraction(0))
            self._value_cache[s] = got
        return got

    def total_value(self) -> Fraction:
        return self.value(range(self.n))

    def lb(self, v: int) -> Fraction:
        return 2 * self.vertex_y.get(v, Fraction(0))

    def lb_set(self, vertices: Iterable[int]) -> Fraction:
        return sum((self.lb(v) for v in set(vertices)), Fraction(0))

    def lb_bar(self, backbone: Subtour | Iterable[int] | None) -> Fraction:
        covered = backbone.vertices if isinstance(backbone, Subtour) else set(backbone or ())
        return self.lb_set(v for v in range(self.n) if v not in covered)

    def s_in(self, s: Iterable[int]) -> VertexSet:
        return frozenset(e.head for e in self.g.delta_in(s))

    def s_out(self, s: Iterable[int]) -> VertexSet:
        return frozenset(e.tail for e in self.g.delta_out(s))

    def is_singleton(self) -> bool:
        return all(len(s) == 1 for s in self.laminar.sets.values())

    def non_singleton_sets(self) -> dict[int, VertexSet]:
        return {k: s for k, s in self.laminar.sets.items() if len(s) >= 2}

    def __repr__(self) -> str:
        return f"Instance(n={self.n}, m={len(self.g.edges)}, sets={len(self.laminar.sets)})"

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": [
                {"id": e.id, "tail": e.tail, "head": e.head, "x": fraction_text(self.x[e.id])}
                for e in sorted(self.g.edges, key=lambda e: e.id)
            ],
            "laminar": [
                {"id": k, "vertices": sorted(s), "y": fraction_text(self.laminar.y[k])}
                for k, s in self.laminar.sets.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Instance":
        g = Digraph(int(data["n"]), [Edge(int(e["id"]), int(e["tail"]), int(e["head"])) for e in data["edges"]])
        x = {int(e["id"]): parse_fraction(e["x"]) for e in data["edges"]}
        sets = {int(r["id"]): r["vertices"] for r in data["laminar"]}
        y = {int(r["id"]): parse_fraction(r["y"]) for r in data["laminar"]}
        return cls(g, LaminarForest.build(sets, y), x)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


def fraction_text(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(text) -> Fraction:
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


# Functional aliases -------------------------------------------------------

def induced_weight(i: Instance, eid: int) -> Fraction:
    return i.weight(eid)


def cost(i: Instance, f: Mapping[int, int]) -> Fraction:
    return i.cost(f)


def value(i: Instance, s: Iterable[int]) -> Fraction:
    return i.value(s)


def total_value(i: Instance) -> Fraction:
    return i.total_value()


def lb(i: Instance, v: int) -> Fraction:
    return i.lb(v)


def lb_set(i: Instance, vertices: Iterable[int]) -> Fraction:
    return i.lb_set(vertices)


def lb_bar(i: Instance, backbone) -> Fraction:
    return i.lb_bar(backbone)


def s_in(i: Instance, s) -> VertexSet:
    return i.s_in(s)


def s_out(i: Instance, s) -> VertexSet:
    return i.s_out(s)


def is_singleton(i: Instance) -> bool:
    return i.is_singleton()


def out_flow(i: Instance, s) -> Fraction:
    return sum((i.x[e.id] for e in i.g.delta_out(s)), Fraction(0))


def in_flow(i: Instance, s) -> Fraction:
    return sum((i.x[e.id] for e in i.g.delta_in(s)), Fraction(0))


def verify_instance(i: Instance) -> list[str]:
    """All violated instance invariants; an empty list means the instance is valid."""
    problems = []
    g = i.g
    for e in g.edges:
        if i.x[e.id] <= 0:
            problems.append(f"x: edge {e.id} has non-positive value")
    for v in range(g.n):
        if out_flow(i, [v]) != in_flow(i, [v]):
            problems.append(f"circulation: imbalance at vertex {v}")
    if g.n >= 2:
        if not is_strongly_connected(g):
            problems.append("connectivity: graph not strongly connected")
        elif not problems and separate(i.x, g) is not None:
            problems.append("cuts: some cut has x-value below 2")
    sets = i.laminar.sets
    if not is_laminar(sets.values()):
        problems.append("laminar: family has crossing sets")
    for k, s in sets.items():
        if not s or len(s) >= g.n or not s <= set(range(g.n)):
            problems.append(f"laminar: set {k} is empty, improper or out of range")
            continue
        if i.laminar.y[k] <= 0:
            problems.append(f"laminar: set {k} has non-positive y")
        if out_flow(i, s) != 1 or in_flow(i, s) != 1:
            problems.append(f"tightness: set {k} is not tight")
    return problems


def build_instance(g: Digraph, w: Mapping[int, Fraction], hk: HeldKarpSolution, dual: DualSolution) -> Instance:
    kept = [e for e in g.edges if hk.x[e.id] > 0]
    sub = Digraph(g.n, kept)
    laminar = LaminarForest.build(dual.family, dual.y)
    inst = Instance(sub, laminar, {e.id: hk.x[e.id] for e in kept})
    for e in kept:
        shifted = w[e.id] - dual.alpha[e.tail] + dual.alpha[e.head]
        if shifted != inst.weight(e.id):
            raise SolveError(f"inconsistent primal/dual: edge {e.id} shifted weight {shifted} != {inst.weight(e.id)}")
    if inst.total_value() != hk.value:
        raise SolveError("inconsistent primal/dual: instance value differs from the relaxation value")
    return inst


def cost_by_crossings(i: Instance, f: Mapping[int, int]) -> Fraction:
    """Cost as sum over sets of y times the number of crossing edges of f."""
    total = Fraction(0)
    for k, s in i.laminar.sets.items():
        hits = sum(m for eid, m in f.items() if crosses(i.g.edge(eid), s))
        total += i.laminar.y[k] * hits
    return total


__all__ = [
    "Instance", "LaminarForest", "build_instance", "verify_instance", "induced_weight", "cost",
    "value", "total_value", "lb", "lb_set", "lb_bar", "s_in", "s_out", "is_singleton",
    "fraction_text", "parse_fraction", "cut_value", "cost_by_crossings", "EdgeMultiset",
]
