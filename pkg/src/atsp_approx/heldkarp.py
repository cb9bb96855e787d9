"""Held-Karp relaxation by cut generation, and a laminar optimal dual."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import SolveError, check
from .flow import min_st_cut
from .graph import Digraph, crosses, is_strongly_connected
from .lp import LinearProgram, SimplexState

VertexSet = frozenset[int]


@dataclass(frozen=True)
class HeldKarpSolution:
    x: dict[int, Fraction]
    value: Fraction
    cuts: tuple[VertexSet, ...]
    alpha: dict[int, Fraction]
    cut_dual: dict[VertexSet, Fraction]
    pivots: int = 0
    rounds: int = 0


@dataclass(frozen=True)
class DualSolution:
    alpha: dict[int, Fraction]
    y: dict[int, Fraction]
    family: dict[int, VertexSet]
    uncross_steps: int = 0

    def objective(self) -> Fraction:
        return 2 * sum(self.y.values(), Fraction(0))


def cut_value(g: Digraph, x: Mapping[int, Fraction], s) -> Fraction:
    """x(delta(S)) counting both directions."""
    s = set(s)
    return sum((x.get(e.id, 0) for e in g.edges if (e.tail in s) != (e.head in s)), Fraction(0))


def _violated_cuts(x: Mapping[int, Fraction], g: Digraph) -> list[tuple[Fraction, VertexSet]]:
    found = []
    for t in range(1, g.n):
        for s, sink in ((0, t), (t, 0)):
            value, side = min_st_cut(g, x, s, sink)
            if value < 1:
                found.append((value, side))
    found.sort(key=lambda p: (p[0], sorted(p[1])))
    return found


def separate(x: Mapping[int, Fraction], g: Digraph) -> VertexSet | None:
    """A set S with x(out(S)) < 1, or None if every cut is crossed enough."""
    found = _violated_cuts(x, g)
    return found[0][1] if found else None


def _canonical(s: VertexSet, n: int) -> VertexSet:
    # S and its complement give the same constraint; keep the side holding 0.
    return s if 0 in s else frozenset(range(n)) - s


def solve_held_karp(g: Digraph, w: Mapping[int, Fraction]) -> HeldKarpSolution:
    if g.n < 2:
        raise SolveError("Held-Karp needs at least two vertices")
    if not is_strongly_connected(g):
        raise SolveError("no feasible tour: graph is not strongly connected")
    lp = LinearProgram("min")
    col = {}
    for e in g.edges:
        col[e.id] = lp.add_variable(cost=w[e.id])
    conservation = []
    for v in range(g.n):
        coeffs: dict[int, int] = {}
        for e in g.out_edges(v):
            coeffs[col[e.id]] = coeffs.get(col[e.id], 0) + 1
        for e in g.in_edges(v):
            coeffs[col[e.id]] = coeffs.get(col[e.id], 0) - 1
        conservation.append(lp.add_row(coeffs, "=", 0))

    def cut_row(s: VertexSet) -> dict[int, int]:
        return {col[e.id]: 1 for e in g.edges if crosses(e, s)}

    cut_rows: dict[int, VertexSet] = {}
    seen: set[VertexSet] = set()
    for v in range(g.n):
        s = frozenset([v])
        key = _canonical(s, g.n)
        if key in seen:
            continue
        seen.add(key)
        cut_rows[lp.add_row(cut_row(s), ">=", 2)] = s
    state = SimplexState(lp)
    outcome = state.outcome
    generated: list[VertexSet] = []
    rounds = 0
    while True:
        check(outcome.status == "optimal", "heldkarp", f"LP status {outcome.status}")
        x = {e.id: outcome.primal[col[e.id]] for e in g.edges}
        fresh = []
        for _, s in _violated_cuts(x, g):
            key = _canonical(s, g.n)
            if key not in seen:
                seen.add(key)
                fresh.append(s)
        if not fresh:
            break
        rounds += 1
        for s in fresh:
            k = len(state.lp.rows)
            outcome = state.add_row(cut_row(s), ">=", 2)
            cut_rows[k] = s
            generated.append(s)
    alpha = {v: outcome.dual[conservation[v]] for v in range(g.n)}
    cut_dual: dict[VertexSet, Fraction] = {}
    for k, s in cut_rows.items():
        y = outcome.dual[k]
        if y:
            cut_dual[s] = cut_dual.get(s, Fraction(0)) + y
    return HeldKarpSolution(x, outcome.objective, tuple(generated), alpha, cut_dual, outcome.pivots, rounds)


def is_crossing(a: VertexSet, b: VertexSet) -> bool:
    return bool(a & b) and bool(a - b) and bool(b - a)


def is_laminar(sets) -> bool:
    sets = list(sets)
    return not any(is_crossing(a, b) for i, a in enumerate(sets) for b in sets[i + 1:])


def uncross_step(y: Mapping[VertexSet, Fraction], a: VertexSet, b: VertexSet) -> dict[VertexSet, Fraction]:
    """Shift the smaller of y_A, y_B onto A-B and B-A."""
    if not is_crossing(a, b):
        raise ValueError("not a crossing pair")
    ya, yb = y.get(a, Fraction(0)), y.get(b, Fraction(0))
    if ya <= 0 or yb <= 0:
        raise ValueError("both sets must carry positive dual value")
    eps = min(ya, yb)
    out = dict(y)
    out[a] = ya - eps
    out[b] = yb - eps
    for s in (a - b, b - a):
        out[s] = out.get(s, Fraction(0)) + eps
    return {s: v for s, v in out.items() if v}


def _potential(y: Mapping[VertexSet, Fraction]) -> Fraction:
    return sum((len(s) * v for s, v in y.items()), Fraction(0))


def _first_crossing_pair(y: Mapping[VertexSet, Fraction]):
    order = sorted(y, key=lambda s: (-len(s), sorted(s)))
    for i, a in enumerate(order):
        for b in order[i + 1:]:
            if is_crossing(a, b):
                return a, b
    return None


def dual_slack(g: Digraph, w, alpha, y_by_set, e) -> Fraction:
    load = sum((v for s, v in y_by_set.items() if crosses(e, s)), Fraction(0))
    return w[e.id] - load - alpha[e.tail] + alpha[e.head]


def extract_laminar_dual(g: Digraph, w: Mapping[int, Fraction], hk: HeldKarpSolution) -> DualSolution:
    y = {s: v for s, v in hk.cut_dual.items() if v}
    steps = 0
    while True:
        pair = _first_crossing_pair(y)
        if pair is None:
            break
        a, b = pair
        before = _potential(y)
        eps = min(y[a], y[b])
        y = uncross_step(y, a, b)
        steps += 1
        after = _potential(y)
        check(before - after == 2 * len(a & b) * eps and after < before,
              "uncross", "potential did not drop by the expected amount")
    stage = "laminar-dual"
    check(is_laminar(y), stage, "family is not laminar")
    check(2 * sum(y.values(), Fraction(0)) == hk.value, stage, "dual objective differs from primal")
    for s in y:
        check(cut_value(g, hk.x, s) == 2, stage, f"support set {sorted(s)} is not tight")
    for e in g.edges:
        slack = dual_slack(g, w, hk.alpha, y, e)
        check(slack >= 0, stage, f"dual infeasible on edge {e.id}")
        if hk.x[e.id] > 0:
            check(slack == 0, stage, f"complementary slackness fails on edge {e.id}")
    order = sorted(y, key=lambda s: (-len(s), sorted(s)))
    family = {k: s for k, s in enumerate(order)}
    return DualSolution(dict(hk.alpha), {k: y[s] for k, s in family.items()}, family, steps)
