"""Seeded instance generators and the hand-built test gadgets."""

from __future__ import annotations

import random
from fractions import Fraction

from .graph import Digraph, Edge, EdgeMultiset, Subtour, as_subtour, is_strongly_connected, shortest_path
from .instance import Instance, LaminarForest

KINDS = ("random", "complete", "node-weighted", "two-weight")
GADGETS = ("fig2-contraction", "series-scc", "single-set-vertebrate", "nested-irreducible")


def _complete(n: int, weight) -> tuple[Digraph, dict[int, Fraction]]:
    edges, w = [], {}
    for u in range(n):
        for v in range(n):
            if u != v:
                eid = len(edges)
                edges.append(Edge(eid, u, v))
                w[eid] = Fraction(weight(u, v))
    return Digraph(n, edges), w


def random_digraph(n: int, seed: int, density: float = 0.6, max_weight: int = 20):
    """Random strongly connected digraph: a random Hamiltonian cycle plus random extra arcs."""
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    arcs = {(order[k], order[(k + 1) % n]) for k in range(n)} if n > 1 else set()
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < density:
                arcs.add((u, v))
    edges, w = [], {}
    for eid, (u, v) in enumerate(sorted(arcs)):
        edges.append(Edge(eid, u, v))
        w[eid] = Fraction(rng.randint(0, max_weight))
    return Digraph(n, edges), w


def generate(kind: str, n: int, seed: int) -> tuple[Digraph, dict[int, Fraction]]:
    if kind in GADGETS:
        inst = gadget(kind)[0]
        return inst.g, dict(inst.weights)
    if n < 2:
        raise ValueError("generators need n >= 2")
    rng = random.Random(seed)
    if kind == "random":
        g, w = random_digraph(n, seed)
    elif kind == "complete":
        g, w = _complete(n, lambda u, v: rng.randint(0, 20))
    elif kind == "node-weighted":
        f = [rng.randint(0, 10) for _ in range(n)]
        g, w = _complete(n, lambda u, v: f[u] + f[v])
    elif kind == "two-weight":
        g, w = _complete(n, lambda u, v: rng.choice((1, 2)))
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    assert is_strongly_connected(g)
    return g, w


def _instance(n: int, arcs, sets) -> Instance:
    edges = [Edge(k, u, v) for k, (u, v, _) in enumerate(arcs)]
    x = {k: Fraction(val) for k, (_, _, val) in enumerate(arcs)}
    ids = {k: frozenset(s) for k, (s, _) in enumerate(sets)}
    ys = {k: Fraction(y) for k, (_, y) in enumerate(sets)}
    return Instance(Digraph(n, edges), LaminarForest.build(ids, ys), x)


def contraction_gadget() -> tuple[Instance, dict[str, int]]:
    """Tight set S = {a, c, p, q} entered only at a and left only at q.

    Inside S the chain a -> c -> p -> q crosses {a}, {c}, {p, q}, {q};
    the entry and exit masses make the worst traversal cost exactly 22.
    """
    names = {"a": 0, "c": 1, "p": 2, "q": 3, "o1": 4, "o2": 5}
    a, c, p, q, o1, o2 = (names[k] for k in ("a", "c", "p", "q", "o1", "o2"))
    half = Fraction(1, 2)
    arcs = [
        (a, c, 1), (c, p, 1), (p, q, 1),
        (o1, a, half), (o2, a, half), (q, o1, half), (q, o2, half), (o1, o2, half), (o2, o1, half),
    ]
    sets = [
        ({a}, 2), ({c}, 2), ({p, q}, 4), ({q}, 3), ({a, c, p, q}, 1), ({o1}, 1), ({o2}, 1),
    ]
    return _instance(6, arcs, sets), names


def series_scc() -> tuple[Instance, dict[str, int]]:
    """Tight set whose induced graph splits into two strongly connected pieces in series."""
    names = {"o": 0, "o'": 1, "a1": 2, "a2": 3, "b1": 4, "b2": 5}
    o, o2, a1, a2, b1, b2 = range(6)
    half = Fraction(1, 2)
    first = [o, o2, a1, a2, b1, b2]
    second = [o2, o, a2, a1, b2, b1]
    arcs = []
    for cyc in (first, second):
        arcs += [(cyc[k], cyc[(k + 1) % 6], half) for k in range(6)]
    sets = [({v}, 1) for v in range(6)]
    sets += [({a1, a2, b1, b2}, 2), ({a1, a2}, 1)]
    return _instance(6, arcs, sets), names


def single_set_vertebrate() -> tuple[Instance, Subtour]:
    """One non-singleton tight set and a backbone circling inside it."""
    inst, names = series_scc()
    keep = {k: s for k, s in inst.laminar.sets.items() if len(s) == 1 or len(s) == 4}
    inst = Instance(inst.g, LaminarForest.build(keep, {k: inst.laminar.y[k] for k in keep}), inst.x)
    a1, a2 = names["a1"], names["a2"]
    loop = [e.id for e in inst.g.edges if {e.tail, e.head} == {a1, a2}]
    return inst, as_subtour(inst.g, EdgeMultiset(loop))


def nested_irreducible(chain=(10, 10, 10), side=(1, 1, 1)) -> tuple[Instance, dict[str, int]]:
    """Tight set S whose cheapest entry-to-exit chain skips a nested tight set R.

    R = {r1, r2} hangs off the chain as a side loop at c, so a backbone built from
    the chain leaves R unvisited and the solver has to recurse into it.
    ``chain`` gives y for {a}, {p, q}, {q}; ``side`` gives y for R, {r1}, {r2}.
    The worst traversal of S costs 2 * sum(chain) and value(S) adds 2 * sum(side).
    """
    names = {"a": 0, "c": 1, "p": 2, "q": 3, "r1": 4, "r2": 5, "o1": 6, "o2": 7}
    a, c, p, q, r1, r2, o1, o2 = range(8)
    half = Fraction(1, 2)
    arcs = [
        (a, c, 1), (c, p, 1), (p, q, 1), (c, r1, 1), (r1, r2, 1), (r2, c, 1),
        (o1, a, half), (o2, a, half), (q, o1, half), (q, o2, half), (o1, o2, half), (o2, o1, half),
    ]
    sets = [
        ({a}, chain[0]), ({p, q}, chain[1]), ({q}, chain[2]),
        ({r1, r2}, side[0]), ({r1}, side[1]), ({r2}, side[2]),
        ({a, c, p, q, r1, r2}, 1), ({o1}, 1), ({o2}, 1),
    ]
    return _instance(8, arcs, sets), names


def gadget(name: str):
    if name == "fig2-contraction":
        return contraction_gadget()
    if name == "series-scc":
        return series_scc()
    if name == "single-set-vertebrate":
        return single_set_vertebrate()
    if name == "nested-irreducible":
        return nested_irreducible()
    raise ValueError(f"unknown gadget {name!r}")


def backbone_through_minimal_sets(inst: Instance, seed: int = 0) -> Subtour:
    """Closed walk of shortest paths through one vertex of every minimal non-singleton set."""
    rng = random.Random(seed)
    family = list(inst.non_singleton_sets().values())
    minimal = [s for s in family if not any(r < s for r in family)]
    stops = sorted({min(s) for s in minimal})
    if not stops:
        return as_subtour(inst.g, EdgeMultiset())
    if len(stops) == 1:
        stops.append(rng.choice([v for v in range(inst.n) if v != stops[0]]))
    counts: dict[int, int] = {}
    for a, b in zip(stops, stops[1:] + stops[:1]):
        path, _ = shortest_path(inst.g, inst.weights, a, b)
        for eid in path:
            counts[eid] = counts.get(eid, 0) + 1
    return as_subtour(inst.g, EdgeMultiset(counts))
