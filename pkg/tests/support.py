"""Shared builders and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from atsp_approx.generators import backbone_through_minimal_sets, random_digraph
from atsp_approx.graph import Digraph, Edge, is_strongly_connected
from atsp_approx.pipeline import instance_from_graph


def digraph(n, pairs):
    return Digraph(n, [Edge(k, u, v) for k, (u, v) in enumerate(pairs)])


def complete_unit(n):
    g = digraph(n, [(u, v) for u in range(n) for v in range(n) if u != v])
    return g, {e.id: Fraction(1) for e in g.edges}


def cycle_unit(n):
    g = digraph(n, [(v, (v + 1) % n) for v in range(n)])
    return g, {e.id: Fraction(1) for e in g.edges}


def criterion_one_graphs(count=200):
    """The seeded random strongly connected digraphs used for the oracle comparison."""
    for seed in range(count):
        n = random.Random(seed).randint(3, 8)
        g, w = random_digraph(n, seed, density=0.6, max_weight=20)
        yield seed, g, w


def reachable(g, s, restrict=None):
    allowed = set(range(g.n)) if restrict is None else set(restrict)
    seen, stack = {s}, [s]
    while stack:
        a = stack.pop()
        for e in g.out_edges(a):
            if e.head in allowed and e.head not in seen:
                seen.add(e.head)
                stack.append(e.head)
    return seen


def simple_paths(g, u, v, restrict=None):
    """Every simple u->v path (as edge-id tuples) inside ``restrict``."""
    allowed = set(range(g.n)) if restrict is None else set(restrict)
    out = []

    def go(a, visited, path):
        if a == v:
            out.append(tuple(path))
            return
        for e in g.out_edges(a):
            if e.head in allowed and e.head not in visited:
                go(e.head, visited | {e.head}, path + [e.id])

    go(u, {u}, [])
    return out


def simple_cycles(g):
    """Every simple directed cycle, as a tuple of edge ids starting at its smallest vertex."""
    out = []
    for start in range(g.n):
        def go(a, visited, path):
            for e in g.out_edges(a):
                if e.head == start:
                    out.append(tuple(path + [e.id]))
                elif e.head > start and e.head not in visited:
                    go(e.head, visited | {e.head}, path + [e.id])
        go(start, {start}, [])
    return out


def all_cuts(n, s, t):
    rest = [v for v in range(n) if v not in (s, t)]
    for k in range(len(rest) + 1):
        for extra in itertools.combinations(rest, k):
            yield frozenset((s,) + extra)


def vertebrate_gadgets(count, max_seed=2000):
    """Seeded HK instances with non-singleton sets, paired with a backbone meeting them all."""
    found = 0
    for seed in range(max_seed):
        rng = random.Random(seed)
        n = rng.randint(4, 9)
        g, w = random_digraph(n, seed, density=1.0, max_weight=20)
        _, _, inst = instance_from_graph(g, w)
        if inst.is_singleton():
            continue
        backbone = backbone_through_minimal_sets(inst, seed)
        if len(backbone.vertices) == inst.n:
            continue
        yield seed, inst, backbone
        found += 1
        if found == count:
            return


def random_family(inst, backbone, rng):
    """Disjoint strongly connected sets off the backbone that do not cut any laminar set."""
    free = [v for v in range(inst.n) if v not in backbone.vertices]
    rng.shuffle(free)
    chosen = free[: rng.randint(1, len(free))]
    family, used = [], set()
    laminar = list(inst.non_singleton_sets().values())
    for v in chosen:
        if v in used:
            continue
        group = {v}
        partner = next((u for u in chosen if u not in used and u != v), None)
        if partner is not None and rng.random() < 0.5:
            cand = frozenset({v, partner})
            respects = all(not (cand & s) or cand <= s for s in laminar)
            if respects and is_strongly_connected(inst.g, cand):
                group = set(cand)
        used |= group
        family.append(frozenset(group))
    return family


def random_partition(g, rng):
    classes = [frozenset([v]) for v in range(g.n)]
    for _ in range(rng.randint(0, 2 * g.n)):
        if len(classes) <= 2:
            break
        a, b = rng.sample(range(len(classes)), 2)
        union = classes[a] | classes[b]
        if is_strongly_connected(g, union):
            classes = [c for k, c in enumerate(classes) if k not in (a, b)] + [union]
    return classes


def singleton_instances(count):
    found = 0
    for seed in range(10 * count):
        g, w = random_digraph(random.Random(seed).randint(3, 8), seed)
        _, _, inst = instance_from_graph(g, w)
        if inst.is_singleton():
            yield seed, inst
            found += 1
            if found == count:
                return


def random_pair(rng):
    """Random circulation z (sum of weighted cycles) and a subflow f <= z."""
    n = rng.randint(3, 6)
    pairs, z = [], {}
    for _ in range(rng.randint(1, 4)):
        cyc = rng.sample(range(n), rng.randint(2, n))
        amount = Fraction(rng.randint(1, 6), rng.choice((1, 2, 3, 4)))
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            z[len(pairs)] = amount
            pairs.append((a, b))
    g = digraph(n, pairs)
    f = {}
    for eid, amount in z.items():
        pick = rng.random()
        f[eid] = Fraction(0) if pick < 0.3 else amount if pick < 0.6 else amount * Fraction(rng.randint(1, 3), 4)
    w = {eid: Fraction(rng.randint(0, 9)) for eid in z}
    return g, w, z, f
