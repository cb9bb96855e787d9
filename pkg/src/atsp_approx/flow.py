"""Exact maximum flow and integral minimum-cost flow.

Rational data is scaled to integers by a common denominator before the
combinatorial work, so every result is exact.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping

from .graph import Digraph, GraphError


def _common_denominator(values) -> int:
    d = 1
    for q in values:
        d = math.lcm(d, Fraction(q).denominator)
    return d


class _Residual:
    """Paired-arc residual graph; arc i and i ^ 1 are mutual reverses."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list = []
        self.cost: list[int] = []

    def add(self, u: int, v: int, cap, cost: int = 0) -> int:
        i = len(self.to)
        self.to += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[u].append(i)
        self.adj[v].append(i + 1)
        return i

    def reachable(self, s: int) -> set[int]:
        seen = {s}
        queue = deque([s])
        while queue:
            a = queue.popleft()
            for i in self.adj[a]:
                if self.cap[i] > 0 and self.to[i] not in seen:
                    seen.add(self.to[i])
                    queue.append(self.to[i])
        return seen


def _dinic(res: _Residual, s: int, t: int) -> int:
    total = 0
    while True:
        level = [-1] * res.n
        level[s] = 0
        queue = deque([s])
        while queue:
            a = queue.popleft()
            for i in res.adj[a]:
                b = res.to[i]
                if res.cap[i] > 0 and level[b] < 0:
                    level[b] = level[a] + 1
                    queue.append(b)
        if level[t] < 0:
            return total
        ptr = [0] * res.n

        def push(a: int, limit):
            if a == t:
                return limit
            while ptr[a] < len(res.adj[a]):
                i = res.adj[a][ptr[a]]
                b = res.to[i]
                if res.cap[i] > 0 and level[b] == level[a] + 1:
                    got = push(b, min(limit, res.cap[i]))
                    if got:
                        res.cap[i] -= got
                        res.cap[i ^ 1] += got
                        return got
                ptr[a] += 1
            return 0

        while True:
            got = push(s, math.inf)
            if not got:
                break
            total += got


def min_st_cut(
    g: Digraph, cap: Mapping[int, Fraction], s: int, t: int
) -> tuple[Fraction, frozenset[int]]:
    """Maximum s-t flow value and the source side of a minimum cut."""
    if s == t:
        raise GraphError("source equals sink")
    scale = _common_denominator(cap.get(e.id, 0) for e in g.edges)
    res = _Residual(g.n)
    for e in g.edges:
        c = Fraction(cap.get(e.id, 0))
        if c < 0:
            raise GraphError(f"negative capacity on edge {e.id}")
        if c > 0 and e.tail != e.head:
            res.add(e.tail, e.head, int(c * scale))
    value = _dinic(res, s, t)
    return Fraction(value, scale), frozenset(res.reachable(s))


@dataclass(frozen=True)
class Arc:
    key: Hashable
    tail: Hashable
    head: Hashable
    lower: int = 0
    upper: int | None = None  # None means uncapacitated
    cost: Fraction = Fraction(0)


@dataclass
class FlowNetwork:
    arcs: list[Arc] = field(default_factory=list)
    supply: dict[Hashable, int] = field(default_factory=dict)

    def add(self, key, tail, head, lower=0, upper=None, cost=Fraction(0)) -> None:
        self.arcs.append(Arc(key, tail, head, lower, upper, Fraction(cost)))

    def nodes(self) -> list:
        seen = dict.fromkeys(self.supply)
        for a in self.arcs:
            seen.setdefault(a.tail)
            seen.setdefault(a.head)
        return list(seen)


class InfeasibleFlow(GraphError):
    """No feasible flow; ``cut`` is a node set X with supply(X) > u(out(X)) - l(in(X))."""

    def __init__(self, cut: frozenset, supply: int, capacity: int):
        super().__init__(f"infeasible: node set of supply {supply} has outgoing capacity {capacity}")
        self.cut = cut
        self.supply = supply
        self.capacity = capacity


def cut_certificate(net: FlowNetwork, cut) -> tuple[int, float]:
    """Return (supply(X), u(out(X)) - l(in(X))) for a node set X."""
    cut = set(cut)
    supply = sum(b for v, b in net.supply.items() if v in cut)
    room = 0
    for a in net.arcs:
        if a.tail in cut and a.head not in cut:
            room += math.inf if a.upper is None else a.upper
        elif a.head in cut and a.tail not in cut:
            room -= a.lower
    return supply, room


def min_cost_integral_flow(net: FlowNetwork) -> tuple[dict, Fraction]:
    """Integral flow meeting bounds and supplies with minimum total cost.

    Positive supply means the node emits flow. Successive shortest paths
    with node potentials; lower bounds become supplies.
    """
    nodes = net.nodes()
    index = {v: k for k, v in enumerate(nodes)}
    n = len(nodes)
    scale = _common_denominator(a.cost for a in net.arcs)
    excess = [0] * n
    for v, b in net.supply.items():
        excess[index[v]] += int(b)
    if sum(excess) != 0:
        raise GraphError("supplies do not sum to zero")

    res = _Residual(n + 2)
    src, snk = n, n + 1
    base: list[int] = []
    handles: list[tuple[int, bool]] = []
    for a in net.arcs:
        if a.upper is not None and a.upper < a.lower:
            raise InfeasibleFlow(frozenset(), a.lower, a.upper)
        u, v = index[a.tail], index[a.head]
        c = int(a.cost * scale)
        room = math.inf if a.upper is None else a.upper - a.lower
        start = a.lower
        flipped = False
        if c < 0:
            if room == math.inf:
                raise GraphError(f"negative-cost uncapacitated arc {a.key!r}")
            # Pre-saturate and offer the reverse move at positive cost.
            start += room
            flipped = True
        excess[u] -= start
        excess[v] += start
        if flipped:
            h = res.add(v, u, room, -c)
        else:
            h = res.add(u, v, room, c)
        base.append(start)
        handles.append((h, flipped))

    need = 0
    for k, b in enumerate(excess):
        if b > 0:
            res.add(src, k, b)
            need += b
        elif b < 0:
            res.add(k, snk, -b)

    potential = [0] * (n + 2)
    sent = 0
    while sent < need:
        dist = [math.inf] * (n + 2)
        prev = [-1] * (n + 2)
        dist[src] = 0
        heap = [(0, src)]
        while heap:
            d, a = heapq.heappop(heap)
            if d > dist[a]:
                continue
            for i in res.adj[a]:
                if res.cap[i] <= 0:
                    continue
                b = res.to[i]
                nd = d + res.cost[i] + potential[a] - potential[b]
                if nd < dist[b]:
                    dist[b] = nd
                    prev[b] = i
                    heapq.heappush(heap, (nd, b))
        if dist[snk] == math.inf:
            break
        for v in range(n + 2):
            if dist[v] < math.inf:
                potential[v] += dist[v]
        push = need - sent
        v = snk
        while v != src:
            i = prev[v]
            push = min(push, res.cap[i])
            v = res.to[i ^ 1]
        v = snk
        while v != src:
            i = prev[v]
            res.cap[i] -= push
            res.cap[i ^ 1] += push
            v = res.to[i ^ 1]
        sent += push

    if sent < need:
        reach = res.reachable(src)
        cut = frozenset(nodes[k] for k in reach if k < n)
        supply, room = cut_certificate(net, cut)
        assert supply > room, "cut certificate does not certify infeasibility"
        raise InfeasibleFlow(cut, supply, room)

    flow = {}
    total = Fraction(0)
    for a, start, (h, flipped) in zip(net.arcs, base, handles):
        moved = res.cap[h ^ 1]
        value = start - moved if flipped else start + moved
        flow[a.key] = value
        total += a.cost * value
    return flow, total
