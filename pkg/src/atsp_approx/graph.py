"""Directed multigraphs with stable edge ids, edge multisets and walks."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    preimage: int | None = None


class Digraph:
    """Immutable directed multigraph on vertices ``0..n-1``."""

    __slots__ = ("n", "edges", "_by_id", "_out", "_in")

    def __init__(self, n: int, edges: Iterable[Edge]):
        if n < 0:
            raise GraphError("negative vertex count")
        self.n = n
        self.edges = tuple(edges)
        self._by_id: dict[int, Edge] = {}
        out: list[list[Edge]] = [[] for _ in range(n)]
        inc: list[list[Edge]] = [[] for _ in range(n)]
        for e in self.edges:
            if e.id in self._by_id:
                raise GraphError(f"duplicate edge id {e.id}")
            if not (0 <= e.tail < n and 0 <= e.head < n):
                raise GraphError(f"edge {e.id} has an endpoint outside 0..{n - 1}")
            self._by_id[e.id] = e
            out[e.tail].append(e)
            inc[e.head].append(e)
        self._out = tuple(tuple(sorted(es, key=lambda e: e.id)) for es in out)
        self._in = tuple(tuple(sorted(es, key=lambda e: e.id)) for es in inc)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Digraph":
        return cls(n, [Edge(k, u, v) for k, (u, v) in enumerate(pairs)])

    def edge(self, eid: int) -> Edge:
        return self._by_id[eid]

    def has_edge(self, eid: int) -> bool:
        return eid in self._by_id

    def edge_ids(self) -> list[int]:
        return sorted(self._by_id)

    def out_edges(self, v: int) -> tuple[Edge, ...]:
        return self._out[v]

    def in_edges(self, v: int) -> tuple[Edge, ...]:
        return self._in[v]

    def vertices(self) -> range:
        return range(self.n)

    def delta_out(self, s: Iterable[int]) -> list[Edge]:
        s = set(s)
        return [e for v in sorted(s) for e in self._out[v] if e.head not in s]

    def delta_in(self, s: Iterable[int]) -> list[Edge]:
        s = set(s)
        return [e for v in sorted(s) for e in self._in[v] if e.tail not in s]

    def edges_inside(self, s: Iterable[int]) -> list[Edge]:
        s = set(s)
        return [e for v in sorted(s) for e in self._out[v] if e.head in s]

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, m={len(self.edges)})"


def crosses(e: Edge, s: frozenset[int] | set[int]) -> bool:
    return (e.tail in s) != (e.head in s)


class EdgeMultiset(Mapping[int, int]):
    """Edge id -> positive multiplicity; missing ids have multiplicity zero."""

    __slots__ = ("_counts", "_hash")

    def __init__(self, counts: Mapping[int, int] | Iterable[int] = ()):
        if isinstance(counts, Mapping):
            items = counts.items()
        else:
            tally: dict[int, int] = {}
            for eid in counts:
                tally[eid] = tally.get(eid, 0) + 1
            items = tally.items()
        clean = {}
        for eid, k in items:
            if k < 0 or int(k) != k:
                raise GraphError(f"multiplicity of edge {eid} must be a nonnegative integer")
            if k:
                clean[eid] = int(k)
        self._counts = dict(sorted(clean.items()))
        self._hash = None

    def __getitem__(self, eid: int) -> int:
        return self._counts[eid]

    def get(self, eid, default=0):
        return self._counts.get(eid, default)

    def __iter__(self) -> Iterator[int]:
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __eq__(self, other) -> bool:
        if isinstance(other, EdgeMultiset):
            return self._counts == other._counts
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._counts.items()))
        return self._hash

    def __add__(self, other: "EdgeMultiset") -> "EdgeMultiset":
        out = dict(self._counts)
        for eid, k in other.items():
            out[eid] = out.get(eid, 0) + k
        return EdgeMultiset(out)

    def __repr__(self) -> str:
        return f"EdgeMultiset({self._counts})"

    def size(self) -> int:
        return sum(self._counts.values())

    def expanded(self) -> list[int]:
        return [eid for eid, k in self._counts.items() for _ in range(k)]

    def vertices(self, g: Digraph) -> frozenset[int]:
        vs = set()
        for eid in self._counts:
            e = g.edge(eid)
            vs.add(e.tail)
            vs.add(e.head)
        return frozenset(vs)

    def imbalance(self, g: Digraph) -> dict[int, int]:
        """Out-degree minus in-degree, for vertices where it is nonzero."""
        bal: dict[int, int] = {}
        for eid, k in self._counts.items():
            e = g.edge(eid)
            bal[e.tail] = bal.get(e.tail, 0) + k
            bal[e.head] = bal.get(e.head, 0) - k
        return {v: b for v, b in sorted(bal.items()) if b}

    def is_eulerian(self, g: Digraph) -> bool:
        return not self.imbalance(g)

    def out_degree(self, g: Digraph, v: int) -> int:
        return sum(self.get(e.id) for e in g.out_edges(v))

    def in_degree(self, g: Digraph, v: int) -> int:
        return sum(self.get(e.id) for e in g.in_edges(v))

    def crossing_out(self, g: Digraph, s) -> int:
        s = set(s)
        return sum(k for eid, k in self._counts.items() if g.edge(eid).tail in s and g.edge(eid).head not in s)

    def crossing_in(self, g: Digraph, s) -> int:
        s = set(s)
        return sum(k for eid, k in self._counts.items() if g.edge(eid).head in s and g.edge(eid).tail not in s)

    def weight(self, w: Mapping[int, Fraction]) -> Fraction:
        return sum((w[eid] * k for eid, k in self._counts.items()), Fraction(0))

    def as_dict(self) -> dict[int, int]:
        return dict(self._counts)


@dataclass(frozen=True)
class Subtour:
    """A connected Eulerian multiset with one Euler walk through it."""

    edges: EdgeMultiset
    walk: tuple[int, ...]
    vertices: frozenset[int]

    @property
    def ident(self) -> int:
        """Smallest vertex; used as a deterministic component id."""
        return min(self.vertices) if self.vertices else -1


EMPTY = EdgeMultiset()
EMPTY_SUBTOUR = Subtour(EMPTY, (), frozenset())


def _union_find_components(g: Digraph, f: EdgeMultiset) -> list[list[int]]:
    parent: dict[int, int] = {}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for eid in f:
        e = g.edge(eid)
        for v in (e.tail, e.head):
            parent.setdefault(v, v)
        ra, rb = find(e.tail), find(e.head)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for eid in f:
        groups.setdefault(find(g.edge(eid).tail), []).append(eid)
    return [groups[r] for r in sorted(groups)]


def _hierholzer(g: Digraph, counts: dict[int, int], start: int) -> tuple[int, ...]:
    remaining = dict(counts)
    out_lists: dict[int, list[int]] = {}
    for eid in sorted(counts):
        out_lists.setdefault(g.edge(eid).tail, []).append(eid)
    pointer = {v: 0 for v in out_lists}

    def next_edge(v: int) -> int | None:
        lst = out_lists.get(v)
        if not lst:
            return None
        i = pointer[v]
        while i < len(lst) and remaining[lst[i]] == 0:
            i += 1
        pointer[v] = i
        if i == len(lst):
            return None
        eid = lst[i]
        remaining[eid] -= 1
        return eid

    stack: list[tuple[int, int | None]] = [(start, None)]
    circuit: list[int] = []
    while stack:
        v, via = stack[-1]
        eid = next_edge(v)
        if eid is None:
            stack.pop()
            if via is not None:
                circuit.append(via)
        else:
            stack.append((g.edge(eid).head, eid))
    circuit.reverse()
    return tuple(circuit)


def eulerian_components(g: Digraph, f: EdgeMultiset) -> list[Subtour]:
    """Split an Eulerian multiset into its connected pieces, each with an Euler walk."""
    bad = f.imbalance(g)
    if bad:
        raise GraphError(f"degree imbalance at vertices {sorted(bad)}")
    comps = []
    for eids in _union_find_components(g, f):
        counts = {eid: f[eid] for eid in eids}
        verts = frozenset(v for eid in eids for v in (g.edge(eid).tail, g.edge(eid).head))
        walk = _hierholzer(g, counts, min(verts))
        comps.append(Subtour(EdgeMultiset(counts), walk, verts))
    comps.sort(key=lambda t: t.ident)
    return comps


def as_subtour(g: Digraph, f: EdgeMultiset) -> Subtour:
    """Wrap a connected Eulerian multiset (possibly empty) as a Subtour."""
    comps = eulerian_components(g, f)
    if not comps:
        return EMPTY_SUBTOUR
    if len(comps) > 1:
        raise GraphError("multiset is not connected")
    return comps[0]


def scc_topological(g: Digraph, restrict: Iterable[int] | None = None) -> list[frozenset[int]]:
    """Strongly connected components of g[restrict], sources first."""
    allowed = set(range(g.n)) if restrict is None else set(restrict)
    if not allowed:
        raise GraphError("empty input")
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[frozenset[int]] = []
    counter = 0
    for root in sorted(allowed):
        if root in index:
            continue
        work = [(root, iter([e.head for e in g.out_edges(root) if e.head in allowed]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for u in it:
                if u not in index:
                    index[u] = low[u] = counter
                    counter += 1
                    stack.append(u)
                    on_stack.add(u)
                    work.append((u, iter([e.head for e in g.out_edges(u) if e.head in allowed])))
                    advanced = True
                    break
                if u in on_stack:
                    low[v] = min(low[v], index[u])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    u = stack.pop()
                    on_stack.discard(u)
                    comp.add(u)
                    if u == v:
                        break
                comps.append(frozenset(comp))
    # Tarjan emits sinks first.
    comps.reverse()
    return comps


def is_strongly_connected(g: Digraph, restrict: Iterable[int] | None = None) -> bool:
    verts = set(range(g.n)) if restrict is None else set(restrict)
    if not verts:
        return False
    return len(scc_topological(g, verts)) == 1


def shortest_path(
    g: Digraph,
    w: Mapping[int, Fraction],
    u: int,
    v: int,
    restrict: Iterable[int] | None = None,
) -> tuple[tuple[int, ...], Fraction] | None:
    """Minimum-weight u->v path inside ``restrict``.

    Among minimum-weight paths the one with fewest edges wins, then the
    lexicographically smallest edge-id sequence.
    """
    allowed = None if restrict is None else set(restrict)
    if allowed is not None and (u not in allowed or v not in allowed):
        raise GraphError("endpoints must lie in the restricting set")
    best: dict[int, tuple[Fraction, int, tuple[int, ...]]] = {u: (Fraction(0), 0, ())}
    heap = [(Fraction(0), 0, (), u)]
    done = set()
    while heap:
        d, k, path, a = heapq.heappop(heap)
        if a in done:
            continue
        done.add(a)
        if a == v:
            return path, d
        for e in g.out_edges(a):
            b = e.head
            if allowed is not None and b not in allowed:
                continue
            if b in done:
                continue
            label = (d + w[e.id], k + 1, path + (e.id,))
            if b not in best or label < best[b]:
                best[b] = label
                heapq.heappush(heap, (*label, b))
    return None


def distances_from(
    g: Digraph, w: Mapping[int, Fraction], u: int, restrict: Iterable[int] | None = None
) -> dict[int, Fraction]:
    """Single-source shortest distances (no path bookkeeping)."""
    allowed = None if restrict is None else set(restrict)
    dist = {u: Fraction(0)}
    heap = [(Fraction(0), u)]
    done = set()
    while heap:
        d, a = heapq.heappop(heap)
        if a in done:
            continue
        done.add(a)
        for e in g.out_edges(a):
            b = e.head
            if allowed is not None and b not in allowed:
                continue
            nd = d + w[e.id]
            if b not in dist or nd < dist[b]:
                dist[b] = nd
                heapq.heappush(heap, (nd, b))
    return dist


def walk_vertices(g: Digraph, walk: Iterable[int]) -> list[int]:
    return [g.edge(eid).tail for eid in walk]
