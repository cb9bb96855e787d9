from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from atsp_approx.graph import (
    EdgeMultiset,
    GraphError,
    as_subtour,
    eulerian_components,
    scc_topological,
    shortest_path,
)
from support import digraph, reachable, simple_paths


def test_scc_of_cycle_is_single_component():
    g = digraph(3, [(0, 1), (1, 2), (2, 0)])
    assert scc_topological(g) == [frozenset({0, 1, 2})]


def test_scc_of_path_is_singletons_in_order():
    g = digraph(3, [(0, 1), (1, 2)])
    assert scc_topological(g) == [frozenset({0}), frozenset({1}), frozenset({2})]


def test_two_two_cycles_in_series():
    g = digraph(4, [(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)])
    assert scc_topological(g) == [frozenset({0, 1}), frozenset({2, 3})]


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=14))
))
def test_scc_matches_mutual_reachability(data):
    n, pairs = data
    g = digraph(n, [(u, v) for u, v in pairs if u != v])
    comps = scc_topological(g)
    reach = {v: reachable(g, v) for v in range(n)}
    for comp in comps:
        for a in comp:
            assert {b for b in range(n) if b in reach[a] and a in reach[b]} == comp
    # topological: no edge goes from a later component back to an earlier one
    where = {v: k for k, comp in enumerate(comps) for v in comp}
    assert all(where[e.tail] <= where[e.head] for e in g.edges)


def test_shortest_path_trivial_and_cheaper_detour():
    g = digraph(3, [(0, 1), (0, 2), (2, 1)])
    w = {0: Fraction(3), 1: Fraction(1), 2: Fraction(1)}
    assert shortest_path(g, w, 0, 0) == ((), 0)
    assert shortest_path(g, w, 0, 1) == ((1, 2), 2)


def test_shortest_path_respects_restriction():
    g = digraph(3, [(0, 2), (2, 1)])
    w = {0: Fraction(1), 1: Fraction(1)}
    assert shortest_path(g, w, 0, 1, restrict={0, 1}) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(0, 9)), max_size=14),
    )
))
def test_shortest_path_matches_enumeration(data):
    n, triples = data
    triples = [t for t in triples if t[0] != t[1]]
    g = digraph(n, [(u, v) for u, v, _ in triples])
    w = {k: Fraction(c) for k, (_, _, c) in enumerate(triples)}
    for v in range(1, n):
        paths = simple_paths(g, 0, v)
        got = shortest_path(g, w, 0, v)
        if not paths:
            assert got is None
            continue
        best = min(sum(w[e] for e in p) for p in paths)
        assert got[1] == best
        assert sum(w[e] for e in got[0]) == best


def test_eulerian_components_split_and_empty():
    g = digraph(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    comps = eulerian_components(g, EdgeMultiset([0, 1, 2, 3]))
    assert sorted(sorted(c.vertices) for c in comps) == [[0, 1], [2, 3]]
    assert eulerian_components(g, EdgeMultiset()) == []


def test_eulerian_components_reject_imbalance():
    g = digraph(3, [(0, 1), (1, 2), (2, 0), (1, 0)])
    with pytest.raises(GraphError):
        eulerian_components(g, EdgeMultiset({0: 2, 3: 1}))


def test_subtour_walk_uses_every_copy():
    g = digraph(3, [(0, 1), (1, 0), (1, 2), (2, 1)])
    t = as_subtour(g, EdgeMultiset({0: 2, 1: 2, 2: 1, 3: 1}))
    assert sorted(t.walk) == [0, 0, 1, 1, 2, 3]
    heads = [g.edge(e).head for e in t.walk]
    tails = [g.edge(e).tail for e in t.walk]
    assert heads == tails[1:] + tails[:1]
