import random
from fractions import Fraction

import pytest

from atsp_approx.errors import InvariantViolation
from atsp_approx.generators import contraction_gadget, nested_irreducible, series_scc
from atsp_approx.graph import EdgeMultiset, as_subtour, shortest_path
from atsp_approx.instance import Instance, LaminarForest, verify_instance
from atsp_approx.laminar import (
    contract,
    distance_DS,
    induce,
    is_reducible,
    lift,
    make_contractible,
    max_DS,
    path_crossings,
    scc_chain,
    short_path,
)
from atsp_approx.pipeline import brute_force_atsp, instance_from_graph, verify_tour
from support import digraph, simple_paths

DELTA = Fraction(78, 100)


def test_scc_chain_cases():
    inst, names = series_scc()
    s = frozenset({names["a1"], names["a2"], names["b1"], names["b2"]})
    assert scc_chain(inst, s) == [frozenset({names["a1"], names["a2"]}), frozenset({names["b1"], names["b2"]})]
    assert scc_chain(inst, frozenset({names["a1"], names["a2"]})) == [frozenset({names["a1"], names["a2"]})]
    with pytest.raises(InvariantViolation):
        scc_chain(inst, frozenset({names["a1"], names["b1"]}))


def _detour_instance():
    """R = {r1, m, r2}; the cheapest 0 -> 4 path leaves R in the middle and re-enters it."""
    u, r1, r2, o, v, m, out = range(7)
    pairs = [(u, r1), (r1, o), (o, r2), (r2, v), (r1, m), (m, r2), (v, out), (out, u)]
    g = digraph(7, pairs)
    sets = {0: {r1, r2, m}, 1: {r1}, 2: {r2}, 3: {m}}
    ys = {0: Fraction(1), 1: Fraction(1), 2: Fraction(1), 3: Fraction(100)}
    inst = Instance(g, LaminarForest.build(sets, ys), {e.id: Fraction(1) for e in g.edges})
    return inst, frozenset({u, r1, r2, o, v, m}), frozenset(sets[0])


def test_short_path_repairs_four_crossings():
    inst, s, r = _detour_instance()
    raw, _ = shortest_path(inst.g, inst.weights, 0, 4, s)
    assert path_crossings(inst.g, raw, r) == 4
    path = short_path(inst, s, 0, 4)
    assert path_crossings(inst.g, path, r) <= 2
    for k, members in inst.laminar.sets.items():
        assert path_crossings(inst.g, path, members) <= 2


def test_short_path_enters_endpoint_set_once():
    inst, s, r = _detour_instance()
    assert 0 in inst.s_in(s)
    path = short_path(inst, s, 0, 2)  # v = r2 lies in R
    assert path_crossings(inst.g, path, r) == 1
    assert inst.g.edge(path[-1]).head == 2


def test_short_path_single_edge_when_all_singleton():
    g = digraph(3, [(0, 1), (1, 2), (2, 0)])
    lam = LaminarForest.build({k: {k} for k in range(3)}, {k: Fraction(1) for k in range(3)})
    inst = Instance(g, lam, {e.id: Fraction(1) for e in g.edges})
    assert short_path(inst, frozenset(range(3)), 0, 1) == [0]


def test_contraction_gadget_worst_traversal_is_22():
    inst, names = contraction_gadget()
    s = frozenset({names["a"], names["c"], names["p"], names["q"]})
    assert distance_DS(inst, s, names["a"], names["q"]) == 22
    assert max_DS(inst, s) == (22, names["a"], names["q"])
    assert inst.value(s) == 22


def test_worst_traversal_without_enclosing_sets():
    g = digraph(3, [(0, 1), (1, 2), (2, 0)])
    lam = LaminarForest.build({0: {1}}, {0: Fraction(2)})
    inst = Instance(g, lam, {e.id: Fraction(1) for e in g.edges})
    s = frozenset({0, 1, 2})
    assert distance_DS(inst, s, 0, 0) == 0
    # y_u + d_S(u, v) + y_v counted only for sets strictly inside S
    assert distance_DS(inst, s, 1, 2) == 2 + 2 + 0
    enumerated = min(sum(inst.weight(e) for e in p) for p in simple_paths(g, 1, 2))
    assert distance_DS(inst, s, 1, 2) == 2 + enumerated


def test_reducibility_boundaries():
    tenth = Fraction(1, 10)
    boundary, names = nested_irreducible(chain=(13 * tenth,) * 3, side=(5 * tenth, 3 * tenth, 3 * tenth))
    s = 6  # id of S in the gadget's set list
    assert boundary.value(boundary.laminar.sets[s]) == 10
    assert max_DS(boundary, s)[0] == Fraction(78, 10)
    assert not is_reducible(boundary, s, DELTA)
    loose, _ = nested_irreducible(chain=(Fraction(5, 6),) * 3, side=(Fraction(5, 6),) * 3)
    assert loose.value(loose.laminar.sets[s]) == 10 and max_DS(loose, s)[0] == 5
    assert is_reducible(loose, s, DELTA)
    for k, members in boundary.laminar.sets.items():
        if len(members) == 1:
            assert not is_reducible(boundary, k, DELTA)


def test_contract_value_drop():
    inst, _ = nested_irreducible()
    s = 6
    members = inst.laminar.sets[s]
    assert inst.value(members) == 66 and max_DS(inst, s)[0] == 60
    child, rec = contract(inst, s)
    assert inst.total_value() - child.total_value() == 6
    assert verify_instance(child) == []


def test_contract_with_value_equal_to_worst_traversal():
    inst, names = contraction_gadget()
    child, _ = contract(inst, 4)
    assert child.total_value() == inst.total_value()
    assert verify_instance(child) == []


def test_induce_doubles_value():
    inst, _ = contraction_gadget()
    members = inst.laminar.sets[2]  # {p, q}
    child, _ = induce(inst, 2)
    assert child.total_value() == 2 * inst.value(members)
    assert verify_instance(child) == []
    inner, _ = induce(inst, 4)
    assert verify_instance(inner) == []


def test_induce_all_singleton_interior():
    inst, names = series_scc()
    child, _ = induce(inst, 7)  # {a1, a2}
    assert child.is_singleton()


def test_lift_guard_and_single_visit():
    inst, names = contraction_gadget()
    child, rec = contract(inst, 4)
    s_new = rec.new_vertex
    avoid = [e.id for e in child.g.edges if s_new not in (e.tail, e.head)]
    loop = [e.id for e in child.g.edges if {e.tail, e.head} == {rec.vertex_map[names["o1"]], rec.vertex_map[names["o2"]]}]
    assert set(loop) <= set(avoid)
    with pytest.raises(ValueError):
        lift(rec, EdgeMultiset(loop))
    value, walk = brute_force_atsp(child.g, child.weights)
    lifted = lift(rec, walk)
    assert verify_tour(inst.g, lifted) == []
    assert inst.cost(lifted.edges) <= child.cost(EdgeMultiset(walk))
    # one visit of the contracted vertex: exactly the a -> q chain is inserted
    inserted = [e for e in lifted.walk if e not in walk]
    assert inserted == [0, 1, 2]


def _compose(inst, set_id):
    """Induce, tour, make contractible, contract, tour, lift, and union."""
    induced, _ = induce(inst, set_id)
    _, inner_walk = brute_force_atsp(induced.g, induced.weights)
    pieces = make_contractible(inst, set_id, inner_walk, induced)
    assert inst.cost(pieces) <= induced.cost(EdgeMultiset(inner_walk))
    child, rec = contract(inst, set_id)
    _, outer_walk = brute_force_atsp(child.g, child.weights)
    lifted = lift(rec, outer_walk)
    assert inst.cost(lifted.edges) <= child.cost(EdgeMultiset(outer_walk))
    total = lifted.edges + pieces
    assert verify_tour(inst.g, total) == []
    return induced, inner_walk, pieces


def test_round_trip_contraction_gadget():
    inst, _ = contraction_gadget()
    _compose(inst, 4)
    _compose(inst, 2)


def test_round_trip_series():
    inst, names = series_scc()
    induced, inner_walk, pieces = _compose(inst, 6)
    s = inst.laminar.sets[6]
    comps = scc_chain(inst, s)
    visits = sum(1 for eid in inner_walk if induced.g.edge(eid).head == induced.n - 1)
    for comp in comps:
        exits = sum(1 for eid in inner_walk
                    if inst.g.edge(eid).tail in comp and inst.g.edge(eid).head not in comp)
        # the piece for a component gets one stitch path per exit of the tour from it
        assert exits >= visits
        assert pieces.crossing_out(inst.g, comp) == 0


def test_make_contractible_strongly_connected_set():
    inst, names = series_scc()
    induced, _ = induce(inst, 7)
    _, walk = brute_force_atsp(induced.g, induced.weights)
    pieces = make_contractible(inst, 7, walk, induced)
    t = as_subtour(inst.g, pieces)
    assert t.vertices == inst.laminar.sets[7]


def test_round_trips_on_random_instances():
    done = 0
    for seed in range(300):
        rng = random.Random(seed)
        from atsp_approx.generators import random_digraph

        g, w = random_digraph(rng.randint(4, 7), seed, density=1.0)
        _, _, inst = instance_from_graph(g, w)
        for k in inst.laminar.non_singletons():
            _compose(inst, k)
            done += 1
        if done >= 10:
            break
    assert done >= 10
