import itertools
import math
from fractions import Fraction

import pytest

from atsp_approx.graph import EMPTY_SUBTOUR, EdgeMultiset, as_subtour
from atsp_approx.instance import Instance, LaminarForest
from atsp_approx.merge import (
    MergeState,
    OracleContractBreach,
    lb_eps,
    light_cycle_search,
    low,
    reinitialize,
    run,
)
from atsp_approx.pipeline import instance_from_graph, verify_tour
from atsp_approx.spc_singleton import solve_spc_singleton
from support import complete_unit, digraph, simple_cycles


def singleton_instance(n, ys, pairs=None):
    pairs = pairs or [(u, v) for u in range(n) for v in range(n) if u != v]
    g = digraph(n, pairs)
    lam = LaminarForest.build({v: {v} for v in range(n)}, {v: Fraction(ys[v]) for v in range(n)})
    return Instance(g, lam, {e.id: Fraction(1) for e in g.edges})


def cycle_on(inst, vertices):
    g = inst.g
    pick = []
    for a, b in zip(vertices, vertices[1:] + vertices[:1]):
        pick.append(next(e.id for e in g.out_edges(a) if e.head == b))
    return as_subtour(g, EdgeMultiset(pick))


def singleton_oracle(i, _b, classes):
    return solve_spc_singleton(i, classes)


def test_k3_singleton_run():
    g, w = complete_unit(3)
    _, _, inst = instance_from_graph(g, w)
    eps = Fraction(1, 4)
    res = run(inst, EMPTY_SUBTOUR, singleton_oracle, 2, 0, eps)
    assert verify_tour(inst.g, res.tour) == []
    assert res.weight == 3
    assert res.weight <= 9 * (1 + eps) * 2 * 3


def test_full_backbone_returned():
    inst = singleton_instance(3, [1, 1, 1])
    b = cycle_on(inst, [0, 1, 2])
    res = run(inst, b, singleton_oracle, 2, 0, Fraction(1, 4))
    assert res.tour == b and res.weight == inst.cost(b.edges)


def test_heavy_oracle_output_is_a_breach():
    inst = singleton_instance(3, [1, 1, 1])

    def heavy(i, _b, classes):
        return EdgeMultiset({eid: 4 for eid in cycle_on(i, [0, 1, 2]).edges})

    with pytest.raises(OracleContractBreach) as err:
        run(inst, EMPTY_SUBTOUR, heavy, 2, 0, Fraction(1, 4))
    assert err.value.subtour is not None


def test_lb_eps_properties():
    inst = singleton_instance(4, [0, 1, 2, 3])
    zero = MergeState(inst, EMPTY_SUBTOUR, Fraction(2), Fraction(0), Fraction(0))
    t = cycle_on(inst, [1, 2])
    assert lb_eps(zero, t) == inst.lb_set(t.vertices)
    eps = Fraction(1, 3)
    state = MergeState(inst, EMPTY_SUBTOUR, Fraction(2), Fraction(0), eps)
    free = singleton_instance(4, [0, 1, 2, 3])
    whole = cycle_on(free, [0, 1, 2, 3])
    assert state.lb_eps_vertices(whole.vertices) == inst.lb_set(range(4)) + eps * state.lb_bar
    only_zero = MergeState(singleton_instance(2, [0, 5]), EMPTY_SUBTOUR, 2, 0, eps)
    assert only_zero.lb_eps_vertices({0}) == eps * Fraction(1, 2) * 10
    a, b = cycle_on(inst, [0, 1]), cycle_on(inst, [2, 3])
    assert lb_eps(state, a) + lb_eps(state, b) == state.lb_eps_vertices(a.vertices | b.vertices)


def test_low_index():
    inst = singleton_instance(12, [1] * 12)
    backbone = cycle_on(inst, [0, 1])
    inits = [cycle_on(inst, [2 * k, 2 * k + 1]) for k in range(1, 6)]
    state = MergeState(inst, backbone, Fraction(2), Fraction(0), Fraction(1, 4), inits=inits)
    assert low(state, cycle_on(inst, [1, 4])) == 0
    assert low(state, frozenset({4, 10})) == 2
    assert low(state, frozenset({3, 10})) == 1
    state = MergeState(inst, EMPTY_SUBTOUR, Fraction(2), Fraction(0), Fraction(1, 4), inits=inits[:1])
    assert low(state, frozenset({11})) == math.inf


def test_light_cycle_search_on_unit_triangle():
    inst = singleton_instance(3, [Fraction(1, 2)] * 3, pairs=[(0, 1), (1, 2), (2, 0)])
    state = MergeState(inst, EMPTY_SUBTOUR, Fraction(2), Fraction(0), Fraction(1, 4))
    found = light_cycle_search(state, frozenset({0}), Fraction(3))
    assert found is not None and found.vertices == {0, 1, 2}
    assert light_cycle_search(state, frozenset({0}), Fraction(2)) is None
    assert light_cycle_search(state, frozenset({0}), Fraction(0)) is None


def test_light_cycle_search_matches_enumeration():
    pairs = [(0, 1), (1, 0), (0, 2), (2, 3), (3, 0), (1, 4), (4, 2), (3, 4), (4, 3), (2, 1)]
    inst = singleton_instance(5, [3, 1, 2, 5, 4], pairs)
    state = MergeState(inst, EMPTY_SUBTOUR, Fraction(2), Fraction(0), Fraction(1, 4))
    through = sorted(
        sum(inst.weight(e) for e in c)
        for c in simple_cycles(inst.g)
        if any(inst.g.edge(e).tail == 0 for e in c)
    )
    cheapest, second = through[0], next(v for v in through if v > through[0])
    assert light_cycle_search(state, frozenset({0}), cheapest - 1) is None
    mid = (cheapest + second) / 2
    found = light_cycle_search(state, frozenset({0}), mid)
    assert inst.cost(found.edges) == cheapest


def test_reinit_for_unattached_walk():
    inst = singleton_instance(4, [0, 0, 3, 3])
    eps = Fraction(1, 4)
    state = MergeState(inst, EMPTY_SUBTOUR, Fraction(2), Fraction(0), eps)
    t = cycle_on(inst, [0, 1])
    assert inst.lb_set(t.vertices) == 0
    before = state.potential()
    new = reinitialize(state, 1, math.inf, [t])
    assert [x.vertices for x in new] == [t.vertices]
    assert state.potential() - before >= (eps * state.lb_bar / inst.n) ** 2


def test_reinit_without_other_inits():
    inst = singleton_instance(5, [1, 1, 10, 1, 1])
    state = MergeState(inst, EMPTY_SUBTOUR, Fraction(2), Fraction(0), Fraction(1, 4),
                       inits=[cycle_on(inst, [0, 1])])
    fam = [cycle_on(inst, [1, 2])]
    new = reinitialize(state, 1, 1, fam)
    assert [x.vertices for x in new] == [frozenset({0, 1, 2})]
    assert inst.cost(new[0].edges) == inst.cost(state.inits[0].edges)


def test_reinit_three_inits_prefix_of_one():
    # inits {1,2}, {3,4}, {5,6}; the offending walk 0 2 3 5 hits all three
    inst = singleton_instance(7, [20, 1, 1, 1, 10, 1, 8])
    eps, alpha = Fraction(1, 4), Fraction(2)
    inits = [cycle_on(inst, [1, 2]), cycle_on(inst, [3, 4]), cycle_on(inst, [5, 6])]
    state = MergeState(inst, EMPTY_SUBTOUR, alpha, Fraction(0), eps, inits=inits)
    fam = [cycle_on(inst, [0, 2, 3, 5])]
    assert inst.lb_set(fam[0].vertices) > 3 * lb_eps(state, inits[0])
    outside = {j: state.lb_eps_vertices(inits[j].vertices - fam[0].vertices) for j in (1, 2)}
    need = sum(outside.values()) / 3 - lb_eps(state, inits[0])
    assert need > 0 and outside[1] >= need
    new = reinitialize(state, 1, 1, fam)
    assert [x.vertices for x in new] == [frozenset({0, 1, 2, 3, 4, 5})]
    for t in new:
        assert inst.cost(t.edges) <= 3 * alpha * lb_eps(state, t)
