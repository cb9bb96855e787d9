import itertools
from fractions import Fraction

import pytest

from atsp_approx.errors import SolveError
from atsp_approx.heldkarp import (
    cut_value,
    extract_laminar_dual,
    is_laminar,
    separate,
    solve_held_karp,
    uncross_step,
)
from atsp_approx.heldkarp import dual_slack
from support import complete_unit, cycle_unit, digraph


@pytest.mark.parametrize("n", range(3, 9))
def test_unit_cycle_value(n):
    g, w = cycle_unit(n)
    hk = solve_held_karp(g, w)
    assert hk.value == n
    assert all(v == 1 for v in hk.x.values())


def test_unit_k3():
    g, w = complete_unit(3)
    hk = solve_held_karp(g, w)
    assert hk.value == 3


def test_two_vertices():
    g = digraph(2, [(0, 1), (1, 0)])
    assert solve_held_karp(g, {0: Fraction(1), 1: Fraction(1)}).value == 2


def test_disconnected_rejected():
    g = digraph(3, [(0, 1), (1, 0)])
    with pytest.raises(SolveError):
        solve_held_karp(g, {0: Fraction(1), 1: Fraction(1)})


def test_separation_examples():
    g = digraph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (1, 0), (3, 2)])
    ham = {0: 1, 1: 1, 2: 1, 3: 1, 4: 0, 5: 0}
    assert separate({k: Fraction(v) for k, v in ham.items()}, g) is None
    two = {0: 1, 4: 1, 2: 1, 5: 1, 1: 0, 3: 0}
    found = separate({k: Fraction(v) for k, v in two.items()}, g)
    assert found in (frozenset({0, 1}), frozenset({2, 3}))


def test_two_half_hamiltonian_cycles_pass_separation():
    first = [0, 1, 2, 3, 4]
    second = [0, 2, 4, 1, 3]
    pairs = [(c[k], c[(k + 1) % 5]) for c in (first, second) for k in range(5)]
    g = digraph(5, pairs)
    x = {e.id: Fraction(1, 2) for e in g.edges}
    assert separate(x, g) is None
    for k in range(1, 5):
        for s in itertools.combinations(range(5), k):
            assert cut_value(g, x, frozenset(s)) >= 2


def test_k3_dual():
    g, w = complete_unit(3)
    hk = solve_held_karp(g, w)
    dual = extract_laminar_dual(g, w, hk)
    assert dual.objective() == 3
    for e in g.edges:
        assert dual_slack(g, w, dual.alpha, {dual.family[k]: dual.y[k] for k in dual.family}, e) >= 0


def test_uncross_step_examples():
    a, b = frozenset({0, 1}), frozenset({1, 2})
    y = uncross_step({a: Fraction(1), b: Fraction(1)}, a, b)
    before = 2 * 1 + 2 * 1
    after = sum(len(s) * v for s, v in y.items())
    assert before - after == 2
    assert 2 * sum(y.values()) == 4

    y = uncross_step({a: Fraction(2), b: Fraction(1)}, a, b)
    assert y == {a: 1, frozenset({0}): 1, frozenset({2}): 1}

    with pytest.raises(ValueError):
        uncross_step({a: Fraction(1), frozenset({3}): Fraction(1)}, a, frozenset({3}))


def test_is_laminar():
    assert is_laminar([frozenset({0, 1}), frozenset({0}), frozenset({2})])
    assert not is_laminar([frozenset({0, 1}), frozenset({1, 2})])
