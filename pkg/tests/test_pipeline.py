import heapq
import random
from fractions import Fraction

import pytest

from atsp_approx import InvariantViolation, SolveError, SolverConfig, approx_atsp, brute_force_atsp, verify_tour
from atsp_approx.generators import nested_irreducible, random_digraph
from atsp_approx.graph import as_subtour
from atsp_approx.laminar import contract_many
from atsp_approx.pipeline import _Solver, instance_from_graph, irreducible_core, quasi_backbone, solve_laminar_instance
from support import complete_unit, cycle_unit, digraph


def walk_search_optimum(g, w):
    """Cheapest closed walk from 0 covering every vertex, by Dijkstra over (vertex, visited) states."""
    full = (1 << g.n) - 1
    best = {(0, 1): Fraction(0)}
    heap = [(Fraction(0), 0, 1)]
    while heap:
        cost, v, seen = heapq.heappop(heap)
        if (v, seen) == (0, full):
            return cost
        if cost > best[(v, seen)]:
            continue
        for e in g.out_edges(v):
            state = (e.head, seen | (1 << e.head))
            c = cost + w[e.id]
            if state not in best or c < best[state]:
                best[state] = c
                heapq.heappush(heap, (c, *state))
    return None


def test_three_cycle_is_optimal():
    g, w = cycle_unit(3)
    report = approx_atsp(g, w)
    assert report.weight == 3 and report.hk_value == 3 and report.ratio == 1
    assert verify_tour(g, report.tour) == []


def test_tiny_graphs():
    g = digraph(1, [])
    report = approx_atsp(g, {})
    assert report.weight == 0 and report.tour.walk == ()
    g = digraph(2, [(0, 1), (1, 0)])
    report = approx_atsp(g, {0: Fraction(5), 1: Fraction(5)})
    assert report.weight == 10


def test_rejects_bad_input():
    g = digraph(3, [(0, 1), (1, 2)])
    with pytest.raises(SolveError):
        approx_atsp(g, {0: Fraction(1), 1: Fraction(1)})
    g, w = cycle_unit(3)
    w[0] = Fraction(-1)
    with pytest.raises(SolveError):
        approx_atsp(g, w)


def test_brute_force_allows_revisits():
    # star around 0: every tour must come back through the hub
    g = digraph(4, [(0, 1), (1, 0), (0, 2), (2, 0), (0, 3), (3, 0)])
    w = {e.id: Fraction(1) for e in g.edges}
    opt, walk = brute_force_atsp(g, w)
    assert opt == 6 == walk_search_optimum(g, w)
    assert verify_tour(g, walk) == []
    assert sum(w[e] for e in walk) == opt


def test_brute_force_matches_walk_search():
    for seed in range(40):
        n = random.Random(seed).randint(2, 6)
        g, w = random_digraph(n, seed, density=0.4)
        opt, walk = brute_force_atsp(g, w)
        assert opt == walk_search_optimum(g, w)
        assert sum(w[e] for e in walk) == opt


def test_ordering_on_random_instances():
    for seed in range(25):
        n = random.Random(seed).randint(3, 7)
        g, w = random_digraph(n, seed)
        report = approx_atsp(g, w)
        opt, _ = brute_force_atsp(g, w)
        assert report.hk_value <= opt <= report.weight <= report.bound * report.hk_value
        assert verify_tour(g, report.tour) == []


def test_verify_tour_flags_problems():
    g = digraph(4, [(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)])
    assert "coverage: some vertex is not visited" in verify_tour(g, [0, 1])
    assert any(p.startswith("Eulerian") for p in verify_tour(g, [0, 4]))
    assert any(p.startswith("connected") for p in verify_tour(g, [0, 1, 2, 3]))
    assert verify_tour(g, [99]) == ["edges: unknown edge id"]


def test_nested_gadget_recurses_once():
    inst, names = nested_irreducible()
    assert inst.value(frozenset(range(6))) == 66
    tour, stats = solve_laminar_instance(inst)
    assert stats.irr_recursions == 1
    assert verify_tour(inst.g, tour) == []
    assert inst.cost(tour.edges) <= SolverConfig().ratio * inst.total_value()


def test_quasi_backbone_and_vertebrate_bounds():
    cfg = SolverConfig()
    inst, _ = nested_irreducible()
    backbone = quasi_backbone(inst, cfg)
    assert inst.cost(backbone.edges) <= (cfg.nu + 3) * inst.total_value()
    assert inst.lb_bar(backbone) <= (1 - cfg.delta) * inst.total_value()
    missed = [k for k, r in inst.laminar.sets.items() if len(r) >= 2 and not r & backbone.vertices]
    assert [inst.laminar.sets[k] for k in missed] == [frozenset({4, 5})]
    contracted, _ = contract_many(inst, missed)
    moved = as_subtour(contracted.g, backbone.edges)
    tour = _Solver(cfg).a_ver(contracted, moved)
    assert len(tour.vertices) == contracted.n
    bound = cfg.kappa * contracted.total_value() + cfg.eta * contracted.lb_bar(moved) + contracted.cost(moved.edges)
    assert contracted.cost(tour.edges) <= bound


def test_irreducible_core_on_complete_graph():
    g, w = complete_unit(4)
    _, _, inst = instance_from_graph(g, w)
    core = irreducible_core(inst, SolverConfig().delta)
    assert core.total_value() <= inst.total_value()


def test_config_constants():
    cfg = SolverConfig()
    assert cfg.rho == Fraction(3337, 56)
    assert cfg.ratio == Fraction(83425, 154)
    with pytest.raises(ValueError):
        SolverConfig(delta=Fraction(1, 2))
    with pytest.raises(ValueError):
        SolverConfig(epsilon=0)


def test_invariant_failure_writes_dump(tmp_path, monkeypatch):
    import atsp_approx.pipeline as pipeline

    def broken(self, i, depth=0):
        raise InvariantViolation("a-lam", "forced")

    monkeypatch.setattr(pipeline._Solver, "a_lam", broken)
    g, w = complete_unit(3)
    with pytest.raises(InvariantViolation) as info:
        approx_atsp(g, w, SolverConfig(dump_dir=str(tmp_path)))
    assert info.value.dump_path.startswith(str(tmp_path))
