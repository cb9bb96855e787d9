"""End-to-end approximation: Held-Karp, laminar instance, reductions, tour."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Mapping

from .errors import InvariantViolation, SolveError, check
from .graph import (
    EMPTY_SUBTOUR,
    Digraph,
    EdgeMultiset,
    Subtour,
    as_subtour,
    eulerian_components,
    is_strongly_connected,
)
from .heldkarp import extract_laminar_dual, solve_held_karp
from .instance import Instance, build_instance, fraction_text, verify_instance
from .laminar import contract, contract_many, induce, is_reducible, lift, lift_many, make_contractible, max_DS, short_path
from .merge import run as merge_run
from .spc_singleton import solve_spc_singleton
from .vertebrate import solve_spc_vertebrate


@dataclass(frozen=True)
class SolverConfig:
    delta: Fraction = Fraction(78, 100)
    epsilon: Fraction = Fraction(1, 4)
    trace: Callable[[dict], None] | None = None
    dump_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if not Fraction(1, 2) < self.delta < 1:
            raise ValueError("delta must lie strictly between 1/2 and 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def nu(self) -> Fraction:
        """Guarantee for singleton instances."""
        return 18 + self.epsilon

    @property
    def kappa(self) -> Fraction:
        return Fraction(2)

    @property
    def eta(self) -> Fraction:
        # merge bound 9(1+eps)*alpha with alpha = 4, plus the lb term of beta
        return 1 + 9 * (1 + self.epsilon) * 4

    @property
    def rho(self) -> Fraction:
        return (self.kappa + self.eta * (1 - self.delta) + self.nu + 3) / (2 * self.delta - 1)

    @property
    def ratio(self) -> Fraction:
        return 2 * self.rho / (1 - self.delta)

    @property
    def singleton_epsilon(self) -> Fraction:
        # 9 (1 + eps/18) * 2 = 18 + eps
        return self.epsilon / 18


@dataclass
class SolveStats:
    lam_levels: int = 0
    irr_recursions: int = 0
    max_depth: int = 0
    merge_runs: int = 0
    reinits: int = 0
    merge_rounds: int = 0
    hk_rounds: int = 0
    lp_pivots: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SolveReport:
    tour: Subtour
    weight: Fraction
    hk_value: Fraction
    ratio: Fraction
    bound: Fraction
    stats: SolveStats = field(default_factory=SolveStats)

    def to_dict(self, human: bool = False) -> dict:
        out = {
            "tour": list(self.tour.walk),
            "weight": fraction_text(self.weight),
            "hk_value": fraction_text(self.hk_value),
            "ratio": fraction_text(self.ratio),
            "bound": fraction_text(self.bound),
            "stats": self.stats.as_dict(),
        }
        if human:
            out["decimal"] = {
                "weight": float(self.weight),
                "hk_value": float(self.hk_value),
                "ratio": float(self.ratio),
                "bound": float(self.bound),
            }
        return out


class _Solver:
    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.stats = SolveStats()

    def _trace(self, stage: str):
        if self.cfg.trace is None:
            return None
        sink = self.cfg.trace
        return lambda record: sink({"stage": stage, **record})

    def _merge(self, i, backbone, oracle, alpha, beta, eps, stage):
        res = merge_run(i, backbone, oracle, alpha, beta, eps, trace=self._trace(stage))
        self.stats.merge_runs += 1
        self.stats.reinits += res.reinits
        self.stats.merge_rounds += res.rounds
        return res.tour

    def singleton_tour(self, i: Instance) -> Subtour:
        check(i.is_singleton(), "singleton", "instance is not singleton")
        tour = self._merge(
            i, EMPTY_SUBTOUR, lambda ii, _b, cl: solve_spc_singleton(ii, cl), 2, 0,
            self.cfg.singleton_epsilon, "singleton",
        )
        check(i.cost(tour.edges) <= self.cfg.nu * i.total_value(), "singleton", "tour exceeds nu * value")
        return tour

    def a_ver(self, i: Instance, backbone: Subtour) -> Subtour:
        if len(backbone.vertices) == i.n:
            return backbone
        if not backbone.vertices:
            return self.singleton_tour(i)
        beta = 2 * i.total_value() + i.lb_bar(backbone)
        tour = self._merge(
            i, backbone, lambda ii, bb, cl: solve_spc_vertebrate(ii, bb, cl), 4, beta,
            self.cfg.epsilon, "vertebrate",
        )
        bound = self.cfg.kappa * i.total_value() + self.cfg.eta * i.lb_bar(backbone) + i.cost(backbone.edges)
        check(i.cost(tour.edges) <= bound, "a-ver", "tour exceeds the vertebrate-pair bound")
        return tour

    def quasi_backbone(self, i: Instance) -> Subtour:
        cfg = self.cfg
        stage = "quasi-backbone"
        maximal = [k for k in i.laminar.maximal() if len(i.laminar.sets[k]) >= 2]
        contracted, records = contract_many(i, maximal)
        tour = self.singleton_tour(contracted)
        lifted = lift_many(records, tour) if records else tour
        walk = list(lifted.walk)
        g = i.g
        for k in maximal:
            s = i.laminar.sets[k]
            m = len(walk)
            p = next(t for t in range(m) if g.edge(walk[t]).head in s and g.edge(walk[t]).tail not in s)
            walk = walk[p:] + walk[:p]
            q = next(t for t in range(1, m) if g.edge(walk[t]).tail in s and g.edge(walk[t]).head not in s)
            u, v = g.edge(walk[0]).head, g.edge(walk[q]).tail
            _, u_max, v_max = max_DS(i, s)
            segment = short_path(i, s, u, u_max) + short_path(i, s, u_max, v_max) + short_path(i, s, v_max, v)
            walk = [walk[0]] + segment + walk[q:]
        backbone = as_subtour(g, EdgeMultiset(walk))
        check(i.cost(backbone.edges) <= (cfg.nu + 3) * i.total_value(), stage, "backbone is too heavy")
        unvisited = {k for k, r in i.laminar.sets.items() if not r & backbone.vertices}
        for k in maximal:
            s = i.laminar.sets[k]
            missed = sum((2 * i.laminar.y[j] for j in unvisited if i.laminar.sets[j] < s), Fraction(0))
            if missed > (1 - cfg.delta) * i.value(s):
                raise SolveError(f"irreducibility precondition violated at set {k}")
        missed = sum((2 * i.laminar.y[j] for j in unvisited), Fraction(0))
        if missed > (1 - cfg.delta) * i.total_value():
            raise SolveError("irreducibility precondition violated: not a quasi-backbone")
        return backbone

    def a_irr(self, i: Instance, depth: int = 0) -> Subtour:
        cfg = self.cfg
        stage = "a-irr"
        self.stats.max_depth = max(self.stats.max_depth, depth)
        backbone = self.quasi_backbone(i)
        unvisited = {k: r for k, r in i.laminar.sets.items() if not r & backbone.vertices}
        top = sorted(
            k for k, r in unvisited.items()
            if len(r) >= 2 and not any(r < q for q in unvisited.values())
        )
        pieces = EdgeMultiset()
        for k in top:
            induced, _ = induce(i, k)
            self.stats.irr_recursions += 1
            t_s = self.a_irr(induced, depth + 1)
            pieces = pieces + make_contractible(i, k, t_s, induced)
        contracted, records = contract_many(i, top)
        moved = as_subtour(contracted.g, backbone.edges)
        check(contracted.cost(moved.edges) == i.cost(backbone.edges), stage, "contraction changed the backbone weight")
        check(contracted.lb_bar(moved) <= (1 - cfg.delta) * i.total_value(), stage, "too much lower bound off the backbone")
        t_prime = self.a_ver(contracted, moved)
        head = cfg.kappa + cfg.eta * (1 - cfg.delta) + cfg.nu + 3
        check(contracted.cost(t_prime.edges) <= head * i.total_value(), stage, "vertebrate tour exceeds its share")
        lifted = lift_many(records, t_prime) if records else t_prime
        tour = as_subtour(i.g, lifted.edges + pieces)
        check(len(tour.vertices) == i.n, stage, "result does not visit every vertex")
        check(i.cost(tour.edges) <= cfg.rho * i.total_value(), stage, "tour exceeds rho * value")
        return tour

    def a_lam(self, i: Instance, depth: int = 0) -> Subtour:
        cfg = self.cfg
        stage = "a-lam"
        self.stats.max_depth = max(self.stats.max_depth, depth)
        sets = i.laminar.sets
        reducible = [k for k in i.laminar.non_singletons() if is_reducible(i, k, cfg.delta)]
        if not reducible:
            return self.a_irr(i, depth)
        minimal = [k for k in reducible if not any(sets[j] < sets[k] for j in reducible)]
        k = min(minimal, key=lambda k: (len(sets[k]), k))
        self.stats.lam_levels += 1
        induced, _ = induce(i, k)
        t_s = self.a_irr(induced, depth + 1)
        check(induced.cost(t_s.edges) <= 2 * cfg.rho * i.value(sets[k]), stage, "inner tour exceeds 2 rho value(S)")
        pieces = make_contractible(i, k, t_s, induced)
        child, rec = contract(i, k)
        t_child = self.a_lam(child, depth + 1)
        lifted = lift(rec, t_child)
        tour = as_subtour(i.g, lifted.edges + pieces)
        check(len(tour.vertices) == i.n, stage, "result does not visit every vertex")
        check(i.cost(tour.edges) <= cfg.ratio * i.total_value(), stage, "tour exceeds the final ratio")
        return tour


def _tiny_tour(g: Digraph, w: Mapping[int, Fraction]) -> Subtour:
    if g.n == 1:
        return EMPTY_SUBTOUR
    picks = []
    for a, b in ((0, 1), (1, 0)):
        options = [e for e in g.out_edges(a) if e.head == b]
        if not options:
            raise SolveError("graph is not strongly connected")
        picks.append(min(options, key=lambda e: (w[e.id], e.id)).id)
    return as_subtour(g, EdgeMultiset(picks))


def _dump(cfg: SolverConfig, g: Digraph, w, err: InvariantViolation) -> str:
    payload = {
        "stage": err.stage,
        "message": str(err),
        "n": g.n,
        "edges": [
            {"id": e.id, "tail": e.tail, "head": e.head, "w": fraction_text(w[e.id])}
            for e in sorted(g.edges, key=lambda e: e.id)
        ],
        "delta": fraction_text(cfg.delta),
        "epsilon": fraction_text(cfg.epsilon),
    }
    directory = cfg.dump_dir or tempfile.gettempdir()
    os.makedirs(directory, exist_ok=True)
    fd, path = tempfile.mkstemp(prefix="atsp-dump-", suffix=".json", dir=directory)
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
    return path


def approx_atsp(g: Digraph, w: Mapping[int, Fraction], cfg: SolverConfig | None = None) -> SolveReport:
    cfg = cfg or SolverConfig()
    w = {eid: Fraction(v) for eid, v in w.items()}
    if any(v < 0 for v in w.values()):
        raise SolveError("weights must be nonnegative")
    if g.n == 0:
        raise SolveError("empty graph")
    if not is_strongly_connected(g):
        raise SolveError("graph is not strongly connected")
    if g.n <= 2:
        tour = _tiny_tour(g, w)
        weight = sum((w[e] * k for e, k in tour.edges.items()), Fraction(0))
        return SolveReport(tour, weight, weight, Fraction(1), cfg.ratio)
    solver = _Solver(cfg)
    try:
        hk = solve_held_karp(g, w)
        solver.stats.hk_rounds = hk.rounds
        solver.stats.lp_pivots = hk.pivots
        dual = extract_laminar_dual(g, w, hk)
        inst = build_instance(g, w, hk, dual)
        problems = verify_instance(inst)
        check(not problems, "instance", "; ".join(problems))
        tour = solver.a_lam(inst)
        stats = solver.stats
        check(
            stats.lam_levels + stats.irr_recursions <= len(inst.laminar.non_singletons()),
            "pipeline", "too many recursive calls",
        )
        tour = as_subtour(g, tour.edges)
        weight = sum((w[e] * k for e, k in tour.edges.items()), Fraction(0))
        check(weight == inst.cost(tour.edges), "pipeline", "tour weight differs from its induced weight")
        problems = verify_tour(g, tour.edges)
        check(not problems, "pipeline", "; ".join(problems))
        check(weight <= cfg.ratio * hk.value, "pipeline", "tour exceeds the approximation guarantee")
    except InvariantViolation as err:
        err.dump_path = _dump(cfg, g, w, err)
        raise
    ratio = weight / hk.value if hk.value else Fraction(1)
    return SolveReport(tour, weight, hk.value, ratio, cfg.ratio, solver.stats)


def irreducible_core(i: Instance, delta: Fraction) -> Instance:
    """Contract minimal reducible sets until none is left."""
    while True:
        sets = i.laminar.sets
        reducible = [k for k in i.laminar.non_singletons() if is_reducible(i, k, delta)]
        if not reducible:
            return i
        minimal = [k for k in reducible if not any(sets[j] < sets[k] for j in reducible)]
        i, _ = contract(i, min(minimal, key=lambda k: (len(sets[k]), k)))


def instance_from_graph(g: Digraph, w: Mapping[int, Fraction]):
    """Held-Karp solution, laminar dual and the induced instance for a weighted digraph."""
    hk = solve_held_karp(g, w)
    dual = extract_laminar_dual(g, w, hk)
    return hk, dual, build_instance(g, w, hk, dual)


def quasi_backbone(i: Instance, cfg: SolverConfig | None = None) -> Subtour:
    return _Solver(cfg or SolverConfig()).quasi_backbone(i)


def solve_laminar_instance(i: Instance, cfg: SolverConfig | None = None) -> tuple[Subtour, SolveStats]:
    """Run the reduction chain directly on a laminarly-weighted instance (no Held-Karp step)."""
    cfg = cfg or SolverConfig()
    problems = verify_instance(i)
    if problems:
        raise SolveError("invalid instance: " + "; ".join(problems))
    solver = _Solver(cfg)
    tour = solver.a_lam(i)
    check(
        solver.stats.lam_levels + solver.stats.irr_recursions <= len(i.laminar.non_singletons()),
        "pipeline", "too many recursive calls",
    )
    problems = verify_tour(i.g, tour.edges)
    check(not problems, "pipeline", "; ".join(problems))
    check(i.cost(tour.edges) <= cfg.ratio * i.total_value(), "pipeline", "tour exceeds the approximation guarantee")
    return tour, solver.stats


def verify_tour(g: Digraph, t) -> list[str]:
    """Failed tour checks; empty when ``t`` is a closed walk through every vertex."""
    f = t.edges if isinstance(t, Subtour) else EdgeMultiset(t)
    problems = []
    if any(not g.has_edge(e) for e in f):
        return ["edges: unknown edge id"]
    if not f.is_eulerian(g):
        problems.append("Eulerian: in-degree differs from out-degree")
        return problems
    comps = eulerian_components(g, f)
    if len(comps) > 1:
        problems.append("connected: more than one closed walk")
    covered = set().union(*(c.vertices for c in comps)) if comps else set()
    if g.n > 1 and len(covered) < g.n:
        problems.append("coverage: some vertex is not visited")
    return problems


def brute_force_atsp(g: Digraph, w: Mapping[int, Fraction]) -> tuple[Fraction, list[int]]:
    """Optimal closed walk through every vertex, by subset DP on the metric closure."""
    n = g.n
    if n > 10:
        raise ValueError("brute force is limited to 10 vertices")
    if n <= 1:
        return Fraction(0), []
    inf = None
    dist = [[inf] * n for _ in range(n)]
    via: list[list[list[int] | None]] = [[None] * n for _ in range(n)]
    for v in range(n):
        dist[v][v], via[v][v] = Fraction(0), []
    for e in sorted(g.edges, key=lambda e: e.id):
        c = Fraction(w[e.id])
        if e.tail != e.head and (dist[e.tail][e.head] is None or c < dist[e.tail][e.head]):
            dist[e.tail][e.head], via[e.tail][e.head] = c, [e.id]
    for k in range(n):
        for a in range(n):
            if dist[a][k] is None:
                continue
            for b in range(n):
                if dist[k][b] is None:
                    continue
                c = dist[a][k] + dist[k][b]
                if dist[a][b] is None or c < dist[a][b]:
                    dist[a][b], via[a][b] = c, via[a][k] + via[k][b]
    if any(d is None for row in dist for d in row):
        raise SolveError("graph is not strongly connected")
    full = (1 << n) - 1
    best: dict[tuple[int, int], tuple[Fraction, int]] = {(1, 0): (Fraction(0), -1)}
    for size in range(1, n):
        for rest in combinations(range(1, n), size):
            mask = 1
            for v in rest:
                mask |= 1 << v
            for v in rest:
                prev_mask = mask & ~(1 << v)
                cand = None
                for u in range(n):
                    got = best.get((prev_mask, u))
                    if got is None:
                        continue
                    c = got[0] + dist[u][v]
                    if cand is None or c < cand[0]:
                        cand = (c, u)
                if cand is not None:
                    best[(mask, v)] = cand
    end = min(range(1, n), key=lambda v: (best[(full, v)][0] + dist[v][0], v))
    total = best[(full, end)][0] + dist[end][0]
    order = [end]
    mask, v = full, end
    while True:
        _, u = best[(mask, v)]
        mask &= ~(1 << v)
        if u == 0:
            break
        order.append(u)
        v = u
    order = [0] + order[::-1] + [0]
    walk: list[int] = []
    for a, b in zip(order, order[1:]):
        walk += via[a][b]
    return total, walk
