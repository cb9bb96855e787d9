"""Command-line front end.

Exit codes: 0 success, 1 solve error, 2 parse error, 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from .errors import InvariantViolation, SolveError
from .formats import ParseError, parse_instance
from .generators import GADGETS, KINDS, generate
from .graph import Digraph
from .instance import fraction_text, parse_fraction
from .pipeline import (
    SolverConfig,
    approx_atsp,
    brute_force_atsp,
    instance_from_graph,
    irreducible_core,
    quasi_backbone,
)

EXIT_SOLVE, EXIT_PARSE, EXIT_INVARIANT = 1, 2, 3


def _fraction_arg(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational p/q: {text!r}") from None


def _emit(data, human: bool = False) -> None:
    if human:
        print(json.dumps(data, sort_keys=True, indent=2))
    else:
        print(json.dumps(data, sort_keys=True, separators=(",", ":")))


def _config(args, trace=None) -> SolverConfig:
    return SolverConfig(delta=args.delta, epsilon=args.epsilon, trace=trace, dump_dir=args.dump_dir)


def _load(args) -> tuple[Digraph, dict[int, Fraction]]:
    if args.generate:
        if args.input:
            raise ParseError("give either an input file or --generate, not both")
        return generate(args.generate, args.n, args.seed)
    if not args.input:
        raise ParseError("no input: pass a file path, '-' for stdin, or --generate KIND")
    if args.input == "-":
        return parse_instance(sys.stdin, args.format)
    try:
        return parse_instance(args.input, args.format)
    except OSError as err:
        raise ParseError(str(err)) from None


def _cmd_solve(args) -> int:
    g, w = _load(args)
    sink = open(args.trace, "w") if args.trace else None
    trace = None
    if sink is not None:
        def trace(record):
            sink.write(json.dumps(record, sort_keys=True) + "\n")
    try:
        report = approx_atsp(g, w, _config(args, trace))
    finally:
        if sink is not None:
            sink.close()
    _emit(report.to_dict(args.human), args.human)
    return 0


def _cmd_hk(args) -> int:
    g, w = _load(args)
    hk, _, _ = instance_from_graph(g, w)
    data = {
        "value": fraction_text(hk.value),
        "x": {str(e): fraction_text(v) for e, v in sorted(hk.x.items()) if v},
        "cuts": len(hk.cuts),
        "rounds": hk.rounds,
    }
    if args.human:
        data["decimal"] = float(hk.value)
    _emit(data, args.human)
    return 0


def _cmd_dual(args) -> int:
    g, w = _load(args)
    hk, dual, _ = instance_from_graph(g, w)
    data = {
        "objective": fraction_text(dual.objective()),
        "hk_value": fraction_text(hk.value),
        "family": [
            {"id": k, "set": sorted(dual.family[k]), "y": fraction_text(dual.y[k])}
            for k in sorted(dual.family)
        ],
        "alpha": {str(v): fraction_text(a) for v, a in sorted(dual.alpha.items())},
    }
    _emit(data, args.human)
    return 0


def _cmd_backbone(args) -> int:
    g, w = _load(args)
    cfg = _config(args)
    _, _, inst = instance_from_graph(g, w)
    core = irreducible_core(inst, cfg.delta)
    backbone = quasi_backbone(core, cfg)
    data = {
        "walk": list(backbone.walk),
        "vertices": sorted(backbone.vertices),
        "core_vertices": core.n,
        "weight": fraction_text(core.cost(backbone.edges)),
        "value": fraction_text(core.total_value()),
        "lb_off_backbone": fraction_text(core.lb_bar(backbone)),
    }
    _emit(data, args.human)
    return 0


def _compare_row(job):
    kind, n, seed, delta, epsilon = job
    g, w = generate(kind, n, seed)
    report = approx_atsp(g, w, SolverConfig(delta=delta, epsilon=epsilon))
    opt, _ = brute_force_atsp(g, w)
    return {
        "n": n,
        "seed": seed,
        "opt": fraction_text(opt),
        "hk": fraction_text(report.hk_value),
        "alg": fraction_text(report.weight),
        "ratio": fraction_text(report.ratio),
        "opt_ge_hk": opt >= report.hk_value,
        "alg_ge_opt": report.weight >= opt,
        "within_bound": report.weight <= report.bound * report.hk_value,
    }


def _fan_out(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _cmd_oracle_compare(args) -> int:
    if args.n_max > 10:
        raise SolveError("oracle-compare uses brute force and needs n <= 10")
    jobs = [
        (args.kind, n, seed, args.delta, args.epsilon)
        for n in range(args.n_min, args.n_max + 1)
        for seed in range(args.seed, args.seed + args.seeds)
    ]
    rows = _fan_out(_compare_row, jobs, args.jobs)
    ok = all(r["opt_ge_hk"] and r["alg_ge_opt"] and r["within_bound"] for r in rows)
    worst = max((parse_fraction(r["ratio"]) for r in rows), default=Fraction(0))
    _emit({"rows": rows, "all_ok": ok, "worst_ratio": fraction_text(worst)}, args.human)
    return 0 if ok else EXIT_SOLVE


def _bench_one(job):
    kind, n, seed, delta, epsilon = job
    g, w = generate(kind, n, seed)
    start = time.perf_counter()
    report = approx_atsp(g, w, SolverConfig(delta=delta, epsilon=epsilon))
    return {"seed": seed, "seconds": round(time.perf_counter() - start, 3),
            "ratio": fraction_text(report.ratio), "stats": report.stats.as_dict()}


def _cmd_bench(args) -> int:
    jobs = [(args.kind, args.n, seed, args.delta, args.epsilon) for seed in range(args.seed, args.seed + args.seeds)]
    runs = _fan_out(_bench_one, jobs, args.jobs)
    times = [r["seconds"] for r in runs]
    _emit({
        "kind": args.kind,
        "n": args.n,
        "runs": runs,
        "mean_seconds": round(statistics.fmean(times), 3),
        "max_seconds": max(times),
    }, args.human)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--epsilon", type=_fraction_arg, default=Fraction(1, 4), help="merge slack, as p/q")
    common.add_argument("--delta", type=_fraction_arg, default=Fraction(78, 100), help="reducibility threshold, as p/q")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--human", action="store_true", help="indent output and add decimal approximations")
    common.add_argument("--dump-dir", default=None, help="where to write failure dumps")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("input", nargs="?", help="instance file, or '-' for stdin")
    source.add_argument("--format", choices=("tsplib", "json"), default=None)
    source.add_argument("--generate", choices=KINDS + GADGETS, help="use a generated instance instead of a file")
    source.add_argument("--n", type=int, default=8, help="vertex count for --generate")

    parser = argparse.ArgumentParser(prog="atsp-approx", description="Constant-factor ATSP approximation.")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", parents=[common, source], help="approximate tour as JSON")
    solve.add_argument("--trace", help="write merge-engine events as JSON lines")
    solve.set_defaults(run=_cmd_solve)
    sub.add_parser("hk", parents=[common, source], help="Held-Karp value and solution").set_defaults(run=_cmd_hk)
    sub.add_parser("dual", parents=[common, source], help="laminar dual").set_defaults(run=_cmd_dual)
    sub.add_parser("backbone", parents=[common, source], help="quasi-backbone of the irreducible core").set_defaults(
        run=_cmd_backbone
    )
    for name, runner, help_text in (
        ("oracle-compare", _cmd_oracle_compare, "compare against brute force over a seed range"),
        ("bench", _cmd_bench, "time end-to-end solves"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--kind", choices=KINDS, default="random" if name == "oracle-compare" else "complete")
        p.add_argument("--seeds", type=int, default=10 if name == "oracle-compare" else 3)
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        if name == "oracle-compare":
            p.add_argument("--n-min", type=int, default=3)
            p.add_argument("--n-max", type=int, default=8)
        else:
            p.add_argument("--n", type=int, default=30)
        p.set_defaults(run=runner)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except InvariantViolation as err:
        path = getattr(err, "dump_path", None)
        print(f"internal invariant failed: {err}", file=sys.stderr)
        if path:
            print(f"dump written to {path}", file=sys.stderr)
        return EXIT_INVARIANT
    except (SolveError, ValueError) as err:
        print(f"solve error: {err}", file=sys.stderr)
        return EXIT_SOLVE


if __name__ == "__main__":
    sys.exit(main())
