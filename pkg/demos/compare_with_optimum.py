"""Solve small random instances and compare against the exact optimum.

Usage: python3 demos/compare_with_optimum.py [count]
"""

import sys

from atsp_approx import approx_atsp, brute_force_atsp, generate


def main(count: int = 20):
    worst = 0.0
    print(f"{'seed':>4} {'n':>2} {'HK':>8} {'OPT':>6} {'ALG':>6} {'ALG/OPT':>8}")
    for seed in range(count):
        n = 3 + seed % 6
        g, w = generate("random", n, seed)
        report = approx_atsp(g, w)
        opt, _ = brute_force_atsp(g, w)
        ratio = float(report.weight / opt) if opt else 1.0
        worst = max(worst, ratio)
        print(f"{seed:>4} {n:>2} {float(report.hk_value):>8.2f} {float(opt):>6} {float(report.weight):>6} {ratio:>8.3f}")
    print(f"worst ALG/OPT: {worst:.3f}; guaranteed bound: {float(report.bound):.2f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 20)
