"""Time the compiled and pure-Python pivot kernels on the same programs.

    python3 benchmarks/bench_simplex.py [--sizes 20 60 120] [--repeats 3]

Each program is solved by both backends; the pivot counts must agree, which
confirms they follow the same path.
"""

import argparse
import time

import numpy as np

from psiontic.lpopt import LinearProgram, solve_lp
from psiontic.lpopt._backend import get_kernel


def random_program(n: int, seed: int) -> LinearProgram:
    rng = np.random.default_rng(seed)
    m_eq, m_ub = n // 4, n // 2
    x0 = rng.uniform(0, 1, n)
    A_eq = rng.normal(size=(m_eq, n))
    A_ub = rng.normal(size=(m_ub, n))
    return LinearProgram(rng.normal(size=n), "max", A_eq, A_eq @ x0, A_ub, A_ub @ x0 + rng.uniform(0, 1, m_ub),
                         np.zeros(n), np.full(n, 3.0))


def bclm_program():
    """The overlap-maximising fit behind one seeded family audit."""
    from psiontic.bclm import construct_family, family_fragment, random_response_family
    from psiontic.lpopt import fitting

    fam = construct_family()
    table, _ = random_response_family(fam, 42)
    captured = []
    original = fitting.solve_lp

    def capture(lp, **kw):
        captured.append(lp)
        return original(lp, **kw)

    fitting.solve_lp = capture
    try:
        fitting.max_total_overlap_fit(family_fragment(fam), table, [("phi", n) for n in fam.names])
    finally:
        fitting.solve_lp = original
    return max(captured, key=lambda lp: lp.n)


def timed(lp, backend, repeats):
    best, iters = float("inf"), None
    for _ in range(repeats):
        t = time.perf_counter()
        sol = solve_lp(lp, backend=backend)
        best = min(best, time.perf_counter() - t)
        iters = sol.iterations
    return best, iters


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 60, 120])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--no-bclm", action="store_true", help="skip the family-audit program")
    args = ap.parse_args()
    try:
        get_kernel("cython")
    except ImportError:
        raise SystemExit("compiled kernel not available; build with `pip install -e . --no-build-isolation`")

    cases = [(f"random n={n}", random_program(n, n)) for n in args.sizes]
    if not args.no_bclm:
        cases.append(("bclm audit fit", bclm_program()))
    print(f"{'program':<18} {'vars':>6} {'pivots':>7} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for name, lp in cases:
        tp, ip = timed(lp, "python", args.repeats)
        tc, ic = timed(lp, "cython", args.repeats)
        if ip != ic:
            raise SystemExit(f"{name}: backends took different pivot paths ({ip} vs {ic})")
        print(f"{name:<18} {lp.n:>6} {ip:>7} {tp:>10.4f} {tc:>10.4f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
