"""Time the numba metric kernels against the pure-numpy fallback.

Training rewards and the brute-force permutation oracle call these
kernels once per ranking, so the interesting number is per-call latency
on small arrays, not throughput on huge ones.  Both backends are checked
for numerical agreement on every workload before timing.

Run:  python3 benchmarks/kernel_backends.py [--calls 2000] [--repeats 5]
"""

import argparse
import sys
import time

import numpy as np

from marldiv.metrics import _kernels_numpy

try:
    from marldiv.metrics import _kernels_numba
except ImportError:
    print("numba backend not importable; nothing to compare", file=sys.stderr)
    sys.exit(1)

SHAPES = ((10, 5), (30, 20), (100, 50))
ALPHA = 0.5


def workloads(rng, n, m, count):
    """Random binary judgment matrices with matching random rankings."""
    Js, orders = [], []
    while len(Js) < count:
        J = (rng.random((n, m)) < 0.3).astype(np.int8)
        if not J.any():
            continue
        Js.append(np.ascontiguousarray(J))
        orders.append(rng.permutation(n).astype(np.int64))
    return Js, orders


def check_agreement(Js, orders, n):
    k = n // 2 + 1
    for J, order in zip(Js, orders):
        pairs = (
            (_kernels_numpy.alpha_dcg_at_k(order, J, ALPHA, k),
             _kernels_numba.alpha_dcg_at_k(order, J, ALPHA, k)),
            (_kernels_numpy.err_ia_at_k(order, J, k),
             _kernels_numba.err_ia_at_k(order, J, k)),
            (_kernels_numpy.s_recall_at_k(order, J, k),
             _kernels_numba.s_recall_at_k(order, J, k)),
        )
        for a, b in pairs:
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
        np.testing.assert_array_equal(
            _kernels_numpy.greedy_ideal_order(J, ALPHA),
            _kernels_numba.greedy_ideal_order(J, ALPHA),
        )


def best_time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--calls", type=int, default=2000, help="kernel calls per timing")
    parser.add_argument("--repeats", type=int, default=5, help="timings per cell, best wins")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    rows = []
    for n, m in SHAPES:
        Js, orders = workloads(rng, n, m, args.calls)
        k = n // 2 + 1
        check_agreement(Js[:50], orders[:50], n)

        kernels = {
            "alpha_dcg_at_k": lambda mod: [
                mod.alpha_dcg_at_k(o, J, ALPHA, k) for J, o in zip(Js, orders)
            ],
            "err_ia_at_k": lambda mod: [
                mod.err_ia_at_k(o, J, k) for J, o in zip(Js, orders)
            ],
            "s_recall_at_k": lambda mod: [
                mod.s_recall_at_k(o, J, k) for J, o in zip(Js, orders)
            ],
            "greedy_ideal_order": lambda mod: [
                mod.greedy_ideal_order(J, ALPHA) for J in Js
            ],
        }
        for name, run in kernels.items():
            run(_kernels_numba)  # trigger the JIT before timing
            t_np = best_time(lambda: run(_kernels_numpy), args.repeats)
            t_nb = best_time(lambda: run(_kernels_numba), args.repeats)
            rows.append(
                (
                    name,
                    f"n={n} m={m}",
                    1e6 * t_np / args.calls,
                    1e6 * t_nb / args.calls,
                    t_np / t_nb,
                )
            )

    print(
        f"metric kernels, per-call microseconds "
        f"(best of {args.repeats} x {args.calls} calls)\n"
    )
    header = f"{'kernel':<20}{'shape':<12}{'numpy_us':>10}{'numba_us':>10}{'speedup':>9}"
    print(header)
    for name, shape, us_np, us_nb, speedup in rows:
        print(f"{name:<20}{shape:<12}{us_np:>10.2f}{us_nb:>10.2f}{speedup:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
