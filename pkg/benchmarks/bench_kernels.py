"""Time the walk kernels: compiled path vs pure numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py --trials 4000 --s 4000

Both implementations are timed on identical inputs and their outputs are
cross-checked for bit-identical agreement, which is the contract the
fallback promises.  Setting RELQ_DISABLE_NUMBA=1 switches the library to
the numpy path at import time; this script reports what is available.
"""

import argparse
import time

import numpy as np

from relq import _kernels


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=4000)
    parser.add_argument("--s", type=int, default=4000, help="circular domain size (even)")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if args.s % 2:
        parser.error("--s must be even")

    rng = np.random.default_rng(args.seed)
    increments = rng.standard_normal((args.trials, args.s // 2))
    print(f"kernel inputs: trials={args.trials} s={args.s} repeats={args.repeats}")
    print(f"numba available: {_kernels.HAS_NUMBA}")

    values_np = None
    rows = []
    for name, np_fn, nb_fn, make_args in (
        ("canonical_values", _kernels._canonical_values_np, "_canonical_values_nb", lambda: (increments,)),
        ("trace_stats", _kernels._trace_stats_np, "_trace_stats_nb", lambda: (values_np, 1.0)),
    ):
        call_args = make_args()
        t_np, out_np = best_of(np_fn, call_args, args.repeats)
        if name == "canonical_values":
            values_np = out_np
        if _kernels.HAS_NUMBA:
            nb = getattr(_kernels, nb_fn)
            nb(*call_args)  # compile outside the timed region
            t_nb, out_nb = best_of(nb, call_args, args.repeats)
            if isinstance(out_np, tuple):
                match = all(np.array_equal(a, b) for a, b in zip(out_np, out_nb))
            else:
                match = np.array_equal(out_np, out_nb)
            rows.append((name, t_np, t_nb, t_np / t_nb, match))
        else:
            rows.append((name, t_np, None, None, True))

    header = f"{'kernel':<18}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}{'bit-identical':>16}"
    print(header)
    print("-" * len(header))
    all_match = True
    for name, t_np, t_nb, speedup, match in rows:
        all_match = all_match and match
        if t_nb is None:
            print(f"{name:<18}{t_np:>12.4f}{'n/a':>12}{'n/a':>10}{'n/a':>16}")
        else:
            print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{speedup:>9.2f}x{str(match):>16}")
    if not all_match:
        print("ERROR: implementations disagree")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
