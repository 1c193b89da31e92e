"""Throughput comparison: compiled kernels vs the pure-Python fallback,
plus the stopping-set estimator against naive resimulation.

Run from the repository root after an editable install:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --episodes 2000000 --threads 8

Both backends are imported directly, so the comparison runs in one
process regardless of RECTGILBERT_BACKEND.
"""

import argparse
import math
import random
import time

import numpy as np

from rectgilbert import backend, fullsim
from rectgilbert import _kernels_py

try:
    from rectgilbert import _kernels
except ImportError:
    _kernels = None


def _time(fn, *args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def bench_episode_fill(mod, count: int, q: float, n_cap: int) -> float:
    out = np.empty(count, dtype=np.int32)
    return _time(mod.episode_fill, 1, 0, count, q, n_cap, out)


def bench_half_fill(mod, count: int, q: float, lam: float) -> float:
    out_len = np.empty(count, dtype=np.float64)
    out_steps = np.empty(count, dtype=np.int32)
    return _time(mod.half_fill, 1, 0, count, q, lam, out_len, out_steps)


def kernel_report(args) -> None:
    print(f"active backend: {backend.backend_name()}"
          f" (compiled available: {backend.have_compiled()})")
    print()
    header = f"{'kernel':<14}{'backend':<10}{'n':>10}{'time':>10}{'rate':>14}"
    print(header)
    print("-" * len(header))
    rows = [("episode_fill", bench_episode_fill, (0.5, args.n_cap)),
            ("half_fill", bench_half_fill, (0.5, 1.0))]
    for name, fn, extra in rows:
        times = {}
        for mod, label, count in (
            (_kernels, "compiled", args.episodes),
            (_kernels_py, "python", args.episodes_py),
        ):
            if mod is None:
                continue
            dt = fn(mod, count, *extra)
            times[label] = (dt, count)
            print(f"{name:<14}{label:<10}{count:>10}{dt:>9.3f}s"
                  f"{count / dt:>12.0f}/s")
        if len(times) == 2:
            (tc, nc), (tp, np_) = times["compiled"], times["python"]
            print(f"{'':<14}{'speedup':<10}{'':>10}{'':>10}"
                  f"{(nc / tc) / (np_ / tp):>13.0f}x")
    print()


def stopping_set_report(args) -> None:
    """Work needed for h̄_1..h̄_3 at matched standard error.

    One stopping-set run yields every h̄_n at once; the naive estimator
    redraws n seeds per repetition for each n separately, so its cost is
    paid per index.  Both are timed to the standard error the
    stopping-set run achieves at --episodes.
    """
    n_eps = args.episodes
    t0 = time.perf_counter()
    est = fullsim.estimate(n_eps, 0.5, n_cap=args.n_cap, master_seed=1,
                           threads=args.threads)
    t_stop = time.perf_counter() - t0
    print(f"stopping-set: {n_eps} episodes in {t_stop:.3f}s "
          f"(all h̄_n simultaneously)")
    rng = random.Random(1)
    total_naive = 0.0
    for n in (1, 2, 3):
        p = float(est.h_hat[n])
        se = math.sqrt(p * (1 - p) / n_eps)
        # Same binomial variance per repetition, so matching the s.e.
        # means matching the repetition count.
        reps = min(n_eps, args.naive_cap)
        t0 = time.perf_counter()
        fullsim.naive_h_hat(n, reps, 0.5, rng)
        dt = time.perf_counter() - t0
        scaled = dt * n_eps / reps
        total_naive += scaled
        print(f"  naive h̄_{n}: {reps} reps in {dt:.3f}s -> "
              f"{scaled:.1f}s projected for s.e. {se:.2e}")
    print(f"naive total (h̄_1..h̄_3 only): {total_naive:.1f}s projected, "
          f"{total_naive / t_stop:.0f}x the stopping-set run")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=1_000_000,
                    help="episode/sample count for the compiled kernels")
    ap.add_argument("--episodes-py", type=int, default=20_000,
                    help="count for the pure-Python kernels")
    ap.add_argument("--n-cap", type=int, default=2048)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--naive-cap", type=int, default=20_000,
                    help="repetition ceiling for the naive estimator "
                         "(its projected full cost is extrapolated)")
    args = ap.parse_args()
    kernel_report(args)
    stopping_set_report(args)


if __name__ == "__main__":
    main()
