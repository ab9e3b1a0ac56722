"""Time the pure-Python and compiled simulation backends on the same runs.

    python3 benchmarks/bench_backends.py [--rounds 20] [--repeat 3]

Also checks that both backends produce identical logs for every timed run.
"""
import argparse
import statistics
import time

from catrust import backend, harness
from catrust.world import WorldConfig


def time_backend(name, cfg, dynamics, seed, repeat):
    times = []
    logs = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        logs = backend.run_simulation(cfg, dynamics, seed, backend=name)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), logs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--experiments", default="3,8,14")
    args = ap.parse_args()

    if "compiled" not in backend.AVAILABLE:
        raise SystemExit("compiled backend not built; run: python3 setup.py build_ext --inplace")

    cfg = WorldConfig(rounds=args.rounds)
    print(f"full-size world, {args.rounds} rounds, median of {args.repeat}")
    print(f"{'exp':>4} {'rows':>7} {'python s':>9} {'compiled s':>11} {'speedup':>8} identical")
    for exp_id in args.experiments.split(","):
        dyn = harness.experiment(exp_id).dynamics
        t_py, py = time_backend("python", cfg, dyn, 1, args.repeat)
        t_cc, cc = time_backend("compiled", cfg, dyn, 1, args.repeat)
        print(f"{exp_id:>4} {len(py):>7} {t_py:>9.3f} {t_cc:>11.4f} {t_py / t_cc:>7.1f}x {py.equals(cc)}")


if __name__ == "__main__":
    main()
