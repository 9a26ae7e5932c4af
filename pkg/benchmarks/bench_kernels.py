"""Compare the compiled and pure-Python integration kernels.

    python benchmarks/bench_kernels.py [--samples N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from green500kit import kernels


def workloads(n: int):
    rng = np.random.default_rng(0)
    t = np.cumsum(rng.uniform(0.5, 1.5, n))
    p = rng.uniform(200, 1600, n)
    span = t[-1] - t[0]
    starts = np.linspace(t[0] + 0.1 * span, t[0] + 0.74 * span, 1000 + 1)
    intervals = np.sort(rng.uniform(t[0], t[-1], (2000, 2)), axis=1)

    def scalar_energy(mod):
        for a, b in intervals:
            mod.interval_energy(t, p, a, b)

    def sweep(mod):
        cum = mod.cumulative_energy(t, p)
        mod.window_energies(t, p, cum, starts, 0.16 * span)

    def interp(mod):
        mod.interp(t, p, starts)

    return {"interval_energy x2000": scalar_energy, "cumulative+window sweep": sweep,
            "interp x1001": interp}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"trace samples: {args.samples}; backends: {', '.join(backends)}")
    print(f"{'workload':28s}" + "".join(f"{b:>14s}" for b in backends) + "     speedup")
    for name, fn in workloads(args.samples).items():
        times = {b: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
                 for b, mod in backends.items()}
        row = f"{name:28s}" + "".join(f"{times[b] * 1e3:12.2f}ms" for b in backends)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
