"""Benchmark of the compiled kernels against the pure-python twins.

Run with:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

import ewlab._pykernels as pk

try:
    import ewlab._ckernels as ck
except ImportError:
    ck = None


def timeit(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n = 20_000
    dt = 1e-3
    print(f"{'kernel':<14} {'python':>10} {'compiled':>10} {'speedup':>8}"
          f" {'max |diff|':>12}")

    # EL flow
    args = (0.4 + 0.2j, 0.1 - 0.3j, 0.05, 1.0 + 0j, 0.1, n, dt)
    tp, outp = timeit(pk.el_rk4, *args)
    if ck:
        tc, outc = timeit(ck.el_rk4, *args)
        diff = max(np.abs(a - b).max() for a, b in zip(outp, outc))
        print(f"{'el_rk4':<14} {tp:>9.4f}s {tc:>9.4f}s {tp / tc:>7.1f}x"
              f" {diff:>12.3e}")

    # transfer matrix over an a-grid
    q_half = outp[0][: 2 * (n // 4) + 1]
    grid = (np.linspace(-2, 2, 9)[:, None]
            + 1j * np.linspace(-2, 2, 9)[None, :]).ravel()
    tp, Hp = timeit(pk.transfer_rk4, q_half, grid, dt)
    if ck:
        tc, Hc = timeit(ck.transfer_rk4, q_half, grid, dt)
        print(f"{'transfer_rk4':<14} {tp:>9.4f}s {tc:>9.4f}s {tp / tc:>7.1f}x"
              f" {np.abs(Hp - Hc).max():>12.3e}")

    # profile reconstruction
    req = 0.1 * np.sin(np.linspace(0, 6, 2 * n + 1))
    g0 = np.array([1.0, 0.0, 0.0, 0.0])
    d0 = np.array([0.0, 0.0, 0.0, 1.0])
    tp, outp = timeit(pk.profile_rk4, g0, d0, req, 1, 1, dt)
    if ck:
        tc, outc = timeit(ck.profile_rk4, g0, d0, req, 1, 1, dt)
        diff = max(np.abs(a - b).max() for a, b in zip(outp, outc))
        print(f"{'profile_rk4':<14} {tp:>9.4f}s {tc:>9.4f}s {tp / tc:>7.1f}x"
              f" {diff:>12.3e}")

    if ck is None:
        print("compiled extension unavailable; python timings only:"
              f" el={tp:.4f}s")


if __name__ == "__main__":
    main()
