"""Compare the numba and numpy kernel paths.

Two parts:

* micro: each fused kernel on flat buffers, both implementations called
  directly in this process (numba compile time excluded);
* solve: whole CTD / NCTD solves in fresh subprocesses with
  ``TRACENORM_TUCKER_NUMBA`` set to ``1`` and ``0``.

Usage::

    python3 benchmarks/bench_kernels.py [--size 50] [--repeats 5] [--skip-solve]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from tracenorm_tucker import kernels

SOLVE_SNIPPET = """
import time, sys
from tracenorm_tucker import SynthSpec, gen_tucker, ctd_decompose, nctd_decompose, backend
n = int(sys.argv[1])
_, t, _ = gen_tucker(SynthSpec((n, n, n), 5, 0.02, seed=0))
ctd_decompose(t); nctd_decompose(t, (6, 6, 6))  # warm-up and JIT
best = {}
for name, fn in (("ctd", lambda: ctd_decompose(t)), ("nctd", lambda: nctd_decompose(t, (6, 6, 6)))):
    times = []
    for _ in range(int(sys.argv[2])):
        s = time.perf_counter(); fn(); times.append(time.perf_counter() - s)
    best[name] = min(times)
print(backend(), best["ctd"], best["nctd"])
"""


def micro(size, repeats):
    if not kernels.USE_NUMBA:
        print("numba backend unavailable; micro benchmark skipped")
        return
    rng = np.random.default_rng(0)
    n = size**3
    x, y, m, t = (rng.standard_normal(n) for _ in range(4))
    ms, ys = rng.standard_normal((3, n)), rng.standard_normal((3, n))
    cases = {
        "prox_average": lambda f: f(x, y, m, 0.5, 1.1, -1.0),
        "consensus_average": lambda f: f(ms, ys, t, x, 0.5, 100.0, 1.1),
        "dual_step": lambda f: f(y.copy(), x, m, 0.5),
        "diff_norm": lambda f: f(x, m),
    }
    print(f"micro ({size}^3 = {n} entries, best of {repeats})")
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, call in cases.items():
        f_np = getattr(kernels, f"_{name}_np")
        f_nb = getattr(kernels, f"_{name}_nb")
        call(f_nb)  # compile
        t_np = min(timeit.repeat(lambda: call(f_np), number=10, repeat=repeats)) / 10
        t_nb = min(timeit.repeat(lambda: call(f_nb), number=10, repeat=repeats)) / 10
        print(f"{name:<20}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")


def solve(size, repeats):
    print(f"\nsolve ({size}^3, rank 5, best of {repeats})")
    print(f"{'backend':<10}{'ctd s':>10}{'nctd s':>10}")
    for flag in ("0", "1"):
        env = dict(os.environ, TRACENORM_TUCKER_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", SOLVE_SNIPPET, str(size), str(repeats)],
            env=env, capture_output=True, text=True, check=True,
        )
        name, ctd_s, nctd_s = out.stdout.split()
        print(f"{name:<10}{float(ctd_s):>10.3f}{float(nctd_s):>10.3f}")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=50)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--skip-solve", action="store_true")
    args = p.parse_args(argv)
    micro(args.size, args.repeats)
    if not args.skip_solve:
        solve(args.size, args.repeats)


if __name__ == "__main__":
    main()
