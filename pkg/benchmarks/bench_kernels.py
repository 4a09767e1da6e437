"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--d 2 5 10] [--repeat 2000]

Kernel timings call both modules directly. The end-to-end timing runs one
experiment per backend in a subprocess, since the backend is picked at import.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from tslab import _pykernels

try:
    from tslab import _ckernels
except ImportError:
    _ckernels = None

END_TO_END = """
import time
from tslab.harness import ExperimentConfig, run_experiment
cfg = ExperimentConfig(d={d}, N=20, T={T}, seed=1)
start = time.perf_counter()
run_experiment(cfg)
print(time.perf_counter() - start)
"""


def kernel_cases(mod, d, rng):
    A = rng.standard_normal((d, d))
    B = np.eye(d) + A @ A.T / d
    Binv = np.linalg.inv(B)
    L = mod.cholesky_factor(B)
    x = rng.standard_normal(d)
    x /= 2 * np.linalg.norm(x)
    X = rng.standard_normal((20, d)) / (2 * np.sqrt(d))
    z = rng.standard_normal(d)
    return {
        "rank_one_update": lambda: mod.rank_one_update(B.copy(), x),
        "sherman_morrison_update": lambda: mod.sherman_morrison_update(Binv.copy(), x),
        "cholesky_factor": lambda: mod.cholesky_factor(B),
        "cholesky_rank_one_update": lambda: mod.cholesky_rank_one_update(L.copy(), x),
        "cho_solve": lambda: mod.cho_solve(L, x),
        "mvn_draw": lambda: mod.mvn_draw(x, 0.3, L, z),
        "quad_widths": lambda: mod.quad_widths(X, Binv),
    }


def time_call(fn, repeat):
    return min(timeit.repeat(fn, number=repeat, repeat=3)) / repeat * 1e6


def end_to_end(backend, d, T):
    env = dict(os.environ, TSLAB_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(d=d, T=T)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, nargs="+", default=[2, 5, 10])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--T", type=int, default=5000, help="horizon for the end-to-end run")
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled extension not built; only the fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'d':>4}{'python us':>12}{'cython us':>12}{'speedup':>9}")
    for d in args.d:
        py = kernel_cases(_pykernels, d, rng)
        cy = kernel_cases(_ckernels, d, rng) if _ckernels else {}
        for name, fn in py.items():
            t_py = time_call(fn, args.repeat)
            if name in cy:
                t_cy = time_call(cy[name], args.repeat)
                print(f"{name:<26}{d:>4}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>8.1f}x")
            else:
                print(f"{name:<26}{d:>4}{t_py:>12.2f}{'-':>12}{'-':>9}")

    print(f"\nend-to-end run, N=20, T={args.T}")
    for d in args.d:
        t_py = end_to_end("python", d, args.T)
        line = f"  d={d:<3} python {t_py:7.2f}s"
        if _ckernels is not None:
            t_cy = end_to_end("cython", d, args.T)
            line += f"   cython {t_cy:7.2f}s   {t_py / t_cy:.1f}x"
        print(line)


if __name__ == "__main__":
    main()
