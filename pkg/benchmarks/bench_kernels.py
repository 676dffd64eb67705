"""Compare the compiled prox kernel against the NumPy fallback.

Two views: a microbenchmark of prox_power itself over array sizes and
exponents, and a wall-clock comparison of a full solve run once per
backend in a subprocess (backend selection happens at import time, so a
fresh interpreter with SPARSEREG_PURE_PYTHON set is the only honest way
to time the fallback end to end).

Usage: python3 benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from sparsereg._kernels import _prox_py

try:
    from sparsereg._kernels import _prox_cy
except ImportError:
    _prox_cy = None

SIZES = (10_000, 100_000, 1_000_000)
EXPONENTS = (1.0, 1.5, 2.0)
REPEATS = 5

SOLVE_SNIPPET = """
import time
import numpy as np
import sparsereg

inst = sparsereg.generate_problem(
    "diagonal", 512, sparsity=8, q=1.5, p=2, seed=0
)
data = sparsereg.add_noise(inst.clean_data, 1e-3, 1)
start = time.perf_counter()
report = sparsereg.solve_instance(inst, data, 1e-3, tol=1e-12, max_iter=200000)
elapsed = time.perf_counter() - start
print(f"{sparsereg.KERNEL_BACKEND} backend: {elapsed:.3f}s, "
      f"{report.iterations} iterations, objective {report.objective:.6e}")
"""


def _time_call(func, *args):
    best = float("inf")
    for _ in range(REPEATS):
        start = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - start)
    return best


def micro():
    print("prox_power microbenchmark (best of %d)" % REPEATS)
    header = f"{'size':>9}  {'q':>4}  {'compiled':>10}  {'numpy':>10}  {'speedup':>7}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(0)
    for size in SIZES:
        z = rng.standard_normal(size)
        thresh = rng.uniform(0.01, 0.5, size)
        for q in EXPONENTS:
            t_py = _time_call(_prox_py.prox_power, z, thresh, q)
            if _prox_cy is None:
                print(f"{size:>9}  {q:>4}  {'missing':>10}  {t_py:>9.4f}s  {'':>7}")
                continue
            t_cy = _time_call(_prox_cy.prox_power, z, thresh, q)
            out_cy = _prox_cy.prox_power(z, thresh, q)
            out_py = _prox_py.prox_power(z, thresh, q)
            worst = float(np.max(np.abs(out_cy - out_py))) if size else 0.0
            print(
                f"{size:>9}  {q:>4}  {t_cy:>9.4f}s  {t_py:>9.4f}s  "
                f"{t_py / t_cy:>6.1f}x  (max diff {worst:.1e})"
            )


def end_to_end():
    print("\nfull solve, one subprocess per backend")
    for pure in ("0", "1"):
        env = dict(os.environ, SPARSEREG_PURE_PYTHON=pure)
        proc = subprocess.run(
            [sys.executable, "-c", SOLVE_SNIPPET],
            env=env,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            raise SystemExit(proc.returncode)
        print(proc.stdout.strip())


if __name__ == "__main__":
    micro()
    end_to_end()
