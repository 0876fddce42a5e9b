"""Compare the numba and numpy kernel backends.

Kernel timings call both implementations in-process on the same inputs and
check that they agree. The end-to-end timing runs a spheroid capacity solve
in a subprocess per backend, since the backend is fixed at import time.

    python benchmarks/bench_kernels.py [--quick] [--json out.json]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from cfpenrose import _kernels as K

E2E = """
import time
from cfpenrose.geometry import make_spheroid, boundary_quadrature
from cfpenrose.solver import SolverSpec, capacity
d = make_spheroid(2.0, 1.0)
capacity(d, boundary_quadrature(d, 12), SolverSpec(resolution=12, residual_threshold=1.0))
t = time.perf_counter()
c = capacity(d, boundary_quadrature(d, {N}), SolverSpec(resolution={N}, residual_threshold=1e-4))
print(time.perf_counter() - t, c.value)
"""


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(sizes, n, repeat):
    rng = np.random.default_rng(1)
    p = n - 2
    rows = []
    for m, k in sizes:
        x = rng.normal(size=(m, n)) * 3.0
        y = rng.normal(size=(k, n)) * 0.3
        nu = rng.normal(size=(m, n))
        nu /= np.linalg.norm(nu, axis=1)[:, None]
        c = rng.normal(size=k)
        cases = {
            "potential_matrix": (lambda: K.potential_matrix_numba(x, y, p),
                                 lambda: K.potential_matrix_numpy(x, y, float(p))),
            "normal_derivative_matrix": (lambda: K.normal_derivative_matrix_numba(x, nu, y, p),
                                         lambda: K.normal_derivative_matrix_numpy(x, nu, y, float(p))),
            "evaluate": (lambda: K.evaluate_numba(x, y, c, p)[1],
                         lambda: K.evaluate_numpy(x, y, c, float(p))[1]),
        }
        for name, (fa, fb) in cases.items():
            a, b = fa(), fb()  # also triggers compilation
            err = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
            ta, tb = best(fa, repeat), best(fb, repeat)
            rows.append({"kernel": name, "targets": m, "sources": k, "numba_s": ta,
                         "numpy_s": tb, "speedup": tb / ta, "rel_diff": err})
    return rows


def bench_solve(N):
    out = {}
    for backend, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, CFPENROSE_PURE_NUMPY=flag)
        res = subprocess.run([sys.executable, "-c", E2E.format(N=N)], env=env,
                             capture_output=True, text=True, check=True)
        t, cap = res.stdout.split()
        out[backend] = {"seconds": float(t), "capacity": float(cap)}
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)
    if K.nb is None:
        sys.exit("numba is not importable; nothing to compare")
    sizes = [(500, 200), (2000, 800)] if args.quick else [(500, 200), (2000, 800), (8000, 2000)]
    rows = bench_kernels(sizes, args.dim, 3 if args.quick else 5)
    print(f"{'kernel':<26}{'targets':>8}{'sources':>8}{'numba ms':>11}{'numpy ms':>11}{'speedup':>9}{'rel diff':>11}")
    for r in rows:
        print(f"{r['kernel']:<26}{r['targets']:>8}{r['sources']:>8}{1e3 * r['numba_s']:>11.2f}"
              f"{1e3 * r['numpy_s']:>11.2f}{r['speedup']:>9.1f}{r['rel_diff']:>11.1e}")
    solve = bench_solve(16 if args.quick else 24)
    print("spheroid capacity solve:", ", ".join(f"{k} {v['seconds']:.2f} s" for k, v in solve.items()),
          f"(capacity difference {abs(solve['numba']['capacity'] - solve['numpy']['capacity']):.1e})")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"kernels": rows, "solve": solve}, fh, indent=1)


if __name__ == "__main__":
    main()
