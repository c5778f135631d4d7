"""Compare the compiled and pure-Python split kernels.

    python benchmarks/bench_kernels.py [--rows 2000] [--features 8] [--repeat 20]

Times ``best_split`` on one presorted matrix, then a full 100-round GBT fit with
each backend (the fit runs in a subprocess so the backend switch takes effect).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from nurd import _kernels_py

try:
    from nurd import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

FIT_SNIPPET = """
import time, numpy as np
from nurd.models import fit_gbt
rng = np.random.default_rng(0)
X = rng.normal(size=({rows}, {features}))
y = X[:, 0] * 3 + np.sin(X[:, 1]) + rng.normal(size={rows})
t = time.perf_counter(); fit_gbt(X, y); print(time.perf_counter() - t)
"""


def split_case(rows, features, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features))
    r = rng.normal(size=rows)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").astype(np.intp))
    mask = np.ones(rows, dtype=np.uint8)
    return X, r, order, mask


def time_fit(pure, rows, features):
    env = {**os.environ, "NURD_PURE_PYTHON": "1" if pure else "0"}
    out = subprocess.run([sys.executable, "-c", FIT_SNIPPET.format(rows=rows, features=features)],
                         env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args(argv)

    X, r, order, mask = split_case(args.rows, args.features)
    backends = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])
    print(f"best_split on {args.rows} x {args.features}, best of {args.repeat}")
    split_times = {}
    for name, mod in backends:
        t = min(timeit.repeat(lambda: mod.best_split(X, r, order, mask, 5), number=1, repeat=args.repeat))
        split_times[name] = t
        print(f"  {name:>7}: {1e3 * t:8.3f} ms  -> {mod.best_split(X, r, order, mask, 5)}")
    if _kernels_c is None:
        print("compiled extension not built; only the fallback was timed")
        return 0
    print(f"  speedup: {split_times['python'] / split_times['cython']:.1f}x")

    print(f"fit_gbt (100 rounds, depth 3) on {args.rows} x {args.features}")
    fits = {name: time_fit(name == "python", args.rows, args.features) for name, _ in backends}
    for name, t in fits.items():
        print(f"  {name:>7}: {t:8.3f} s")
    print(f"  speedup: {fits['python'] / fits['cython']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
