"""Compiled vs NumPy kernels: HALS column updates and the running mean.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import logging
import time

import numpy as np
import scipy.sparse as sp

from parley import kernels
from parley.latent import NMFParams, fit_nmf


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    logging.getLogger("parley").setLevel(logging.ERROR)  # fixed sweep count, no convergence expected
    if kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; reinstall with Cython available")

    rng = np.random.default_rng(0)
    cases = []

    for n, k in [(5000, 10), (20000, 30)]:
        W = rng.random((n, k))
        H = rng.random((k, 400))
        X = rng.random((n, 400))
        HHt = np.ascontiguousarray(H @ H.T)
        XHt = np.ascontiguousarray(X @ H.T)
        order = np.arange(k, dtype=np.intp)

        def run(mod, W=W, HHt=HHt, XHt=XHt, order=order):
            mod.hals_update(W.copy(), HHt, XHt, order)

        cases.append((f"hals_update n={n} k={k}", run))

    stream = rng.normal(size=(5000, 300))
    cases.append(("running_mean 5000x300", lambda mod: mod.running_mean(stream)))

    dtm = sp.random(4000, 3000, density=0.005, random_state=1, format="csr")
    params = NMFParams(k=20, max_iter=50, tol=1e-12)
    cases.append(("fit_nmf 4000x3000 k=20, 50 sweeps", lambda mod: fit_nmf(dtm, params, kernel=mod)))

    print(f"{'case':<40}{'numpy (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    for name, fn in cases:
        slow = best_of(lambda: fn(kernels.fallback), args.repeat)
        fast = best_of(lambda: fn(kernels.compiled), args.repeat)
        print(f"{name:<40}{slow:>12.4f}{fast:>12.4f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
