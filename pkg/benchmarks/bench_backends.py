"""Throughput comparison of the compiled and pure-NumPy jet kernels.

The layer-stack (BLAS matmuls) is shared; only the elementwise tanh-jet
transform and its adjoint differ.  Run:

    python benchmarks/bench_backends.py [batch ...]
"""

import sys
import time

import numpy as np

from greenlift._alloc import tune_for_large_batches
from greenlift.net import core, kernels_numpy
from greenlift.net import backend_kernels

try:
    from greenlift.net import _speedups
except ImportError:
    _speedups = None


def timeit(fn, reps=15):
    fn()
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench(batch: int, dims=(3, 5)):
    rng = np.random.default_rng(0)
    for d in dims:
        widths = [(40, d)] + [(40, 40)] * 3 + [(1, 40)]
        ws = [rng.standard_normal(s) for s in widths]
        bs = [rng.standard_normal(w.shape[0]) for w in ws]
        X = rng.uniform(0, 1, size=(batch, d))
        dirs = (1, 2) if d == 3 else (1, 2, 4)
        m = len(dirs)
        vb = rng.standard_normal(batch)
        gb = rng.standard_normal((batch, m))
        hb = rng.standard_normal((batch, m, m))

        rows = []
        for name, kern in (("numpy", kernels_numpy),
                           ("compiled", _speedups) if _speedups else ("compiled", None)):
            if kern is None:
                rows.append((name, float("nan"), float("nan")))
                continue
            backend_kernels.tanh_jet = kern.tanh_jet
            backend_kernels.tanh_jet_vjp = kern.tanh_jet_vjp
            t_f = timeit(lambda: core.jet(ws, bs, X, 2, dirs))
            out, tape = core.jet_tape(ws, bs, X, 2, dirs)
            t_b = timeit(lambda: core.jet_vjp(ws, bs, tape, vb, gb, hb))
            rows.append((name, t_f, t_b))
        print(f"batch={batch} input_dim={d} (4x40 tanh, dirs={dirs}):")
        for name, t_f, t_b in rows:
            print(f"  {name:9s} jet fwd {t_f * 1e3:7.1f} ms ({batch / t_f / 1e3:6.0f}k pts/s)"
                  f"   vjp {t_b * 1e3:7.1f} ms ({batch / t_b / 1e3:6.0f}k pts/s)")
        if len(rows) == 2 and rows[1][1] == rows[1][1]:
            print(f"  speedup: fwd x{rows[0][1] / rows[1][1]:.2f}, "
                  f"vjp x{rows[0][2] / rows[1][2]:.2f}")


if __name__ == "__main__":
    tune_for_large_batches()
    batches = [int(a) for a in sys.argv[1:]] or [1024, 5120]
    for b in batches:
        bench(b)
