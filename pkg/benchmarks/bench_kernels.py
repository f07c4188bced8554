"""Time the propagation kernel under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]

Each case propagates a batch of uncertainty nodes through a piecewise-constant
schedule, with and without the per-step derivatives used by the gradient.
The first numba call compiles (or loads from cache) and is excluded.
"""

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from smolyak_qc._accel import HAVE_NUMBA
from smolyak_qc.kernels import propagate_nodes

# (label, dim, nodes, steps, channels)
CASES = [
    ("single-qubit K3 d2, 2000 exps", 2, 13, 2000, 2),
    ("three-axis K3 d3, 10000 exps", 2, 25, 10000, 2),
    ("five-uncertainty K3 d5, 100 segs", 2, 61, 100, 2),
    ("five-uncertainty dense 5^5, 100 segs", 2, 3125, 100, 2),
    ("cnot K3 d2, 100 segs", 4, 13, 100, 4),
]


def random_hermitian(rng, shape, dim):
    A = rng.normal(size=shape + (dim, dim)) + 1j * rng.normal(size=shape + (dim, dim))
    return 0.5 * (A + np.swapaxes(A.conj(), -1, -2))


def timed(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--csv", help="also write the table as CSV")
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if not HAVE_NUMBA:
        print("numba not installed: timing the numpy backend only", file=sys.stderr)
    rng = np.random.default_rng(0)
    rows = []
    for label, dim, n, steps, nch in CASES:
        h_static = random_hermitian(rng, (n,), dim)
        ctrl = random_hermitian(rng, (n, nch), dim)
        amps = rng.normal(size=(steps, nch))
        tau = 0.05
        for grad in (False, True):
            if grad and n * steps > 200_000:
                continue  # derivative tensor would be several GB
            results = {}
            for b in backends:
                propagate_nodes(h_static[:1], ctrl[:1], amps[:2], tau, grad, b)  # warm up / compile
                results[b] = timed(lambda: propagate_nodes(h_static, ctrl, amps, tau, grad, b), args.repeat)
            dev = 0.0
            if len(backends) == 2:
                Ua, Da = propagate_nodes(h_static, ctrl, amps, tau, grad, "numpy")
                Ub, Db = propagate_nodes(h_static, ctrl, amps, tau, grad, "numba")
                dev = float(np.abs(Ua - Ub).max())
                if grad:
                    dev = max(dev, float(np.abs(Da - Db).max()))
            rows.append({
                "case": label,
                "gradient": grad,
                "numpy_s": results["numpy"],
                "numba_s": results.get("numba", float("nan")),
                "speedup": results["numpy"] / results.get("numba", float("nan")),
                "max_abs_dev": dev,
            })

    print(f"{'case':40s} {'grad':>5s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max dev':>9s}")
    for r in rows:
        print(f"{r['case']:40s} {str(r['gradient']):>5s} {r['numpy_s']:10.4f} {r['numba_s']:10.4f} "
              f"{r['speedup']:8.1f} {r['max_abs_dev']:9.1e}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
