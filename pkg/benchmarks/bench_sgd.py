"""Compare the compiled SGD kernel against the numpy fallback.

    python3 benchmarks/bench_sgd.py [--rows 20000] [--repeat 5]

Times one epoch of each kernel on identical inputs, checks the parameters
agree, and reports the speedup.
"""
import argparse
import timeit

import numpy as np

from fairsemi import _sgd_py

try:
    from fairsemi._sgd import sgd_epoch as cython_epoch
except ImportError:
    cython_epoch = None


def bench(rows: int, dims: int, batch: int, hinge: int, repeat: int) -> tuple[float, float | None, float]:
    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.normal(size=(rows, dims)))
    y = rng.integers(0, 2, rows).astype(np.float64)
    order = rng.permutation(rows).astype(np.int64)

    def run(kernel):
        w = np.zeros(dims)
        b = kernel(X, y, w, 0.0, order, 0.05, 1e-4, batch, hinge)
        return w, b

    t_py = min(timeit.repeat(lambda: run(_sgd_py.sgd_epoch), number=1, repeat=repeat))
    if cython_epoch is None:
        return t_py, None, float("nan")
    t_cy = min(timeit.repeat(lambda: run(cython_epoch), number=1, repeat=repeat))
    (w_py, b_py), (w_cy, b_cy) = run(_sgd_py.sgd_epoch), run(cython_epoch)
    diff = max(float(np.max(np.abs(w_py - w_cy))), abs(b_py - b_cy))
    return t_py, t_cy, diff


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if cython_epoch is None:
        print("compiled kernel not built; timing the numpy fallback only")
    print(f"{'loss':<9}{'d':>4}{'batch':>7}{'numpy ms':>11}{'cython ms':>11}{'speedup':>9}{'max |diff|':>12}")
    for hinge in (0, 1):
        for dims in (2, 20, 100):
            for batch in (1, 64):
                t_py, t_cy, diff = bench(args.rows, dims, batch, hinge, args.repeat)
                loss = "hinge" if hinge else "logistic"
                if t_cy is None:
                    print(f"{loss:<9}{dims:>4}{batch:>7}{t_py * 1e3:>11.2f}{'-':>11}{'-':>9}{'-':>12}")
                else:
                    print(f"{loss:<9}{dims:>4}{batch:>7}{t_py * 1e3:>11.2f}{t_cy * 1e3:>11.2f}"
                          f"{t_py / t_cy:>8.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
