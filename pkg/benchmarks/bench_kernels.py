"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot kernels (combined-loss value, combined-loss gradient,
per-column rank AUC) and the composite weight-search objective
(fuse K matrices + mean AUC) at trainer-batch and dataset scale.

    python3 benchmarks/bench_kernels.py [--repeats 200]

The first numba call triggers JIT compilation (cached on disk afterwards);
compilation happens during warmup and is excluded from the timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ensemblefuse.kernels import numpy_impl

try:
    from ensemblefuse.kernels import numba_impl
except ImportError:
    numba_impl = None


def benchmark(func, n_warmup=3, n_iter=100):
    """Mean wall time per call in milliseconds."""
    for _ in range(n_warmup):
        func()
    start = time.perf_counter()
    for _ in range(n_iter):
        func()
    return (time.perf_counter() - start) / n_iter * 1000.0


def make_problem(rng, n, c):
    probs = rng.random((n, c))
    targets = (rng.random((n, c)) < 0.3).astype(float)
    rho = np.clip(targets.mean(axis=0), 0.01, 0.99)
    return probs, targets, np.exp(1.0 - rho), np.exp(rho)


def column_aucs(impl, values, labels):
    return [impl.rank_auc(np.ascontiguousarray(values[:, j]),
                          np.ascontiguousarray(labels[:, j]))
            for j in range(values.shape[1])]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=100)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    impls = [("numpy", numpy_impl)]
    if numba_impl is not None:
        impls.append(("numba", numba_impl))
    else:
        print("numba unavailable; timing the numpy fallback only")

    cases = []
    for n, c, tag in ((64, 14, "trainer batch"), (3500, 14, "train split"), (20000, 14, "full dataset")):
        probs, targets, w_pos, w_neg = make_problem(rng, n, c)
        cases.append((f"loss_value  {n}x{c} ({tag})",
                      lambda impl, p=probs, t=targets, wp=w_pos, wn=w_neg:
                      impl.loss_value(p, t, wp, wn, 1.0, 4.0, 0.05, 1e-7)))
        cases.append((f"loss_grad   {n}x{c} ({tag})",
                      lambda impl, p=probs, t=targets, wp=w_pos, wn=w_neg:
                      impl.loss_grad(p, t, wp, wn, 1.0, 4.0, 0.05, 1e-7)))

    for n, c, tag in ((500, 14, "val split"), (5000, 14, "full dataset")):
        scores = rng.standard_normal((n, c))
        labels = (rng.random((n, c)) < 0.3).astype(float)
        cases.append((f"rank_auc    {n}x{c} ({tag})",
                      lambda impl, s=scores, y=labels: column_aucs(impl, s, y)))

    # composite weight-search objective: fuse K=3 models, then mean AUC
    k, n, c = 3, 500, 14
    stack = rng.random((k, n, c))
    labels = (rng.random((n, c)) < 0.3).astype(float)
    weights = np.array([0.5, 0.3, 0.2])

    def de_objective(impl):
        fused = np.tensordot(weights, stack, axes=1)
        return np.nanmean(column_aucs(impl, fused, labels))

    cases.append((f"de_objective K={k} {n}x{c} (val split)", de_objective))

    header = f"{'kernel':<42}" + "".join(f"{name:>12}" for name, _ in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, call in cases:
        times = [benchmark(lambda impl=impl: call(impl), n_iter=args.repeats)
                 for _, impl in impls]
        row = f"{label:<42}" + "".join(f"{t:>10.3f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
