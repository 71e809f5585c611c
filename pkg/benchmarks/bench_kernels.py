"""Compare the compiled and NumPy kernel backends.

Times the raw kernels and full per-query decisions of NN and PVRC (which use
the kernels) plus LRC (which does not) at q=3072, M=100 classes, 8
prototypes per class.

    python benchmarks/bench_kernels.py [--repeat 200]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from pvrc import classifier, kernels
from pvrc.baselines import LinearRegression, NearestNeighbor
from pvrc.data import class_arrays, synth_subspace_dataset


def _time(fn, repeat):
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return statistics.median(samples) * 1e-9


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    samples = synth_subspace_dataset(100, 9, 5, 3072, 0.05, args.seed, offset_scale=100.0, coeff_scale=30.0)
    groups = {c: X[:8] for c, X in class_arrays(samples).items()}
    tests = [X[8] for X in class_arrays(samples).values()]
    x = tests[0]

    pv = classifier.PvrcClassifier().fit(groups)
    nn = NearestNeighbor().fit(groups)
    lrc = LinearRegression().fit(groups)
    protos = pv._protos

    print(f"q=3072, M=100, n=8; median of {args.repeat} runs; active backend: {kernels.BACKEND}")
    print(f"{'backend':<10}{'sq_dists':>12}{'pvrc_xi':>12}{'NN query':>12}{'PVRC query':>12}{'LRC query':>12}")
    for name in kernels.available_backends():
        impl = kernels.load_backend(name)
        t_sq = _time(lambda: impl.sq_dists(x, protos), args.repeat)
        t_xi = _time(lambda: impl.pvrc_xi(x, protos, pv._starts, pv._qinv, pv._qinv_starts, pv._scales, pv._shift), args.repeat)
        saved = (kernels.sq_dists, kernels.class_min_sq_dists, kernels.pvrc_xi)
        kernels.sq_dists, kernels.class_min_sq_dists, kernels.pvrc_xi = (
            impl.sq_dists, impl.class_min_sq_dists, impl.pvrc_xi)
        try:
            t_nn = _time(lambda: nn.decide(x), args.repeat)
            t_pv = _time(lambda: pv.decide(x), args.repeat)
        finally:
            kernels.sq_dists, kernels.class_min_sq_dists, kernels.pvrc_xi = saved
        t_lrc = _time(lambda: lrc.decide(x), max(args.repeat // 10, 5))
        print(f"{name:<10}{t_sq * 1e3:>10.3f}ms{t_xi * 1e3:>10.3f}ms{t_nn * 1e3:>10.3f}ms"
              f"{t_pv * 1e3:>10.3f}ms{t_lrc * 1e3:>10.3f}ms")
    agree = [np.allclose(kernels.load_backend(b).pvrc_xi(x, protos, pv._starts, pv._qinv, pv._qinv_starts, pv._scales, pv._shift),
                         pv.xi(x), rtol=1e-10) for b in kernels.available_backends()]
    print("backends agree on xi:", all(agree))


if __name__ == "__main__":
    main()
