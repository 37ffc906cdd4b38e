"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best wall time of each kernel per backend and the speed-up.
"""

import argparse
import math
import timeit

import numpy as np

from irswarm import _kernels_py
from irswarm.kernels import compiled_module


def _cases():
    rng = np.random.default_rng(0)
    segs = rng.uniform(-300, 300, size=(40, 4))
    discs = np.column_stack([rng.uniform(-200, 200, size=(10, 2)), np.full(10, 15.0)])
    angles = np.linspace(-math.pi, math.pi, 540, endpoint=False)
    return {
        "cast_rays (540 rays, 40 segments, 10 discs)":
            lambda m: m.cast_rays(0.0, 0.0, angles, segs, discs, 1000.0),
        "channel_match (20k attempts, 6x6)":
            lambda m: m.channel_match(6, 6, 2, 3, 20_000, 200, 2000, 1),
        "splitmix64 (10k draws)":
            lambda m: _draws(m, 10_000),
    }


def _draws(m, n):
    s = 1
    for _ in range(n):
        s, _ = m.splitmix64(s)
    return s


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    compiled = compiled_module()
    if compiled is None:
        print("compiled extension not built; timing the Python fallback only")
    print(f"{'kernel':48s} {'python':>10s} {'cython':>10s} {'speed-up':>9s}")
    for name, fn in _cases().items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        if compiled is None:
            print(f"{name:48s} {t_py * 1e3:9.2f}ms {'-':>10s} {'-':>9s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        print(f"{name:48s} {t_py * 1e3:9.2f}ms {t_c * 1e3:9.2f}ms {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
