"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from dcsnet import kernels
from dcsnet.network import build_line_network, consensus_weights


def bench(label, fn, repeat):
    times = timeit.repeat(fn, number=1, repeat=repeat)
    return label, min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = kernels.available_backends()
    rng = np.random.default_rng(0)
    weights = consensus_weights(build_line_network(100, 10))
    W = rng.normal(size=(100, 20))
    batch = rng.normal(size=(50, 100, 20))
    z = rng.normal(size=4096) + 1j * rng.normal(size=4096)

    cases = [
        ("consensus N=100 M=20 I=400", lambda b: kernels.line_consensus(W, 10, weights.step_size, 400, backend=b)),
        ("consensus batch 50 I=400", lambda b: kernels.line_consensus(batch, 10, weights.step_size, 400, backend=b)),
        ("soft threshold n=4096 x1000", lambda b: [kernels.soft_threshold(z, 0.5, backend=b) for _ in range(1000)]),
    ]
    print(f"{'case':32s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases:
        row = {b: bench(name, lambda b=b: fn(b), args.repeat)[1] for b in backends}
        line = f"{name:32s}" + "".join(f"{row[b] * 1e3:10.2f}ms" for b in backends)
        if "cython" in row and "python" in row:
            line += f"{row['python'] / row['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
