"""Benchmark: compiled wave-stepping kernels vs the pure-NumPy fallback.

Usage: python benchmarks/bench_solver.py [--scale desk4] [--repeats 3]
"""

import argparse
import time

import numpy as np

from sosgen.geometry import make_scale
from sosgen.phantom import gen_ellipsoids
from sosgen.solver import has_compiled_kernels, simulate


def run(scale: str, repeats: int):
    grid, transducer, _ = make_scale(scale)
    sample = gen_ellipsoids(1234, grid)
    backends = ["python"] + (["cython"] if has_compiled_kernels() else [])
    print(f"scale={scale}  grid={grid.nz}x{grid.nx}  steps={grid.n_time_steps}  "
          f"channels={transducer.n_channels}")
    results = {}
    for backend in backends:
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            frame = simulate(sample, grid, transducer, backend=backend)
            times.append(time.perf_counter() - start)
        best = min(times)
        cells = (grid.nz + 40) * (grid.nx + 40)
        rate = cells * grid.n_time_steps / best / 1e6
        results[backend] = (best, frame)
        print(f"  {backend:7s}  best {best:7.2f} s   {rate:8.1f} Mcell-steps/s")
    if len(results) == 2:
        py, cy = results["python"][0], results["cython"][0]
        same = np.array_equal(results["python"][1].samples, results["cython"][1].samples)
        print(f"  speedup {py / cy:.2f}x   outputs bit-identical: {same}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", default="desk4",
                        choices=["desk2", "desk4", "desk8"])
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    run(args.scale, args.repeats)


if __name__ == "__main__":
    main()
