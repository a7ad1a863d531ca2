"""Benchmark the compiled geometry kernel against the numpy fallback.

Times the per-step mesh pass (the flow integrator's hot loop) on icospheres
of increasing resolution, plus one short end-to-end flow run per backend.

Usage: python benchmarks/bench_kernels.py [--levels 3 4 5 6] [--repeats 30]
"""

import argparse
import time

import numpy as np

from hkflow import flow, kernels
from hkflow.mesh import icosphere


def time_call(fn, *args, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_mesh_pass(levels, repeats):
    backends = kernels.available_backends()
    print(f"mesh_pass (best of {repeats}), backends: {', '.join(backends)}")
    header = f"{'level':>6} {'verts':>7} {'faces':>7}"
    for b in backends:
        header += f" {b + ' [ms]':>14}"
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for level in levels:
        mesh = icosphere(level)
        row = f"{level:>6} {mesh.num_vertices:>7} {mesh.num_faces:>7}"
        times = {}
        for b in backends:
            fn = kernels.get_mesh_pass(b)
            fn(mesh.vertices, mesh.faces)  # warm up
            times[b] = time_call(fn, mesh.vertices, mesh.faces, repeats=repeats)
            row += f" {times[b] * 1e3:>14.3f}"
        if len(backends) == 2:
            row += f" {times['python'] / times['cython']:>8.1f}x"
        print(row)


def bench_flow(repeats):
    print(f"\nshort flow run, icosphere(3), k=2, stop_T=0.01 (best of {repeats})")
    mesh = icosphere(3)
    import hkflow.kernels as kmod

    original = kmod.mesh_pass
    for backend in kernels.available_backends():
        fn = kernels.get_mesh_pass(backend)
        kmod.mesh_pass = fn
        try:
            best = time_call(
                lambda: flow.run(mesh, flow.FlowParams(k=2, stop_T=0.01),
                                 alphas=(4.0, 5.0), snapshot_stride=10),
                repeats=repeats,
            )
        finally:
            kmod.mesh_pass = original
        print(f"  {backend:>7}: {best * 1e3:8.1f} ms")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--levels", type=int, nargs="+", default=[3, 4, 5, 6])
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()
    bench_mesh_pass(args.levels, args.repeats)
    bench_flow(max(3, args.repeats // 10))


if __name__ == "__main__":
    main()
