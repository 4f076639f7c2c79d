#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs each hot kernel on a level-5 icosphere latitude and prints a timing
table.  The numpy path is always available; the numba rows appear when the
backend is importable (first call includes JIT compilation, so a warmup
round runs beforehand).
"""

import time

import numpy as np

from sphereflow import kernels
from sphereflow._backend import HAS_NUMBA
from sphereflow.mesh import build_icosphere
from sphereflow.surface import embed_latitude

LEVEL = 5
REPEATS = 30


def timeit(fn, *args, repeats=REPEATS):
    fn(*args)                                  # warmup / JIT
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def main():
    mesh = build_icosphere(LEVEL)
    lat = embed_latitude(mesh, 3, 0.3)
    pos = np.ascontiguousarray(lat.positions)
    faces = mesh.faces
    nv = mesh.n_vertices
    edges = mesh.edges
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((nv, 2))
    inv = 1.0 / rng.uniform(0.5, 2.0, size=edges.shape[0])

    rows = []
    rows.append(("cotan_mc_terms (mixed)",
                 timeit(kernels._cotan_mc_terms_numpy, pos, faces, nv, True),
                 timeit(kernels._cotan_mc_terms_numba, pos, faces, nv, True)
                 if HAS_NUMBA else None))
    rows.append(("spherical_face_areas",
                 timeit(kernels._spherical_face_areas_numpy, pos, faces),
                 timeit(kernels._spherical_face_areas_numba, pos, faces)
                 if HAS_NUMBA else None))
    rows.append(("max_pair_quotient",
                 timeit(kernels._max_pair_quotient_numpy, vals,
                        edges[:, 0], edges[:, 1], inv),
                 timeit(kernels._max_pair_quotient_numba, vals,
                        edges[:, 0], edges[:, 1], inv)
                 if HAS_NUMBA else None))

    print(f"level {LEVEL} icosphere: {nv} vertices, {faces.shape[0]} faces")
    print(f"{'kernel':30s} {'numpy':>12s} {'numba':>12s} {'speedup':>9s}")
    for name, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:30s} {t_np * 1e3:10.3f}ms {'n/a':>12s}")
        else:
            print(f"{name:30s} {t_np * 1e3:10.3f}ms {t_nb * 1e3:10.3f}ms "
                  f"{t_np / t_nb:8.1f}x")
    if not HAS_NUMBA:
        print("numba not importable: only the numpy path was timed")


if __name__ == "__main__":
    main()
