"""Backend and retrieval benchmarks (also exposed as `realnav bench`)."""

from __future__ import annotations

import math
import time

import numpy as np

from realnav import _kernels
from realnav.fixtures import build_office_grid, random_poses, random_records
from realnav.retrieval import RetrievalConfig, build_index, retrieve


def _time_fields(kernel, nav, sources, ws, wd) -> float:
    start = time.perf_counter()
    for r, c in sources:
        kernel(nav, r, c, ws, wd)
    return time.perf_counter() - start


def bench_kernels(grid_size: int = 100, fields: int = 20, seed: int = 0) -> dict:
    """Time `fields` single-source distance fields per available backend."""
    grid = build_office_grid()
    if grid_size != 100:
        nav = np.ones((grid_size, grid_size), dtype=bool)
        nav[0, :] = nav[-1, :] = False
        nav[:, 0] = nav[:, -1] = False
    else:
        nav = grid.nav
    rng = np.random.Generator(np.random.PCG64(seed))
    navigable = np.argwhere(nav)
    sources = [tuple(navigable[i]) for i in
               rng.integers(0, len(navigable), size=fields)]
    ws = 0.15
    wd = 0.15 * math.sqrt(2.0)
    out = {}
    for name, kernel in _kernels.backends().items():
        kernel(nav, *sources[0], ws, wd)  # warm-up
        out[name] = _time_fields(kernel, nav, sources, ws, wd) / fields
    return out


def _bruteforce_retrieve_id(index, pose) -> int:
    """Full two-step scan over the raw arrays (benchmark reference)."""
    thr = index.config.cos_threshold
    cos = index.u * pose.heading.u + index.v * pose.heading.v
    mask = cos >= thr
    if not mask.any():
        mask = cos == cos.max()
    idx = np.flatnonzero(mask)
    dx = index.x[idx] - pose.x
    dz = index.z[idx] - pose.z
    d2 = dx * dx + dz * dz
    order = np.lexsort((index.ids[idx], d2))
    return int(index.ids[idx[order[0]]])


def bench_retrieval(n_records: int = 100_000, n_queries: int = 200,
                    seed: int = 0) -> dict:
    rng = np.random.Generator(np.random.PCG64(seed))
    index = build_index(random_records(rng, n_records), RetrievalConfig())
    queries = random_poses(rng, n_queries)
    retrieve(index, queries[0])  # warm-up
    start = time.perf_counter()
    for q in queries:
        retrieve(index, q)
    indexed = (time.perf_counter() - start) / n_queries
    start = time.perf_counter()
    for q in queries:
        _bruteforce_retrieve_id(index, q)
    brute = (time.perf_counter() - start) / n_queries
    return {"indexed": indexed, "bruteforce": brute}


def run_benchmark(grid_size: int = 100, fields: int = 20,
                  n_records: int = 100_000, n_queries: int = 200,
                  seed: int = 0) -> str:
    lines = [f"active kernel backend: {_kernels.BACKEND}"]
    kern = bench_kernels(grid_size=grid_size, fields=fields, seed=seed)
    for name, secs in sorted(kern.items()):
        lines.append(
            f"distance field {grid_size}x{grid_size} [{name:8s}] "
            f"{secs * 1e3:9.3f} ms/field"
        )
    if "compiled" in kern and "pure" in kern:
        lines.append(
            f"speedup compiled vs pure: {kern['pure'] / kern['compiled']:.1f}x"
        )
    ret = bench_retrieval(n_records=n_records, n_queries=n_queries, seed=seed)
    lines.append(
        f"retrieval over {n_records} records [indexed ] "
        f"{ret['indexed'] * 1e6:9.1f} us/query"
    )
    lines.append(
        f"retrieval over {n_records} records [bruteforce] "
        f"{ret['bruteforce'] * 1e6:9.1f} us/query"
    )
    lines.append(f"speedup indexed vs brute force: "
                 f"{ret['bruteforce'] / ret['indexed']:.1f}x")
    return "\n".join(lines)
