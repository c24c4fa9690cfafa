"""Deterministic chunked parallelism.

Work is split into chunks whose count and per-chunk seed streams depend
only on the task size, never on the worker count; workers affect
scheduling only, so numeric results are identical for any worker count and
chunks merge in fixed index order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .model import ModelSpec

CHUNK = 65536


def _call(payload):
    fn, args = payload
    return fn(*args)


def parallel_starmap(fn, args_list, workers: int = 1) -> list:
    """Ordered starmap; fn must be a module-level (picklable) function."""
    if workers <= 1 or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, [(fn, args) for args in args_list]))


def _r_chunk(spec: ModelSpec, tol: float, count: int, entropy, max_depth):
    from .tail import sample_R

    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    return sample_R(spec, tol, count, rng, max_depth=max_depth)


def sample_R_parallel(spec: ModelSpec, tol: float, n_samples: int,
                      seed_seq: np.random.SeedSequence, workers: int = 1,
                      max_depth: int = 20000):
    """sample_R split over fixed-size chunks with spawned seed streams."""
    from .tail import RSampleSet

    n_chunks = (n_samples + CHUNK - 1) // CHUNK
    children = seed_seq.spawn(n_chunks)
    sizes = [CHUNK] * (n_chunks - 1) + [n_samples - CHUNK * (n_chunks - 1)]
    args = [(spec, tol, sizes[i], children[i].entropy, max_depth)
            for i in range(n_chunks)]
    parts = parallel_starmap(_r_chunk, args, workers)
    return RSampleSet(
        samples=np.concatenate([p.samples for p in parts]),
        depths=np.concatenate([p.depths for p in parts]),
        residual_bounds=np.concatenate([p.residual_bounds for p in parts]),
        flagged=np.concatenate([p.flagged for p in parts]),
        tol=tol)
