"""Kernel backend selection and merge-invariant parallel orchestration.

The compiled Cython kernels are used when the extension built; otherwise
the pure-Python fallback takes over (set ``RECTGILBERT_BACKEND=python``
to force the fallback).  Both expose the same two entry points and
produce bit-identical output, so the choice affects speed only.

Parallelism contract: work is cut into fixed-size chunks of consecutive
episode indices regardless of worker count.  Each episode's randomness
comes from its own index-derived stream and each chunk writes a disjoint
slice of preallocated output arrays, so the assembled arrays — and
anything reduced from them in a fixed order — are identical for any
thread count, including 1.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels_py

try:
    from . import _kernels  # compiled extension; optional
except ImportError:  # pragma: no cover - depends on build environment
    _kernels = None

if os.environ.get("RECTGILBERT_BACKEND", "").lower() == "python":
    _active = _kernels_py
else:
    _active = _kernels if _kernels is not None else _kernels_py

#: Episodes per work unit; fixed so that results never depend on threads.
CHUNK = 1 << 16


def kernels():
    """The active kernel module (compiled if available)."""
    return _active


def backend_name() -> str:
    return _active.backend_name


def have_compiled() -> bool:
    return _kernels is not None


def default_threads() -> int:
    env = os.environ.get("RECTGILBERT_THREADS")
    if env:
        try:
            n = int(env)
            if n >= 1:
                return n
        except ValueError:
            pass
    return os.cpu_count() or 1


def _chunks(total: int):
    start = 0
    while start < total:
        yield start, min(CHUNK, total - start)
        start += CHUNK


def run_episodes(master_seed: int, count: int, q: float, n_cap: int,
                 threads: int | None = None) -> np.ndarray:
    """Blocking indices of ``count`` episodes (int32; 0 marks a cap hit)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = np.empty(count, dtype=np.int32)
    fill = _active.episode_fill
    threads = threads or default_threads()
    if threads <= 1 or count <= CHUNK:
        for start, n in _chunks(count):
            fill(master_seed, start, n, q, n_cap, out[start : start + n])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(fill, master_seed, start, n, q, n_cap,
                            out[start : start + n])
                for start, n in _chunks(count)
            ]
            for f in futures:
                f.result()
    return out


def run_half_samples(master_seed: int, count: int, q: float, lam: float,
                     threads: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Ray lengths and step counts of ``count`` half-model samples."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out_len = np.empty(count, dtype=np.float64)
    out_steps = np.empty(count, dtype=np.int32)
    fill = _active.half_fill
    threads = threads or default_threads()
    if threads <= 1 or count <= CHUNK:
        for start, n in _chunks(count):
            fill(master_seed, start, n, q, lam,
                 out_len[start : start + n], out_steps[start : start + n])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(fill, master_seed, start, n, q, lam,
                            out_len[start : start + n],
                            out_steps[start : start + n])
                for start, n in _chunks(count)
            ]
            for f in futures:
                f.result()
    return out_len, out_steps
