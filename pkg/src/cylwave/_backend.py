"""Kernel selection and the thread pool used for data-parallel sweeps.

The compiled kernel is used when importable.  ``CYLWAVE_KERNEL=python`` forces
the pure-Python kernel (useful for debugging or on platforms without a
compiler).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from . import _radial_py
from ._radial_py import KernelError

__all__ = ["solve_many", "BACKEND", "KernelError", "thread_count", "map_threads"]

if os.environ.get("CYLWAVE_KERNEL", "").lower() == "python":
    _kernel = _radial_py
    BACKEND = "python"
else:
    try:
        from . import _radial_core as _kernel
    except ImportError:  # pragma: no cover - depends on the build
        _kernel = _radial_py
        BACKEND = "python"
    else:
        BACKEND = "compiled"

solve_many = _kernel.solve_many

_threads: int | None = None


def thread_count(requested: int | None = None) -> int:
    """Resolve a worker count: explicit value, then ``WAVEGUIDE_THREADS``, then 1.

    ``0`` means one worker per CPU.
    """
    n = requested if requested is not None else _threads
    if n is None:
        env = os.environ.get("WAVEGUIDE_THREADS")
        n = int(env) if env else 1
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def set_threads(n: int | None) -> None:
    """Set the process-wide default worker count (``None`` restores the default)."""
    global _threads
    _threads = n


def map_threads(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]`` on a bounded pool; order is preserved."""
    items = list(items)
    n = min(thread_count(threads), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
