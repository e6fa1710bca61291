"""glibc allocator tuning for batched-jet workloads.

Training allocates and frees dozens of ~10 MB jet buffers per step; with
the default mmap threshold every one is a fresh mmap/munmap and the run
becomes page-fault bound (about 4x slower measured).  Raising the
threshold keeps those blocks on the reusable heap.  No-op off glibc.
"""

import ctypes

_done = False


def tune_for_large_batches(threshold: int = 256 * 1024 * 1024) -> bool:
    """Raise malloc's mmap/trim thresholds; returns True if applied."""
    global _done
    if _done:
        return True
    try:
        libc = ctypes.CDLL("libc.so.6", use_errno=True)
        M_TRIM_THRESHOLD, M_MMAP_THRESHOLD = -1, -3
        ok = libc.mallopt(M_MMAP_THRESHOLD, threshold)
        ok = libc.mallopt(M_TRIM_THRESHOLD, threshold) and ok
        _done = bool(ok)
    except (OSError, AttributeError):
        _done = False
    return _done
