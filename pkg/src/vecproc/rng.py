"""Reproducible random streams.

Every stochastic routine in the package draws from a Philox counter-based
generator keyed by a 64-bit seed plus a small integer path, so replicate
streams can be split deterministically (per check, per threshold, per
Monte-Carlo block) without any stream ever overlapping. Results are a
function of (seed, path) only, never of execution order or worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

_M64 = 0xFFFFFFFFFFFFFFFF

# Default number of replicates handled per Monte-Carlo block. Fixed: block
# boundaries are part of the deterministic-accumulation contract.
BLOCK_SIZE = 8192


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return (z ^ (z >> 31)) & _M64


def _mix(parts) -> int:
    h = 0
    for p in parts:
        h = _splitmix64(h ^ (int(p) & _M64))
    return h


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *path).

    Distinct paths give statistically independent Philox streams; the same
    (seed, path) always reproduces the same stream on every platform.
    """
    key = (int(seed) & _M64) | (_mix(path) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def block_sizes(reps: int, block: int = BLOCK_SIZE):
    """Split `reps` into fixed blocks; the split ignores worker count."""
    if reps <= 0:
        raise ValueError("reps must be positive")
    out = []
    done = 0
    while done < reps:
        size = min(block, reps - done)
        out.append(size)
        done += size
    return out


def map_blocks(fn, reps: int, threads: int = 1, block: int = BLOCK_SIZE):
    """Run fn(block_index, block_size) for every block, in-order results.

    `fn` must derive its randomness from the block index alone. Results are
    returned as a list ordered by block index regardless of `threads`, so any
    associative combination downstream is deterministic.
    """
    sizes = block_sizes(reps, block)
    if threads <= 1 or len(sizes) == 1:
        return [fn(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, i, s) for i, s in enumerate(sizes)]
        return [f.result() for f in futures]
