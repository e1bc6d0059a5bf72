"""Deterministic random streams and block-parallel execution.

Samples are produced in fixed-size blocks; block ``b`` always draws from the
stream ``SeedSequence(seed, spawn_key=(b,))``.  The result therefore depends
only on (seed, n, block_size), never on how many workers run the blocks.
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np


def block_rng(seed, block):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def _run_one(args):
    sampler, seed, block, count = args
    return sampler(block_rng(seed, block), count)


def block_sizes(n, block_size):
    full, rest = divmod(int(n), int(block_size))
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(sampler, n, seed, block_size, workers=1):
    """Call ``sampler(rng, count)`` for every block and concatenate along axis 0.

    With ``workers > 1`` the sampler must be picklable (a module-level
    function or a ``functools.partial`` of one).
    """
    jobs = [(sampler, seed, b, c) for b, c in enumerate(block_sizes(n, block_size))]
    if workers <= 1 or len(jobs) <= 1:
        parts = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_one, jobs))
    return np.concatenate(parts, axis=0)
