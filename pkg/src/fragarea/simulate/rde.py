"""Monte Carlo sampling of the area through the first-split recursion.

A fragment of mass m waits an exponential time with rate nu_total * m^alpha
and then splits into (m x, m (1 - x)) with x drawn from nu / nu_total.  Its
contribution to the area is m times the waiting time, which in law is
m^(1-alpha) T with T ~ Exp(nu_total).  Fragments lighter than ``epsilon`` are
not simulated: under ``expected-tail`` they contribute their exact mean
m^(1-alpha) / phi(-alpha), under ``zero-tail`` nothing.

Atomic measures use an exact grouped scheme: fragments with the same mass
are exchangeable, so c of them contribute a Gamma(c) waiting-time sum and
split by a multinomial draw.  Continuous (truncated) measures are simulated
fragment by fragment, one generation at a time, across a whole block.
"""

from dataclasses import dataclass
from functools import partial
import heapq
import math

import numpy as np

from ..errors import BudgetExceeded, InvalidParameter, NotFinite
from ..measures import Atomic, FragmentationParams, phi, total_mass, truncate
from .streams import run_blocks

RESIDUAL_MODES = ("expected-tail", "zero-tail")
BLOCK_SIZE = 1024


@dataclass(frozen=True)
class SimConfig:
    epsilon: float = 1e-6
    residual_mode: str = "expected-tail"
    n_samples: int = 10_000
    seed: int = 0
    max_fragments: int = 10_000_000

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidParameter(f"epsilon={self.epsilon} outside (0, 1)", field="epsilon")
        if self.residual_mode not in RESIDUAL_MODES:
            raise InvalidParameter(f"residual_mode must be one of {RESIDUAL_MODES}", field="residual_mode")
        if int(self.n_samples) < 1:
            raise InvalidParameter("n_samples must be >= 1", field="n_samples")
        if int(self.max_fragments) < 1:
            raise InvalidParameter("max_fragments must be >= 1", field="max_fragments")


def _check_finite(params):
    lam = total_mass(params.measure)
    if not math.isfinite(lam):
        raise NotFinite(f"{params.measure.kind} measure has infinite total mass; truncate it first")
    return lam


def _grouped_block(params, config, lam, tail_rate, rng, n):
    """Exact grouped simulation for atomic measures; returns (areas, killed)."""
    measure = params.measure
    r = params.r
    factors = sorted({v for x, _ in measure.atoms for v in (x, 1.0 - x)}, reverse=True)
    index = {v: i for i, v in enumerate(factors)}
    children = [(index[x], index[1.0 - x]) for x, _ in measure.atoms]
    probs = measure.weights / lam
    log_f = np.log(factors)
    dim = len(factors)

    area = np.zeros(n)
    killed = np.zeros(n, dtype=np.int64)
    processed = np.zeros(n, dtype=np.int64)
    pending = {(0,) * dim: np.ones(n, dtype=np.int64)}
    heap = [(-0.0, (0,) * dim)]
    while heap:
        neg_log_m, key = heapq.heappop(heap)
        counts = pending.pop(key)
        m = math.exp(-neg_log_m)
        if m < config.epsilon:
            killed += counts
            if tail_rate:
                area += counts * (m**r * tail_rate)
            continue
        processed += counts
        if processed.max() > config.max_fragments:
            raise BudgetExceeded(f"more than {config.max_fragments} fragments in one sample")
        area += m**r * rng.gamma(counts, 1.0 / lam)
        split = rng.multinomial(counts, probs)
        for i, (a, b) in enumerate(children):
            c = split[:, i]
            for f in (a, b):
                child = list(key)
                child[f] += 1
                child = tuple(child)
                if child in pending:
                    pending[child] = pending[child] + c
                else:
                    pending[child] = c.copy()
                    heapq.heappush(heap, (-float(np.dot(child, log_f)), child))
    return area, killed


def _fragment_block(params, config, lam, tail_rate, rng, n):
    """Generation-by-generation simulation for continuous finite measures."""
    measure = params.measure
    r = params.r
    area = np.zeros(n)
    killed = np.zeros(n, dtype=np.int64)
    processed = np.zeros(n, dtype=np.int64)
    masses = np.ones(n)
    owner = np.arange(n)
    while masses.size:
        small = masses < config.epsilon
        if np.any(small):
            killed += np.bincount(owner[small], minlength=n)
            if tail_rate:
                area += np.bincount(owner[small], masses[small] ** r * tail_rate, minlength=n)
            masses, owner = masses[~small], owner[~small]
            if not masses.size:
                break
        processed += np.bincount(owner, minlength=n)
        if processed.max() > config.max_fragments:
            raise BudgetExceeded(f"more than {config.max_fragments} fragments in one sample")
        waits = rng.exponential(1.0 / lam, masses.size)
        area += np.bincount(owner, masses**r * waits, minlength=n)
        x = np.asarray(measure.sample_split(rng, masses.size))
        masses = np.concatenate([masses * x, masses * (1.0 - x)])
        owner = np.concatenate([owner, owner])
    return area, killed


def _rde_block(params, config, rng, n, with_killed=False):
    lam = _check_finite(params)
    tail_rate = 1.0 / phi(params, -params.alpha) if config.residual_mode == "expected-tail" else 0.0
    block = _grouped_block if isinstance(params.measure, Atomic) else _fragment_block
    area, killed = block(params, config, lam, tail_rate, rng, n)
    if with_killed:
        return np.column_stack([area, killed.astype(float)])
    return area


def sample_area_rde(params: FragmentationParams, config: SimConfig, rng) -> float:
    """One draw of the area for a measure with finite total mass."""
    return float(_rde_block(params, config, rng, 1)[0])


def sample_areas_rde(params, config, rng, n, with_killed=False):
    """``n`` independent draws from a single generator (one block)."""
    return _rde_block(params, config, rng, n, with_killed)


def run_rde(params, config, workers=1, with_killed=False):
    """``config.n_samples`` draws with deterministic per-block streams derived from ``config.seed``."""
    _check_finite(params)
    sampler = partial(_rde_block, params, config, with_killed=with_killed)
    return run_blocks(sampler, config.n_samples, config.seed, BLOCK_SIZE, workers)


def sample_area_truncated(params, n_trunc, config, rng):
    """One draw of the area for the truncated measure restricted to 1 - x > 1/n_trunc.

    This is a draw from the law of the truncated fragmentation, which converges
    weakly to the law of the untruncated area as n_trunc grows.
    """
    return sample_area_rde(truncated_params(params, n_trunc), config, rng)


def truncated_params(params, n_trunc):
    return FragmentationParams(truncate(params.measure, n_trunc), params.alpha)


def run_truncated(params, n_trunc, config, workers=1):
    return run_rde(truncated_params(params, n_trunc), config, workers)
