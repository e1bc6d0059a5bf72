"""Homogeneous fragmentation and Riemann-sum approximations of its area statistic.

In the homogeneous process every fragment splits at rate nu_total whatever its
mass.  The statistic S(t) = sum_i m_i(t)^(1-alpha) is piecewise constant and
non-increasing; its integral has the same law as the self-similar area.  Each
fragment is simulated as a record (birth, death, weight) with an exponential
lifetime; the path is exact on [0, t_max] and the remainder beyond t_max is
replaced by its conditional mean S(t_max) / phi(-alpha), since
E S(t + s) = S(t) exp(-s phi(-alpha)).  Fragments whose weight drops below
``WEIGHT_FLOOR`` are retired the same way.
"""

from dataclasses import dataclass
from functools import partial
import math

import numpy as np

from ..errors import BudgetExceeded, InvalidParameter
from ..measures import FragmentationParams, phi
from .rde import _check_finite
from .streams import run_blocks

WEIGHT_FLOOR = 1e-12
DEFAULT_BUDGET = 5_000_000
BLOCK_SIZE = 512


@dataclass(frozen=True)
class HomogeneousPath:
    """One path: jump times of S, the value of S after each jump, and derived areas."""

    times: np.ndarray
    s_values: np.ndarray
    area: float
    riemann: float
    k: int
    t_max: float
    tail: float

    def s_at(self, t):
        i = np.searchsorted(self.times, t, side="right") - 1
        return self.s_values[np.maximum(i, 0)]


def _fragments(params, t_max, rng, n, budget):
    """Yield generations of fragment records (owner, birth, death, weight).

    Records lighter than ``WEIGHT_FLOOR`` get death = birth and never split;
    their whole expected future is added by the caller.
    """
    measure = params.measure
    lam = _check_finite(params)
    r = params.r
    owner = np.arange(n)
    birth = np.zeros(n)
    mass = np.ones(n)
    produced = n
    while owner.size:
        weight = mass**r
        dust = weight < WEIGHT_FLOOR
        death = np.where(dust, birth, birth + rng.exponential(1.0 / lam, owner.size))
        splits = (death < t_max) & ~dust
        yield owner, birth, death, weight
        owner, birth, mass = owner[splits], death[splits], mass[splits]
        if not owner.size:
            break
        x = np.asarray(measure.sample_split(rng, owner.size))
        owner = np.concatenate([owner, owner])
        birth = np.concatenate([birth, birth])
        mass = np.concatenate([mass * x, mass * (1.0 - x)])
        produced += owner.size
        if produced > budget * n:
            raise BudgetExceeded(f"more than {budget} fragments per path on average")


def _retire(weight, death, t_max):
    """Records whose remaining life is replaced by the conditional mean."""
    return (death >= t_max) | (weight < WEIGHT_FLOOR)


def _homogeneous_block(params, ks, times, t_max, budget, rng, n):
    """Columns: area, riemann sum per k, S(t) per requested time."""
    tail_rate = 1.0 / phi(params, -params.alpha)
    grid = sorted({l / k for k in ks for l in range(1, k * k + 1)} | set(times))
    grid_arr = np.array(grid)
    area = np.zeros(n)
    s_grid = np.zeros((len(grid), n))
    for owner, birth, death, weight in _fragments(params, t_max, rng, n, budget):
        end = np.minimum(death, t_max)
        area += np.bincount(owner, weight * (end - birth), minlength=n)
        retired = _retire(weight, death, t_max)
        if np.any(retired):
            # beyond t_max (or below the weight floor) the expected remaining integral
            area += np.bincount(owner[retired], weight[retired] * tail_rate, minlength=n)
        alive = (birth[None, :] <= grid_arr[:, None]) & (grid_arr[:, None] < death[None, :])
        for g in np.nonzero(alive.any(axis=1))[0]:
            sel = alive[g]
            s_grid[g] += np.bincount(owner[sel], weight[sel], minlength=n)
    cols = [area]
    index = {v: i for i, v in enumerate(grid)}
    for k in ks:
        cols.append(sum(s_grid[index[l / k]] for l in range(1, k * k + 1)) / k)
    for t in times:
        cols.append(s_grid[index[t]])
    return np.column_stack(cols)


def _check_args(ks, times, t_max):
    for k in ks:
        if int(k) != k or k < 1:
            raise InvalidParameter(f"Riemann index k={k} must be a positive integer", field="k")
        if k > t_max:
            raise InvalidParameter(f"Riemann sum for k={k} needs t_max >= {k}", field="t_max")
    for t in times:
        if not (0.0 <= t <= t_max):
            raise InvalidParameter(f"time {t} outside [0, t_max]", field="times")


def run_homogeneous(params, ks=(1,), t_max=8.0, n=10_000, seed=0, times=(), workers=1, budget=DEFAULT_BUDGET):
    """Simulate ``n`` paths; returns a dict with 'area', 'riemann' {k: array}, 's_at' {t: array}."""
    ks = tuple(int(k) for k in ks)
    times = tuple(float(t) for t in times)
    _check_args(ks, times, t_max)
    _check_finite(params)
    sampler = partial(_homogeneous_block, params, ks, times, float(t_max), budget)
    table = run_blocks(sampler, n, seed, BLOCK_SIZE, workers)
    return {
        "area": table[:, 0],
        "riemann": {k: table[:, 1 + i] for i, k in enumerate(ks)},
        "s_at": {t: table[:, 1 + len(ks) + i] for i, t in enumerate(times)},
    }


def simulate_homogeneous(params: FragmentationParams, k: int, t_max: float, rng, budget=DEFAULT_BUDGET) -> HomogeneousPath:
    """Event-by-event description of one path, with its area and k-th Riemann sum."""
    _check_args((k,), (), t_max)
    tail_rate = 1.0 / phi(params, -params.alpha)
    events = {}
    area = 0.0
    tail = 0.0
    for _, birth, death, weight in _fragments(params, t_max, rng, 1, budget):
        area += float(np.sum(weight * (np.minimum(death, t_max) - birth)))
        retired = _retire(weight, death, t_max)
        tail += float(np.sum(weight[retired])) * tail_rate
        # each record adds its weight at birth and removes it at death
        live = death > birth
        for t, w in zip(birth[live], weight[live]):
            if t > 0.0:
                events[t] = events.get(t, 0.0) + w
        ends = live & (death < t_max)
        for t, w in zip(death[ends], weight[ends]):
            events[t] = events.get(t, 0.0) - w
    times = np.array([0.0] + sorted(events))
    jumps = np.array([1.0] + [events[t] for t in sorted(events)])
    s_values = np.maximum(np.cumsum(jumps), 0.0)
    grid = np.arange(1, k * k + 1) / k
    idx = np.searchsorted(times, grid, side="right") - 1
    riemann = float(np.sum(s_values[idx])) / k
    return HomogeneousPath(times, s_values, area + tail, riemann, k, t_max, tail)


def riemann_gap_formula(params, k):
    """E|A - A_k| = 1/phi(-alpha) - (1 - exp(-k phi)) / (k (exp(phi / k) - 1))."""
    if k < 1:
        raise InvalidParameter(f"k={k} must be >= 1", field="k")
    p = phi(params, -params.alpha)
    return 1.0 / p - (-math.expm1(-k * p)) / (k * math.expm1(p / k))
