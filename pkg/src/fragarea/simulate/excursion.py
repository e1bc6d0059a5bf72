"""Brownian excursion area by the Vervaat transform of a discretised bridge.

A standard bridge on n_steps uniform steps is cut at its minimum and the two
pieces swapped; the result is a discretised excursion.  Its trapezoidal area
underestimates the true area by about 0.5826 / sqrt(n_steps), because the
discrete minimum sits above the continuous one.  Area samples therefore shift
the minimum down by that amount (the Broadie-Glasserman-Kou continuity
correction), which leaves an O(1/n_steps) bias; see
:func:`discretization_allowance`.
"""

from functools import partial
import math

import numpy as np

from ..errors import InvalidParameter
from .streams import run_blocks

DEFAULT_STEPS = 10_000
# -zeta(1/2) / sqrt(2 pi): first-order gap between discrete and continuous minima
_MIN_SHIFT = 0.5825971579390107


def _bridges(rng, count, n_steps):
    incs = rng.standard_normal((count, n_steps)) * math.sqrt(1.0 / n_steps)
    walk = np.cumsum(incs, axis=1)
    frac = np.arange(1, n_steps + 1) / n_steps
    bridge = walk - np.outer(walk[:, -1], frac)
    bridge[:, -1] = 0.0
    return bridge


def excursion_path(n_steps, rng):
    """Discretised excursion values at times 0, 1/n, ..., 1 (both endpoints exactly 0)."""
    if n_steps < 2:
        raise InvalidParameter("n_steps must be >= 2", field="n_steps")
    b = np.concatenate([[0.0], _bridges(rng, 1, n_steps)[0]])
    m = int(np.argmin(b[:-1]))
    e = np.concatenate([b[m:-1], b[:m + 1]]) - b[m]
    e[0] = e[-1] = 0.0
    return e


def _area_block(n_steps, corrected, rng, count):
    bridge = _bridges(rng, count, n_steps)
    # bridge holds B(1/n) .. B(1) with B(1) = B(0) = 0; the trapezoid sum over the
    # rotated periodic path is the plain mean of (B - min B)
    area = bridge.mean(axis=1) - bridge.min(axis=1)
    if corrected:
        area += _MIN_SHIFT / math.sqrt(n_steps)
    return area


def _check_steps(n_steps):
    if int(n_steps) != n_steps or n_steps < 2:
        raise InvalidParameter("n_steps must be an integer >= 2", field="n_steps")


def sample_excursion_area(n_steps, rng, corrected=True):
    _check_steps(n_steps)
    return float(_area_block(n_steps, corrected, rng, 1)[0])


def run_excursion(n_samples, n_steps=DEFAULT_STEPS, seed=0, workers=1, corrected=True):
    _check_steps(n_steps)
    block = max(1, 2_000_000 // n_steps)
    return run_blocks(partial(_area_block, int(n_steps), corrected), n_samples, seed, block, workers)


def discretization_allowance(k, n_steps, corrected=True):
    """Allowance for |E(A_n^k) - E(A^k)| with n = n_steps.

    Uncorrected: k * 0.5826 / sqrt(n) padded by 1.7x (uses E(A^(k-1)) <= 1,
    true for k <= 3).  Corrected: the remaining bias is O(1/n); k / n is
    several times the bias measured at n = 100 .. 4000.
    """
    if corrected:
        return k / n_steps
    return k * 1.7 * _MIN_SHIFT / math.sqrt(n_steps)
