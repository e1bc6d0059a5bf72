from dataclasses import dataclass
import math

import numpy as np

from ..errors import InsufficientSamples


@dataclass(frozen=True)
class EstimatorSummary:
    n: int
    moments: tuple
    stderr: tuple
    seed: int = None
    wall_clock: float = 0.0

    def z_scores(self, reference):
        """(m_j - ref_j) / stderr_j for each reference value given (None entries skipped)."""
        out = []
        for m, s, ref in zip(self.moments, self.stderr, reference):
            if ref is None or not math.isfinite(ref):
                out.append(None)
            elif s > 0:
                out.append((m - ref) / s)
            else:
                out.append(0.0 if m == ref else math.copysign(math.inf, m - ref))
        return out

    def to_json(self):
        return {"n": self.n, "seed": self.seed, "moments": list(self.moments), "stderr": list(self.stderr)}


def estimate_moments(samples, k_max, seed=None, wall_clock=0.0):
    """Sample moments m_j = mean(a^j), j = 1..k_max, with standard errors sqrt(var(a^j) / n)."""
    a = np.asarray(samples, dtype=float).ravel()
    n = a.size
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n}", field="n")
    moments, errs = [], []
    power = np.ones_like(a)
    for _ in range(k_max):
        power = power * a
        moments.append(float(np.mean(power)))
        errs.append(float(math.sqrt(np.var(power, ddof=1) / n)))
    return EstimatorSummary(n, tuple(moments), tuple(errs), seed, wall_clock)
