"""Exact moments of the area for binary dislocation measures.

``moment_table`` runs the recursion

    a_k M_k = k M_{k-1} + sum_{j=1}^{k-1} a_{j,k} M_j M_{k-j},   M_0 = 1,

with ``a_k = phi(k (1 - alpha) - 1)`` and ``a_{j,k}`` the binomial moments of
the measure.  The j <-> k-j pair always enters the sum together, so
``a_{j,k}`` is stored symmetrised: half the sum of the two one-sided
integrals.  For the Brownian and beta families this is exactly the
Gamma/Beta-function closed form.

``takacs_table`` is the drift-free rational oracle for the Brownian case.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .errors import DegenerateMeasure, InvalidParameter
from .measures import FragmentationParams, MassPartition, phi
from .specfun import log_gamma


@dataclass(frozen=True)
class MomentTable:
    K: int
    alpha: float
    a: tuple
    a_jk: dict
    M: tuple
    bounds: tuple
    methods: dict = field(default_factory=dict)

    @property
    def bound_ok(self):
        return tuple(m <= b * (1.0 + 1e-12) for m, b in zip(self.M[1:], self.bounds))

    def rows(self):
        """(k, a_k, M_k, bound_k, bound_ok) for k = 0..K; a_0 and bound_0 are NaN."""
        out = [(0, math.nan, self.M[0], math.nan, True)]
        for k in range(1, self.K + 1):
            out.append((k, self.a[k - 1], self.M[k], self.bounds[k - 1], self.bound_ok[k - 1]))
        return out

    def ajk_rows(self):
        return [(j, k, v) for (j, k), v in sorted(self.a_jk.items(), key=lambda kv: (kv[0][1], kv[0][0]))]

    def with_moment(self, k, value):
        """Copy with M_k replaced; used to inject errors into verification runs."""
        M = list(self.M)
        M[k] = value
        return MomentTable(self.K, self.alpha, self.a, self.a_jk, tuple(M), self.bounds, self.methods)


@dataclass(frozen=True)
class TakacsTable:
    K: int
    K_seq: tuple
    M: tuple


def coeff_a(params, k, method="auto"):
    """a_k = phi(k (1 - alpha) - 1)."""
    return coeff_a_eval(params, k, method).value


def coeff_a_eval(params, k, method="auto"):
    if k < 1:
        raise InvalidParameter(f"a_k needs k >= 1, got {k}", field="k")
    return params.measure.phi(k * params.r - 1.0, method)


def coeff_a_jk(params, j, k, method="auto"):
    return coeff_a_jk_eval(params, j, k, method).value


def coeff_a_jk_eval(params, j, k, method="auto"):
    if not (1 <= j < k):
        raise InvalidParameter(f"a_(j,k) needs 1 <= j < k, got j={j}, k={k}", field="j")
    return params.measure.binomial_moment(j, k, params.r, method)


def moment_upper_bound(params, k):
    """k * k! / (phi(-alpha) phi(-2 alpha) ... phi(-k alpha))."""
    return k * tagged_fragment_moment(params, k)


def tagged_fragment_moment(params, k):
    """k-th moment of the tagged-fragment lifetime, k! / prod_j phi(-j alpha)."""
    if k < 1:
        raise InvalidParameter(f"k must be >= 1, got {k}", field="k")
    log_val = math.log(math.factorial(k))
    for j in range(1, k + 1):
        log_val -= math.log(phi(params, -j * params.alpha))
    return math.exp(log_val)


def moment_table(params: FragmentationParams, K: int, method="auto") -> MomentTable:
    if K < 0:
        raise InvalidParameter(f"K must be >= 0, got {K}", field="K")
    a, methods, a_jk, bounds = [], {}, {}, []
    M = [1.0]
    for k in range(1, K + 1):
        ev = coeff_a_eval(params, k, method)
        a_k = ev.value
        methods[("a", k)] = ev.method
        if not a_k > 0.0:
            raise DegenerateMeasure(f"a_{k} = {a_k} is not positive")
        acc = k * M[k - 1]
        for j in range(1, k):
            if (k - j, k) in a_jk:
                v = a_jk[(k - j, k)]
                methods[("ajk", j, k)] = methods[("ajk", k - j, k)]
            else:
                evj = coeff_a_jk_eval(params, j, k, method)
                v = evj.value
                methods[("ajk", j, k)] = evj.method
            a_jk[(j, k)] = v
            acc += v * M[j] * M[k - j]
        a.append(a_k)
        M.append(acc / a_k)
        bounds.append(moment_upper_bound(params, k))
    return MomentTable(K, params.alpha, tuple(a), a_jk, tuple(M), tuple(bounds), methods)


def takacs_table(K: int) -> TakacsTable:
    """Takacs constants K_0..K_K (exact) and the Brownian excursion area moments they encode."""
    if K < 0:
        raise InvalidParameter(f"K must be >= 0, got {K}", field="K")
    seq = [Fraction(-1, 2)]
    for k in range(1, K + 1):
        val = (Fraction(3 * k, 4) - 1) * seq[k - 1]
        for j in range(1, k):
            val += seq[j] * seq[k - j]
        seq.append(val)
    M = [1.0]
    log_front = math.log(4.0) + 0.5 * math.log(math.pi)
    for k in range(1, K + 1):
        kk = seq[k]
        log_k = math.log(kk.numerator) - math.log(kk.denominator)
        log_m = log_front - 0.5 * k * math.log(2.0) + math.log(math.factorial(k)) - log_gamma((3 * k - 1) / 2.0) + log_k
        M.append(math.exp(log_m))
    return TakacsTable(K, tuple(seq), tuple(M))


def mean_area_for_partition(params, x: MassPartition):
    """E(A) started from the mass partition x: sum_i x_i^(1-alpha) / phi(-alpha)."""
    masses = np.asarray(x.masses if isinstance(x, MassPartition) else MassPartition(tuple(x)).masses)
    return float(np.sum(masses**params.r)) / phi(params, -params.alpha)
