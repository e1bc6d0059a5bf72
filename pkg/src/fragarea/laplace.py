"""Laplace transform of the area and residual checks of the integro-differential equation.

Three routes to ``l(q) = E exp(-q A)``:

* ``dyadic_laplace``: the infinite product for the measure with one atom at
  1/2 (each fragment splits into two halves),
* ``solve_laplace_fixed_point``: iteration of the first-split equation
  ``l(q) = (nu_total + q)^-1 integral nu(dx) l(x^r q) l((1-x)^r q)`` on a grid,
  valid for any measure with finite total mass,
* empirical transforms of Monte Carlo samples.

``verify_theorem1`` evaluates both sides of
``<eta, f'> = integral nu(dx) (<eta, f> - <eta_x, f>)`` for monomial and
exponential test functions against any of those sources.
"""

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, InvalidParameter, NoConvergence, NotFinite
from .measures import Atomic, FragmentationParams, one_minus_pow, phi, total_mass
from .moments import MomentTable


def dyadic_laplace(alpha, q, tol=1e-14, rate=1.0):
    """Laplace transform of the area when every fragment splits in two halves at rate ``rate``.

    ``q`` may be a scalar or an array.  The log-product is truncated once the
    geometric bound on the remaining terms (ratio 2**alpha) drops below ``tol``.
    """
    if not alpha < 0:
        raise InvalidParameter(f"alpha={alpha} must be negative", field="alpha")
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr < 0):
        raise DomainError("dyadic_laplace needs q >= 0", field="q")
    ratio = 2.0**alpha
    shrink = 2.0 ** (alpha - 1.0)
    qmax = float(np.max(q_arr)) / rate if q_arr.size else 0.0
    log_ell = np.zeros_like(q_arr)
    n = 0
    # term_n <= 2^n * shrink^n * q = ratio^n * q
    while qmax * ratio**n / (1.0 - ratio) >= tol:
        log_ell -= 2.0**n * np.log1p(shrink**n * q_arr / rate)
        n += 1
    out = np.exp(log_ell)
    return float(out) if out.ndim == 0 else out


def dyadic_residual(alpha, q, rate=1.0):
    """|-q l(q) - l(q) + l(2^(alpha-1) q)^2| with the product formula (rate 1)."""
    q = np.asarray(q, dtype=float)
    ell = dyadic_laplace(alpha, q, rate=rate)
    ell_half = dyadic_laplace(alpha, 2.0 ** (alpha - 1.0) * q, rate=rate)
    res = np.abs(-q * ell / rate - ell + ell_half**2)
    return float(res) if res.ndim == 0 else res


@dataclass(frozen=True)
class LaplaceGrid:
    """Laplace transform tabulated on q_nodes (q_nodes[0] == 0), interpolated in log l."""

    q_nodes: np.ndarray
    ell_values: np.ndarray
    interpolation: str = "pchip-log"
    residual: float = math.nan
    iterations: int = 0
    history: tuple = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_interp", PchipInterpolator(self.q_nodes, np.log(self.ell_values), extrapolate=False))

    @property
    def q_max(self):
        return float(self.q_nodes[-1])

    def log_ell(self, q):
        q = np.asarray(q, dtype=float)
        if np.any(q < 0) or np.any(q > self.q_max * (1 + 1e-12)):
            raise DomainError(f"q outside the tabulated range [0, {self.q_max}]", field="q")
        return self._interp(np.minimum(q, self.q_max))

    def __call__(self, q):
        out = np.exp(self.log_ell(q))
        return float(out) if np.ndim(out) == 0 else out


def _finite_rule(measure):
    if isinstance(measure, Atomic):
        x = measure.xs
        return x, 1.0 - x, measure.weights
    return measure.finite_rule()


def solve_laplace_fixed_point(params: FragmentationParams, q_max=10.0, grid_size=400, max_iter=500, tol=1e-12):
    """Iterate the first-split equation for l on a grid until the sup-norm update is below tol."""
    lam = total_mass(params.measure)
    if not math.isfinite(lam):
        raise NotFinite("the fixed-point equation needs a measure with finite total mass")
    x, t, w = _finite_rule(params.measure)
    r = params.r
    q = np.concatenate([[0.0], np.geomspace(q_max * 1e-6, q_max, grid_size)])
    left = np.multiply.outer(x**r, q)
    right = np.multiply.outer(t**r, q)
    m1 = 1.0 / phi(params, -params.alpha)
    ell = np.exp(-q * m1)
    history = []
    for it in range(1, max_iter + 1):
        interp = PchipInterpolator(q, np.log(ell))
        logs = interp(left) + interp(right)
        new = (w @ np.exp(logs)) / (lam + q)
        new[0] = 1.0
        change = float(np.max(np.abs(new - ell)))
        history.append(change)
        ell = new
        if change < tol:
            return LaplaceGrid(q, ell, residual=change, iterations=it, history=tuple(history))
    exc = NoConvergence(f"fixed point not reached after {max_iter} iterations (last change {change:.3g})")
    exc.result = LaplaceGrid(q, ell, residual=change, iterations=max_iter, history=tuple(history))
    raise exc


@dataclass(frozen=True)
class Monomial:
    k: int

    def describe(self):
        return f"a^{self.k}"


@dataclass(frozen=True)
class Exponential:
    q: float

    def describe(self):
        return f"exp(-{self.q:g} a)"


@dataclass(frozen=True)
class ResidualReport:
    test_function: str
    source: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    rhs_error: float = 0.0
    tolerance: float = math.nan

    @property
    def passed(self):
        return self.rel_residual <= self.tolerance


def _report(f, source, lhs, rhs, rhs_error=0.0, tolerance=math.nan):
    abs_res = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    rel = abs_res / scale if scale > 0 else abs_res
    return ResidualReport(f.describe(), source, float(lhs), float(rhs), float(abs_res), float(rel), float(rhs_error), tolerance)


def _moments_from_source(source, k):
    if isinstance(source, MomentTable):
        if source.K < k:
            raise InvalidParameter(f"moment table stops at K={source.K}, need {k}", field="K")
        return list(source.M[: k + 1]), "moment-table"
    samples = np.asarray(source, dtype=float)
    return [float(np.mean(samples**j)) for j in range(k + 1)], "samples"


def _verify_monomial(params, k, source, tolerance):
    M, name = _moments_from_source(source, k)
    r = params.r
    coef = [math.comb(k, j) * M[j] * M[k - j] for j in range(k + 1)]

    def h(x, t):
        # M_k - E(x^r A_1 + (1-x)^r A_2)^k, written to stay accurate as t -> 0
        out = M[k] * (one_minus_pow(x, t, k * r) - t ** (k * r))
        for j in range(1, k):
            out = out - coef[j] * x ** (j * r) * t ** ((k - j) * r)
        return out

    ev = params.measure.integrate(h, order=1.0)
    lhs = k * M[k - 1]
    return _report(Monomial(k), name, lhs, ev.value, ev.error_estimate, tolerance)


def _empirical_parts(samples):
    """Stable pieces of the empirical transform of a sample array."""
    a = np.asarray(samples, dtype=float)

    def ell(s):
        return np.mean(np.exp(-np.multiply.outer(s, a)), axis=-1)

    def one_minus(s):
        return np.mean(-np.expm1(-np.multiply.outer(s, a)), axis=-1)

    def drop(q, d):
        # ell(q) - ell(q (1 - d)) for d in [0, 1)
        return -np.mean(np.exp(-q * a) * np.expm1(np.multiply.outer(d, q * a)), axis=-1)

    return ell, one_minus, drop


def _verify_exponential(params, q, source, tolerance):
    r = params.r
    measure = params.measure
    finite = math.isfinite(total_mass(measure))
    if isinstance(source, Callable) and not isinstance(source, np.ndarray):
        name = "laplace-grid" if isinstance(source, LaplaceGrid) else "laplace"
        if not finite:
            raise InvalidParameter("exponential check on an infinite measure needs a sample source", field="source")
        x, t, w = _finite_rule(measure)
        ell_q = source(q)
        g = ell_q - source(x**r * q) * source(t**r * q)
        rhs, err = float(w @ g), 0.0
    else:
        name = "samples"
        ell, one_minus, drop = _empirical_parts(source)
        ell_q = float(ell(q))

        def h(x, t):
            # l(q) - l(x^r q) l(t^r q) = [l(q) - l(x^r q)] + l(x^r q) [1 - l(t^r q)]
            d = one_minus_pow(x, t, r)
            return drop(q, d) + ell(x**r * q) * one_minus(t**r * q)

        ev = measure.integrate(h, order=1.0)
        rhs, err = ev.value, ev.error_estimate
    lhs = -q * ell_q
    return _report(Exponential(q), name, lhs, rhs, err, tolerance)


def verify_theorem1(params: FragmentationParams, f, source, tolerance=math.nan) -> ResidualReport:
    """Both sides of the integro-differential equation for the test function ``f``.

    ``f`` is :class:`Monomial` or :class:`Exponential`.  ``source`` is a
    :class:`MomentTable` (monomials), a Laplace transform callable such as a
    :class:`LaplaceGrid` (exponentials), or an array of area samples (either).
    """
    if isinstance(f, Monomial):
        if f.k < 1:
            raise InvalidParameter("monomial degree must be >= 1", field="k")
        if not isinstance(source, MomentTable) and callable(source):
            raise InvalidParameter("monomial checks need moments or samples", field="source")
        return _verify_monomial(params, f.k, source, tolerance)
    if isinstance(f, Exponential):
        if isinstance(source, MomentTable):
            raise InvalidParameter("exponential checks need a Laplace transform or samples", field="source")
        return _verify_exponential(params, float(f.q), source, tolerance)
    raise InvalidParameter(f"unsupported test function {f!r}", field="f")
