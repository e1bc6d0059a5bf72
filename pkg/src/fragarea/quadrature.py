"""Integration over [1/2, 1) for integrands with an algebraic singularity at x = 1.

Integrals are taken in the gap variable ``t = 1 - x`` so that the distance to
the singular endpoint is never formed by cancellation.  A power substitution
``t = lower + (upper - lower) * v**p`` with ``p = 2 / (1 + s_one)`` turns the
leading behaviour ``t**s_one`` into a term vanishing linearly in ``v``; the
resulting integral over ``v in (0, 1)`` is evaluated with the tanh-sinh
(double-exponential) rule, halving the step until two successive levels agree.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import DomainError, QuadratureFailure

DEFAULT_TOL = 1e-10
DEFAULT_MAX_DEPTH = 20

# abscissae are taken on [-_U_MAX, _U_MAX]; at the edge the weights are ~1e-100
_U_MAX = 4.0
_MIN_DEPTH = 3
# nodes this close (relative) to the lower end are skipped to avoid overflow in g
DEFAULT_FLOOR = 1e-200


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    depth: int = 0


def _level_nodes(depth):
    """Abscissae added at refinement ``depth`` (all of them at depth 0)."""
    h = 2.0 ** -depth
    if depth == 0:
        k = np.arange(-int(_U_MAX), int(_U_MAX) + 1, dtype=float)
    else:
        n = int(round(_U_MAX / h))
        k = np.arange(-n + 1, n, 2, dtype=float)
    return k * h, h


def _mapped(u, lower, upper, power):
    phi = 0.5 * math.pi * np.sinh(u)
    with np.errstate(over="ignore", under="ignore"):
        v = 1.0 / (1.0 + np.exp(-2.0 * phi))
        w = 1.0 / (1.0 + np.exp(2.0 * phi))
        if power == 1.0:
            vp = v
        else:
            vp = np.exp(power * -np.log1p(np.exp(-2.0 * phi)))
        span = upper - lower
        t = lower + span * vp
        weight = span * power * vp * math.pi * np.cosh(u) * w
    return t, weight


def _de_sequence(g, lower, upper, power, max_depth, floor=DEFAULT_FLOOR):
    """Yield (depth, estimate, abs_sum, evaluations) for successive tanh-sinh levels."""
    total = 0.0
    abs_total = 0.0
    evaluations = 0
    for depth in range(max_depth + 1):
        u, h = _level_nodes(depth)
        t, weight = _mapped(u, lower, upper, power)
        keep = (t - lower > floor * (upper - lower)) & (t < upper) & (weight > 0.0)
        t = t[keep]
        weight = weight[keep]
        if t.size:
            vals = np.asarray(g(t), dtype=float)
            if vals.shape != t.shape:
                vals = np.broadcast_to(vals, t.shape)
            if not np.all(np.isfinite(vals)):
                raise QuadratureFailure("integrand is not finite inside the interval")
            evaluations += t.size
            contrib = weight * vals
            # level sums are kept unscaled by h so refinement only adds terms
            total += float(np.sum(contrib))
            abs_total += float(np.sum(np.abs(contrib)))
        yield depth, total * h, abs_total * h, evaluations


def _integrate(g, lower, upper, power, tol, max_depth, floor=DEFAULT_FLOOR):
    prev = None
    last = None
    for depth, value, abs_value, evaluations in _de_sequence(g, lower, upper, power, max_depth, floor):
        if prev is not None:
            diff = abs(value - prev)
            roundoff = 64.0 * np.finfo(float).eps * abs_value
            err = float(max(diff, roundoff))
            last = QuadratureResult(value, err, max(evaluations, 1), depth)
            if depth >= _MIN_DEPTH and (diff <= tol * max(1.0, abs(value)) or diff <= roundoff):
                return last
        prev = value
    exc = QuadratureFailure(
        f"tolerance {tol:g} not met after depth {max_depth}"
        + (f" (estimate {last.error_estimate:.3g})" if last else "")
    )
    exc.result = last
    raise exc


def integrate_gap(g, s_one=0.0, tol=DEFAULT_TOL, max_depth=DEFAULT_MAX_DEPTH, *, lower=0.0, upper=0.5, floor=DEFAULT_FLOOR):
    """Integrate ``g(t)`` over ``t in (lower, upper)`` where ``t = 1 - x``.

    ``g`` is called with numpy arrays.  When ``lower == 0`` the integrand may
    behave like ``t**s_one`` near zero; ``s_one`` must then exceed -1.
    Convergence is declared once two successive levels differ by at most
    ``tol * max(1, |value|)``.

    Nodes below ``t = floor * upper`` are never evaluated.  The skipped piece is
    taken as ``g(t_f) t_f / (1 + s_one)`` at ``t_f = floor * upper`` (exact for a
    pure power law) and its size is added to the error estimate.
    """
    if not upper > lower >= 0.0:
        raise DomainError(f"bad integration range ({lower}, {upper})")
    if lower == 0.0:
        if not s_one > -1.0:
            raise DomainError(f"endpoint exponent must exceed -1, got {s_one}", field="s_one")
        power = max(1.0, 2.0 / (1.0 + s_one))
    else:
        power = 1.0
    res = _integrate(g, float(lower), float(upper), power, tol, max_depth, floor)
    if lower > 0.0:
        return res
    t_f = floor * upper
    with np.errstate(all="ignore"):
        g_f = float(np.asarray(g(np.array([t_f])), dtype=float).reshape(-1)[0])
    skipped = g_f * t_f / (1.0 + s_one)
    if not math.isfinite(skipped):
        return replace(res, error_estimate=math.inf)
    return replace(res, value=res.value + skipped, error_estimate=res.error_estimate + abs(skipped))


def integrate_half_one(f, s_one=0.0, tol=DEFAULT_TOL, max_depth=DEFAULT_MAX_DEPTH):
    """Integrate ``f(x)`` over (1/2, 1); ``f(x) (1-x)**-s_one`` must stay bounded near 1.

    Nodes closer to 1 than the spacing of doubles are dropped, which costs
    roughly ``1e-16**(1 + s_one)`` in accuracy.  Callers that can write their
    integrand in terms of ``1 - x`` should use :func:`integrate_gap` instead.
    """

    def g(t):
        x = 1.0 - t
        out = np.zeros_like(t)
        inside = x < 1.0
        out[inside] = f(x[inside])
        return out

    res = integrate_gap(g, s_one, tol, max_depth)
    # bound for the dropped piece, assuming the declared power law below the last double
    x_edge = np.nextafter(1.0, 0.0)
    edge = abs(float(np.asarray(f(np.array([x_edge])))[0])) * (1.0 - x_edge) / (1.0 + s_one)
    return replace(res, error_estimate=float(res.error_estimate + edge))


def tanh_sinh_rule(s_one=0.0, depth=6, *, lower=0.0, upper=0.5):
    """Fixed nodes and weights in the gap variable, for repeated integration of smooth families.

    Uses the same substitution as :func:`integrate_gap`, truncated at ``depth``.
    """
    if lower == 0.0:
        if not s_one > -1.0:
            raise DomainError(f"endpoint exponent must exceed -1, got {s_one}", field="s_one")
        power = max(1.0, 2.0 / (1.0 + s_one))
    else:
        power = 1.0
    h = 2.0 ** -depth
    n = int(round(_U_MAX / h))
    u = np.arange(-n, n + 1, dtype=float) * h
    t, weight = _mapped(u, lower, upper, power)
    keep = (t - lower > DEFAULT_FLOOR * (upper - lower)) & (t < upper) & (weight > 0.0)
    return t[keep], weight[keep] * h
