"""Binary dislocation measures.

A binary dislocation measure is a measure on [1/2, 1): an atom or density at
``x`` means the fragment splits into ``(x, 1 - x)``.  Continuous variants are
described by their density in the gap variable ``t = 1 - x`` so that every
integral near the singular end x -> 1 is evaluated without cancellation.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math
from typing import Callable, Sequence

import numpy as np

from . import quadrature
from .errors import DivergentIntegral, EmptyMeasure, InvalidParameter, NotFinite, QuadratureFailure
from .specfun import beta_fn, log_gamma

MASS_TOL = 1e-12
CDF_GRID_POINTS = 4096

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Evaluation:
    value: float
    error_estimate: float
    method: str


def one_minus_pow(x, t, a):
    """1 - x**a for x = 1 - t, accurate when t is tiny."""
    return -np.expm1(a * np.log1p(-t))


class DislocationMeasure:
    """Base class; concrete variants are the dataclasses below."""

    kind = "abstract"
    symmetric = False

    def validate(self):
        raise NotImplementedError

    def total_mass(self):
        raise NotImplementedError

    def integrate(self, h, order=0.0, tol=quadrature.DEFAULT_TOL):
        """Return an :class:`Evaluation` of the integral of ``h(x, t)`` against the measure.

        ``order`` is the rate at which ``h`` vanishes as t -> 0 (``h ~ t**order``);
        it only steers the quadrature substitution.
        """
        raise NotImplementedError

    def phi(self, q, method="auto"):
        q = float(q)
        if q < 0:
            raise InvalidParameter(f"phi needs q >= 0, got {q}", field="q")
        if q == 0.0:
            return Evaluation(0.0, 0.0, "closed-form")
        a = 1.0 + q
        return self.integrate(lambda x, t: one_minus_pow(x, t, a) - t**a, order=1.0)

    def binomial_moment(self, j, k, r, method="auto"):
        """Symmetrised ``C(k,j) * integral of x**(j r) (1-x)**((k-j) r)``."""
        ej, ek = j * r, (k - j) * r
        c = math.comb(k, j)

        def h(x, t):
            return 0.5 * c * (x**ej * t**ek + x**ek * t**ej)

        return self.integrate(h, order=min(ej, ek))

    def to_spec(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Atomic(DislocationMeasure):
    atoms: tuple = ()

    kind = "atomic"

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple((float(x), float(w)) for x, w in self.atoms))

    @property
    def xs(self):
        return np.array([x for x, _ in self.atoms])

    @property
    def weights(self):
        return np.array([w for _, w in self.atoms])

    def validate(self):
        if not self.atoms:
            raise EmptyMeasure("atomic measure has no atoms", field="atoms")
        for i, (x, w) in enumerate(self.atoms):
            if not (0.5 <= x < 1.0):
                raise InvalidParameter(f"atom {i}: x={x} outside [1/2, 1)", field="x")
            if not (w > 0.0 and math.isfinite(w)):
                raise InvalidParameter(f"atom {i}: rate w={w} must be positive", field="w")

    def total_mass(self):
        return float(sum(w for _, w in self.atoms))

    def integrate(self, h, order=0.0, tol=quadrature.DEFAULT_TOL):
        x = self.xs
        t = 1.0 - x
        return Evaluation(float(np.dot(self.weights, h(x, t))), 0.0, "closed-form")

    def finite_rule(self):
        x = self.xs
        return x, 1.0 - x, self.weights

    def sample_split(self, rng, size=None):
        w = self.weights
        idx = rng.choice(len(w), size=size, p=w / w.sum())
        return self.xs[idx]

    def truncate(self, n):
        kept = tuple((x, w) for x, w in self.atoms if 1.0 - x > 1.0 / n)
        if not kept:
            raise EmptyMeasure(f"truncation at n={n} removes every atom", field="n")
        return Atomic(kept)

    def to_spec(self):
        return {"kind": "atomic", "atoms": [{"x": x, "w": w} for x, w in self.atoms]}


class _Continuous(DislocationMeasure):
    """Shared machinery for measures with a density on (1/2, 1 - min_gap)."""

    min_gap = 0.0
    s_half = 0.0

    def gap_density(self, t):
        raise NotImplementedError

    @property
    def s_one(self):
        raise NotImplementedError

    def _node_floor(self):
        # keep t**s_one below ~1e290 at the smallest node
        if self.s_one >= -1.0:
            return quadrature.DEFAULT_FLOOR
        return max(quadrature.DEFAULT_FLOOR, 1e-290 ** (-1.0 / self.s_one) / 0.5)

    def integrate(self, h, order=0.0, tol=quadrature.DEFAULT_TOL):
        dens = self.gap_density
        res = quadrature.integrate_gap(
            lambda t: h(1.0 - t, t) * dens(t),
            self.s_one + order,
            tol,
            lower=self.min_gap,
            floor=self._node_floor(),
        )
        return Evaluation(res.value, res.error_estimate, "quadrature")

    def _check_e9(self):
        if self.min_gap == 0.0 and not self.s_one > -2.0:
            raise DivergentIntegral(
                f"integral of (1-x) nu(dx) diverges: density exponent {self.s_one} <= -2 at x=1",
                field="s_one",
            )
        if not self.s_half > -1.0:
            raise DivergentIntegral(f"density not integrable at x=1/2 (s_half={self.s_half})", field="s_half")
        try:
            res = self.integrate(lambda x, t: t, order=1.0)
        except QuadratureFailure as exc:
            raise DivergentIntegral(f"integral of (1-x) nu(dx) failed: {exc}") from exc
        if not math.isfinite(res.value):
            raise DivergentIntegral("integral of (1-x) nu(dx) is not finite")
        if res.value <= 0.0:
            raise EmptyMeasure("density integrates to zero")
        return res.value

    def total_mass(self):
        if self.min_gap == 0.0 and self.s_one <= -1.0:
            return math.inf
        return self.integrate(lambda x, t: np.ones_like(t)).value

    def truncate(self, n):
        gap = max(self.min_gap, 1.0 / n)
        if gap >= 0.5:
            raise EmptyMeasure(f"truncation at n={n} leaves an empty support", field="n")
        return Density(self.gap_density, s_half=self.s_half, s_one=self.s_one, min_gap=gap, label=self.label_for_truncation(n))

    def label_for_truncation(self, n):
        return f"{self.kind} truncated at n={n}"

    def finite_rule(self, depth=7):
        if not math.isfinite(self.total_mass()):
            raise NotFinite(f"{self.kind} measure has infinite total mass")
        t, w = quadrature.tanh_sinh_rule(self.s_one, depth, lower=self.min_gap)
        return 1.0 - t, t, w * self.gap_density(t)

    @cached_property
    def _sampler(self):
        return _GapSampler(self)

    def sample_split(self, rng, size=None):
        if not math.isfinite(self.total_mass()):
            raise NotFinite(f"cannot sample splits from an infinite {self.kind} measure")
        return self._sampler.sample(rng, size)

    def cdf(self, x):
        """Normalised distribution function of the split position, for finite measures."""
        if not math.isfinite(self.total_mass()):
            raise NotFinite(f"{self.kind} measure has infinite total mass")
        return self._sampler.cdf(x)


@dataclass(frozen=True)
class Brownian(_Continuous):
    """Dislocation measure of the Brownian fragmentation, 2 / sqrt(2 pi x^3 (1-x)^3) dx."""

    kind = "brownian"
    symmetric = True

    @property
    def s_one(self):
        return -1.5

    def gap_density(self, t):
        return 2.0 / _SQRT_2PI * ((1.0 - t) * t) ** -1.5

    def validate(self):
        pass

    def total_mass(self):
        return math.inf

    def phi(self, q, method="auto"):
        if method == "quadrature":
            return _Continuous.phi(self, q)
        q = float(q)
        if q < 0:
            raise InvalidParameter(f"phi needs q >= 0, got {q}", field="q")
        if q == 0.0:
            return Evaluation(0.0, 0.0, "closed-form")
        val = 2.0**1.5 * math.exp(log_gamma(q + 0.5) - log_gamma(q))
        return Evaluation(val, 1e-14 * val, "closed-form")

    def binomial_moment(self, j, k, r, method="auto"):
        if method == "quadrature":
            return _Continuous.binomial_moment(self, j, k, r)
        # C(k,j) B(j r - 1/2, (k-j) r - 1/2) / sqrt(2 pi)
        lg = log_gamma(j * r - 0.5) + log_gamma((k - j) * r - 0.5) - log_gamma(k * r - 1.0)
        val = math.comb(k, j) * math.exp(lg) / _SQRT_2PI
        return Evaluation(val, 1e-13 * val, "closed-form")

    def to_spec(self):
        return {"kind": "brownian"}


@dataclass(frozen=True)
class BetaSplit(_Continuous):
    """Beta-splitting measure c x^beta (1-x)^beta dx on (1/2, 1)."""

    c: float = 1.0
    beta: float = -1.5

    kind = "beta"
    symmetric = True

    @property
    def s_one(self):
        return self.beta

    def gap_density(self, t):
        return self.c * ((1.0 - t) * t) ** self.beta

    def validate(self):
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise InvalidParameter(f"scale c={self.c} must be positive", field="c")
        if not (-2.0 < self.beta < -1.0):
            raise InvalidParameter(f"exponent beta={self.beta} outside (-2, -1)", field="beta")

    def total_mass(self):
        return math.inf

    def phi(self, q, method="auto"):
        if method == "quadrature":
            return _Continuous.phi(self, q)
        q = float(q)
        if q < 0:
            raise InvalidParameter(f"phi needs q >= 0, got {q}", field="q")
        if q == 0.0:
            return Evaluation(0.0, 0.0, "closed-form")
        b, a = self.beta, 1.0 + q
        first = 2.0 * (2.0 * b + 3.0) / (b + 1.0) * beta_fn(b + 2.0, b + 2.0)
        second = 2.0 * (2.0 * b + 2.0 + a) / (b + 1.0) * beta_fn(b + 1.0 + a, b + 2.0)
        val = 0.5 * self.c * (first - second)
        scale = 0.5 * self.c * (abs(first) + abs(second))
        return Evaluation(val, 1e-13 * scale, "closed-form")

    def binomial_moment(self, j, k, r, method="auto"):
        if method == "quadrature":
            return _Continuous.binomial_moment(self, j, k, r)
        b = self.beta
        val = 0.5 * self.c * math.comb(k, j) * beta_fn(b + j * r + 1.0, b + (k - j) * r + 1.0)
        return Evaluation(val, 1e-13 * val, "closed-form")

    def to_spec(self):
        return {"kind": "beta", "c": self.c, "beta": self.beta}


@dataclass(frozen=True, eq=False)
class Density(_Continuous):
    """Measure given by a density in the gap variable, ``nu(dx) = gap_fn(1 - x) dx``.

    ``s_one`` is the exponent of the density at x -> 1 and ``s_half`` at
    x -> 1/2; the support is (1/2, 1 - min_gap).
    """

    gap_fn: Callable = None
    s_half: float = 0.0
    s_one: float = 0.0
    min_gap: float = 0.0
    label: str = "density"
    table: tuple = field(default=None, repr=False)

    kind = "density"

    @classmethod
    def from_x(cls, fn, s_half=0.0, s_one=0.0, **kw):
        return cls(lambda t: fn(1.0 - t), s_half=s_half, s_one=s_one, **kw)

    @classmethod
    def from_table(cls, xs, ds, s_half=0.0, s_one=0.0):
        """Tabulated density on (1/2, 1).

        The table is divided by the declared endpoint power laws, linearly
        interpolated, and multiplied back, so the endpoint behaviour is exact.
        """
        xs = np.asarray(xs, dtype=float)
        ds = np.asarray(ds, dtype=float)
        if xs.ndim != 1 or xs.shape != ds.shape or xs.size < 2:
            raise InvalidParameter("density table needs matching x and d arrays of length >= 2", field="table")
        if np.any(np.diff(xs) <= 0) or xs[0] <= 0.5 or xs[-1] >= 1.0:
            raise InvalidParameter("table abscissae must increase strictly inside (1/2, 1)", field="x")
        if np.any(ds < 0) or not np.all(np.isfinite(ds)):
            raise InvalidParameter("table densities must be finite and non-negative", field="d")
        return cls(_TableShape(xs, ds, s_half, s_one), s_half=s_half, s_one=s_one, label="density-table",
                   table=(tuple(xs.tolist()), tuple(ds.tolist())))

    def gap_density(self, t):
        return self.gap_fn(t)

    def validate(self):
        if self.gap_fn is None:
            raise EmptyMeasure("density variant has no density function")
        if not (math.isfinite(self.min_gap) and 0.0 <= self.min_gap < 0.5):
            raise InvalidParameter(f"min_gap={self.min_gap} outside [0, 1/2)", field="min_gap")
        self._check_e9()

    def label_for_truncation(self, n):
        return f"{self.label} truncated at n={n}"

    def to_spec(self):
        if self.table is None or self.min_gap:
            raise InvalidParameter("only untruncated tabulated densities have a config form")
        xs, ds = self.table
        return {"kind": "density-table", "x": list(xs), "d": list(ds), "s_half": self.s_half, "s_one": self.s_one}


class _TableShape:
    """Gap density of a table: power laws at both ends times a piecewise-linear shape.

    A plain class rather than a closure so tabulated measures can be sent to
    worker processes.
    """

    def __init__(self, xs, ds, s_half, s_one):
        ts = 1.0 - xs
        shape = ds / (ts**s_one * (xs - 0.5) ** s_half)
        # interpolate in t, which must increase
        self.ts = ts[::-1].copy()
        self.shape = shape[::-1].copy()
        self.s_half = s_half
        self.s_one = s_one

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.ts, self.shape) * t**self.s_one * (0.5 - t) ** self.s_half


class _GapSampler:
    """Inverse-CDF sampler for the split position of a finite continuous measure.

    The gap axis (min_gap, 1/2) is cut into CDF_GRID_POINTS cells, graded
    geometrically towards min_gap (x -> upper end of the support) where the
    mass concentrates.  Within a cell the CDF is inverted by Newton steps on an
    8-point Gauss-Legendre evaluation of the partial integral.
    """

    _GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)

    def __init__(self, measure):
        self.measure = measure
        lo, hi = measure.min_gap, 0.5
        span = hi - lo
        n_geo = CDF_GRID_POINTS // 4
        geo = span * np.geomspace(1e-12, 1.0, n_geo)
        uni = span * np.linspace(0.0, 1.0, CDF_GRID_POINTS - n_geo)
        grid = np.unique(np.concatenate([geo, uni]))
        self.edges = lo + grid
        self.edges[-1] = hi
        self.singular = lo == 0.0
        cells = self._cell_masses(self.edges[:-1], self.edges[1:])
        if self.singular:
            # first cell (0, edges[1]) holds the integrable endpoint singularity
            first = quadrature.integrate_gap(measure.gap_density, measure.s_one, upper=self.edges[1]).value
            cells[0] = first
        self.cum = np.concatenate([[0.0], np.cumsum(cells)])
        self.total = self.cum[-1]

    def _cell_masses(self, a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        pts = mid[..., None] + half[..., None] * self._GL_NODES
        return half * (self.measure.gap_density(pts) @ self._GL_WEIGHTS)

    def cdf(self, x):
        """P(split position <= x) for x in [1/2, 1)."""
        x = np.asarray(x, dtype=float)
        t = np.clip(1.0 - x, self.edges[0], self.edges[-1])
        i = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.edges) - 2)
        below = self.cum[i] + self._partial(i, t)
        # x <= X  <=>  t >= T
        return 1.0 - below / self.total

    def _partial(self, i, t):
        a = self.edges[i]
        out = self._cell_masses(a, t)
        if self.singular:
            first = i == 0
            if np.any(first):
                s = self.measure.s_one
                out = np.where(first, self.cum[1] * (t / self.edges[1]) ** (1.0 + s), out)
        return out

    def sample(self, rng, size=None):
        u = rng.random(size)
        target = np.asarray(u) * self.total
        i = np.clip(np.searchsorted(self.cum, target, side="right") - 1, 0, len(self.edges) - 2)
        a, b = self.edges[i], self.edges[i + 1]
        need = target - self.cum[i]
        cell = self.cum[i + 1] - self.cum[i]
        frac = np.where(cell > 0, need / np.where(cell > 0, cell, 1.0), 0.0)
        t = a + (b - a) * frac
        dens = self.measure.gap_density
        for _ in range(4):
            f = self._cell_masses(a, t) - need
            d = dens(t)
            t = np.clip(t - f / np.where(d > 0, d, np.inf), a, b)
        if self.singular:
            first = i == 0
            if np.any(first):
                s = self.measure.s_one
                t = np.where(first, b * np.clip(frac, 0.0, 1.0) ** (1.0 / (1.0 + s)), t)
        x = 1.0 - t
        return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class FragmentationParams:
    measure: DislocationMeasure
    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and alpha < 0.0):
            raise InvalidParameter(f"self-similarity index alpha={self.alpha} must be negative", field="alpha")
        object.__setattr__(self, "alpha", alpha)
        validate(self.measure)

    @property
    def r(self):
        """Exponent 1 - alpha applied to fragment masses."""
        return 1.0 - self.alpha


@dataclass(frozen=True)
class MassPartition:
    masses: tuple

    def __post_init__(self):
        m = tuple(float(v) for v in self.masses)
        if any(not (0.0 < v <= 1.0) for v in m):
            raise InvalidParameter("masses must lie in (0, 1]", field="masses")
        if any(b > a for a, b in zip(m, m[1:])):
            raise InvalidParameter("masses must be non-increasing", field="masses")
        if sum(m) > 1.0 + MASS_TOL:
            raise InvalidParameter(f"masses sum to {sum(m)} > 1", field="masses")
        object.__setattr__(self, "masses", m)


def _as_measure(obj):
    return obj.measure if isinstance(obj, FragmentationParams) else obj


def validate(measure):
    """Raise on the first violated invariant; returns None on success."""
    measure = _as_measure(measure)
    if not isinstance(measure, DislocationMeasure):
        raise InvalidParameter(f"not a dislocation measure: {measure!r}")
    measure.validate()


def e9_integral(measure):
    """The integral of (1 - x) against the measure."""
    measure = _as_measure(measure)
    validate(measure)
    if isinstance(measure, Atomic):
        return float(np.dot(1.0 - measure.xs, measure.weights))
    if isinstance(measure, Brownian):
        # 2/sqrt(2 pi) * integral over (0, 1/2) of t^-1/2 (1-t)^-3/2 dt = 2/sqrt(2 pi) * 2
        return 4.0 / _SQRT_2PI
    return measure.integrate(lambda x, t: t, order=1.0).value


def phi(params, q, method="auto"):
    """The function q -> integral of (1 - x^(1+q) - (1-x)^(1+q)) nu(dx)."""
    return phi_eval(params, q, method).value


def phi_eval(params, q, method="auto"):
    return _as_measure(params).phi(q, method)


def truncate(measure, n):
    """Restrict the measure to splits with 1 - x > 1/n."""
    measure = _as_measure(measure)
    if int(n) != n or n < 2:
        raise InvalidParameter(f"truncation level n={n} must be an integer >= 2", field="n")
    validate(measure)
    return measure.truncate(int(n))


def total_mass(measure):
    """Total mass; ``math.inf`` flags a measure with infinitely many small splits."""
    return _as_measure(measure).total_mass()


def sample_split(measure, rng, size=None):
    """Draw split positions from nu / nu(total) for a measure with finite mass."""
    measure = _as_measure(measure)
    mass = measure.total_mass()
    if not math.isfinite(mass):
        raise NotFinite(f"{measure.kind} measure has infinite total mass")
    if mass <= 0.0:
        raise EmptyMeasure("measure has zero total mass")
    return measure.sample_split(rng, size)


def measure_from_spec(spec):
    """Build a measure from its config mapping (kind: brownian | beta | atomic | density-table)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidParameter("measure spec needs a 'kind' field", field="measure.kind")
    kind = spec["kind"]
    if kind == "brownian":
        return Brownian()
    if kind == "beta":
        try:
            return BetaSplit(c=float(spec["c"]), beta=float(spec["beta"]))
        except KeyError as exc:
            raise InvalidParameter(f"beta measure needs {exc.args[0]!r}", field=f"measure.{exc.args[0]}") from None
    if kind == "atomic":
        atoms = spec.get("atoms")
        if not isinstance(atoms, Sequence) or isinstance(atoms, str):
            raise InvalidParameter("atomic measure needs a list 'atoms' of {x, w}", field="measure.atoms")
        try:
            return Atomic(tuple((float(a["x"]), float(a["w"])) for a in atoms))
        except (KeyError, TypeError) as exc:
            raise InvalidParameter(f"bad atom entry: {exc}", field="measure.atoms") from None
    if kind == "density-table":
        try:
            return Density.from_table(spec["x"], spec["d"], float(spec.get("s_half", 0.0)), float(spec["s_one"]))
        except KeyError as exc:
            raise InvalidParameter(f"density-table needs {exc.args[0]!r}", field=f"measure.{exc.args[0]}") from None
    raise InvalidParameter(f"unknown measure kind {kind!r}", field="measure.kind")
