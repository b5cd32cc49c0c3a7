"""Covariance profiles, their concave envelopes, and transversal field laws.

The energy landscape of a hierarchical Gaussian spin glass is fixed by a
non-decreasing profile A on [0, 1]: the covariance of two configurations with
overlap q is N * A(q).  Every limiting formula downstream consumes not A
itself but its concave envelope, summarised by the kink positions y_l, the
increments abar_l, the segment lengths L_l and the slopes gamma_l = abar_l/L_l.

The transversal field enters all formulas only through the scalar
p(beta) = E[ln 2 cosh(beta * b)], the pressure of the free quantum paramagnet,
which is computed here for the supported field laws.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ValidationError

LN2 = math.log(2.0)

_SUM_TOL = 1e-12


class ProfileKind(enum.Enum):
    STEP = "step"
    PIECEWISE_LINEAR = "piecewise_linear"


def ln_2cosh(x):
    """ln(2 cosh(x)), overflow-safe for large |x|. Works on scalars and arrays."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax))


@dataclass(frozen=True)
class DistributionSpec:
    """A non-decreasing covariance profile given by its breakpoints.

    ``points`` lists (x_k, A(x_k)) with 0 < x_1 < ... < x_n = 1.  A step
    profile is right-continuous with jumps a_k = A(x_k) - A(x_{k-1}); a
    piecewise-linear profile interpolates between breakpoints with A(0) = 0.
    ``normalized`` requires A(1) = 1; reduced models may carry total weight
    below one.
    """

    kind: ProfileKind
    points: tuple[tuple[float, float], ...]
    normalized: bool = True

    def __post_init__(self):
        if not self.points:
            raise ValidationError("profile needs at least one breakpoint")
        xs = [float(x) for x, _ in self.points]
        vals = [float(v) for _, v in self.points]
        if any(not (0.0 < x <= 1.0) for x in xs):
            raise ValidationError("breakpoints must lie in (0, 1]")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValidationError("breakpoints must be strictly increasing")
        if xs[-1] != 1.0:
            raise ValidationError("last breakpoint must be exactly 1")
        if vals[0] < 0.0 or any(b < a for a, b in zip(vals, vals[1:])):
            raise ValidationError("profile values must be non-negative and non-decreasing")
        if self.normalized and abs(vals[-1] - 1.0) > _SUM_TOL:
            raise ValidationError(f"normalized profile must reach 1 at x=1, got {vals[-1]!r}")
        if vals[-1] > 1.0 + _SUM_TOL:
            raise ValidationError("profile values must not exceed 1")
        object.__setattr__(self, "points", tuple((x, v) for x, v in zip(xs, vals)))

    @classmethod
    def step(cls, xs, values, normalized=True) -> "DistributionSpec":
        return cls(ProfileKind.STEP, tuple(zip(xs, values)), normalized)

    @classmethod
    def from_jumps(cls, jumps, xs=None, normalized=True) -> "DistributionSpec":
        """Step profile with jump heights ``jumps``; breakpoints default to equal spacing."""
        jumps = list(jumps)
        if xs is None:
            n = len(jumps)
            xs = [(k + 1) / n for k in range(n)]
        values = np.cumsum(jumps)
        return cls(ProfileKind.STEP, tuple(zip(xs, values)), normalized)

    @classmethod
    def piecewise_linear(cls, xs, values, normalized=True) -> "DistributionSpec":
        return cls(ProfileKind.PIECEWISE_LINEAR, tuple(zip(xs, values)), normalized)

    @classmethod
    def rem(cls) -> "DistributionSpec":
        """Single fully-uncorrelated level: one unit jump at x = 1."""
        return cls(ProfileKind.STEP, ((1.0, 1.0),))

    @property
    def jump_heights(self) -> tuple[float, ...]:
        vals = [v for _, v in self.points]
        return tuple(np.diff([0.0] + vals))

    @property
    def total(self) -> float:
        return self.points[-1][1]

    def value_at(self, x: float) -> float:
        """A(x) for 0 <= x <= 1 (right-continuous for step profiles)."""
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"x={x} outside [0, 1]")
        xs = [p for p, _ in self.points]
        vals = [v for _, v in self.points]
        if self.kind is ProfileKind.STEP:
            i = bisect_right(xs, x)
            return 0.0 if i == 0 else vals[i - 1]
        return float(np.interp(x, [0.0] + xs, [0.0] + vals))


@dataclass(frozen=True)
class ConcaveHull:
    """Concave envelope of a profile, as segments between its kinks.

    ``support`` holds y_1 < ... < y_m (y_0 = 0 implicit); slopes are strictly
    decreasing because collinear breakpoints are merged into one segment.
    For reduced models the domain may end before 1: span = y_m.
    """

    support: tuple[float, ...]
    increments: tuple[float, ...]
    lengths: tuple[float, ...]
    slopes: tuple[float, ...]

    def __post_init__(self):
        m = len(self.support)
        if m == 0 or not (len(self.increments) == len(self.lengths) == len(self.slopes) == m):
            raise ValidationError("hull fields must be non-empty and of equal length")
        if any(l <= 0 for l in self.lengths):
            raise ValidationError("segment lengths must be positive")
        if any(a < 0 for a in self.increments):
            raise ValidationError("increments must be non-negative")
        if any(b >= a for a, b in zip(self.slopes, self.slopes[1:])):
            raise ValidationError("hull slopes must be strictly decreasing")

    @property
    def m(self) -> int:
        return len(self.support)

    @property
    def span(self) -> float:
        return self.support[-1]

    @property
    def total(self) -> float:
        return float(sum(self.increments))

    def value_at(self, y: float) -> float:
        """Envelope value at y (piecewise-linear interpolation)."""
        if not 0.0 <= y <= self.span + 1e-15:
            raise DomainError(f"y={y} outside [0, {self.span}]")
        prev_y, acc = 0.0, 0.0
        for y_l, a_l, g_l in zip(self.support, self.increments, self.slopes):
            if y <= y_l:
                return acc + g_l * (y - prev_y)
            prev_y, acc = y_l, acc + a_l
        return acc


def _upper_envelope(points):
    """Vertices of the upper concave envelope, scanning left to right.

    Collinear interior points are dropped, so consecutive slopes come out
    strictly decreasing.
    """
    hull = []
    for p in points:
        while len(hull) >= 2:
            (x0, v0), (x1, v1) = hull[-2], hull[-1]
            # left turn or collinear: middle vertex is not extreme
            if (x1 - x0) * (p[1] - v0) - (v1 - v0) * (p[0] - x0) >= 0.0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def hull_from_points(points) -> ConcaveHull:
    """Concave envelope of {(0,0)} followed by the given (x, A(x)) breakpoints."""
    verts = _upper_envelope([(0.0, 0.0)] + [(float(x), float(v)) for x, v in points])
    # The cross-product test pops exactly collinear vertices, but for nearly
    # collinear points the divided slopes can still tie at float resolution;
    # merge those so the slope sequence is strictly decreasing.
    i = 1
    while i < len(verts) - 1:
        (x0, v0), (x1, v1), (x2, v2) = verts[i - 1], verts[i], verts[i + 1]
        if (v1 - v0) / (x1 - x0) <= (v2 - v1) / (x2 - x1):
            del verts[i]
            i = max(1, i - 1)
        else:
            i += 1
    support, increments, lengths, slopes = [], [], [], []
    for (x0, v0), (x1, v1) in zip(verts, verts[1:]):
        support.append(x1)
        increments.append(v1 - v0)
        lengths.append(x1 - x0)
        slopes.append((v1 - v0) / (x1 - x0))
    return ConcaveHull(tuple(support), tuple(increments), tuple(lengths), tuple(slopes))


def concave_hull(spec: DistributionSpec) -> ConcaveHull:
    """Smallest concave majorant of the profile.

    For step and piecewise-linear profiles alike, the envelope is determined
    by the breakpoint set, so both reduce to an upper hull of the points
    {(0,0)} + spec.points.
    """
    return hull_from_points(spec.points)


def right_derivative(hull: ConcaveHull, x: float) -> float:
    """Right derivative of the envelope at x in [0, span).

    Piecewise constant and non-increasing: at a kink y_l it returns the slope
    of the segment starting there.
    """
    if not 0.0 <= x < hull.span:
        raise DomainError(f"x={x} outside [0, {hull.span})")
    i = bisect_right(hull.support, x)
    return hull.slopes[i]


class FieldLaw(enum.Enum):
    CONSTANT = "constant"
    DISCRETE = "discrete"
    GAUSSIAN = "gaussian"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class FieldSpec:
    """Law of the i.i.d. transversal field weights b_j.

    All four variants have a finite first absolute moment, which is what the
    limit theorems require.
    """

    law: FieldLaw
    gamma: float = 0.0
    atoms: tuple[tuple[float, float], ...] = ()
    mean: float = 0.0
    stddev: float = 0.0
    samples: tuple[float, ...] = ()

    def __post_init__(self):
        if self.law is FieldLaw.CONSTANT:
            if self.gamma < 0.0:
                raise ValidationError("constant field strength must be >= 0")
        elif self.law is FieldLaw.DISCRETE:
            if not self.atoms:
                raise ValidationError("discrete law needs at least one atom")
            probs = [p for _, p in self.atoms]
            if any(p < 0 for p in probs):
                raise ValidationError("atom probabilities must be >= 0")
            if abs(sum(probs) - 1.0) > _SUM_TOL:
                raise ValidationError(f"atom probabilities must sum to 1, got {sum(probs)!r}")
        elif self.law is FieldLaw.GAUSSIAN:
            if self.stddev < 0.0:
                raise ValidationError("gaussian stddev must be >= 0")
        elif self.law is FieldLaw.EMPIRICAL:
            if not self.samples:
                raise ValidationError("empirical law needs at least one sample")

    @classmethod
    def constant(cls, gamma: float) -> "FieldSpec":
        return cls(FieldLaw.CONSTANT, gamma=float(gamma))

    @classmethod
    def discrete(cls, atoms) -> "FieldSpec":
        return cls(FieldLaw.DISCRETE, atoms=tuple((float(v), float(p)) for v, p in atoms))

    @classmethod
    def gaussian(cls, mean: float, stddev: float) -> "FieldSpec":
        return cls(FieldLaw.GAUSSIAN, mean=float(mean), stddev=float(stddev))

    @classmethod
    def empirical(cls, samples) -> "FieldSpec":
        return cls(FieldLaw.EMPIRICAL, samples=tuple(float(s) for s in samples))

    def label(self) -> str:
        """Compact deterministic description, used in CSV columns."""
        if self.law is FieldLaw.CONSTANT:
            return format(self.gamma, ".17g")
        if self.law is FieldLaw.DISCRETE:
            return "discrete:" + ";".join(
                f"{format(v, '.17g')}@{format(p, '.17g')}" for v, p in self.atoms
            )
        if self.law is FieldLaw.GAUSSIAN:
            return f"gaussian:{format(self.mean, '.17g')};{format(self.stddev, '.17g')}"
        return f"empirical:n={len(self.samples)}"


@lru_cache(maxsize=8)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gaussian_ln2cosh_mean(mu: float, sigma: float, quad_points: int) -> float:
    """E[ln 2 cosh(Y)] for Y ~ N(mu, sigma^2).

    Split as E|Y| + E[log1p(exp(-2|Y|))]: the first term is closed form, the
    second is smooth and bounded, so Gauss-Legendre on the folded density
    reaches machine precision.  (Plain Gauss-Hermite converges poorly here
    because ln 2 cosh bends sharply at 0 when sigma is large.)
    """
    mean_abs = sigma * math.sqrt(2.0 / math.pi) * math.exp(-0.5 * (mu / sigma) ** 2)
    mean_abs += mu * math.erf(mu / (sigma * math.sqrt(2.0)))
    # remainder integrand decays like exp(-2t): truncate where it underflows
    upper = 30.0
    x, w = _leggauss(quad_points)
    t = 0.5 * upper * (x + 1.0)
    folded = (
        np.exp(-0.5 * ((t - mu) / sigma) ** 2) + np.exp(-0.5 * ((t + mu) / sigma) ** 2)
    ) / (sigma * math.sqrt(2.0 * math.pi))
    remainder = 0.5 * upper * float(w @ (np.log1p(np.exp(-2.0 * t)) * folded))
    return mean_abs + remainder


def paramagnetic_pressure(field: FieldSpec, beta: float, quad_points: int = 256) -> float:
    """E[ln 2 cosh(beta * b)]: the pressure of the free quantum paramagnet."""
    if beta < 0.0:
        raise DomainError("beta must be >= 0")
    if field.law is FieldLaw.CONSTANT:
        return float(ln_2cosh(beta * field.gamma))
    if field.law is FieldLaw.DISCRETE:
        return float(sum(p * ln_2cosh(beta * v) for v, p in field.atoms))
    if field.law is FieldLaw.GAUSSIAN:
        mu, sigma = beta * field.mean, beta * field.stddev
        if sigma == 0.0:
            return float(ln_2cosh(mu))
        return _gaussian_ln2cosh_mean(mu, sigma, quad_points)
    return float(np.mean(ln_2cosh(beta * np.asarray(field.samples))))


def sample_weights(field: FieldSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. field weights from the law."""
    if field.law is FieldLaw.CONSTANT:
        return np.full(n, field.gamma)
    if field.law is FieldLaw.DISCRETE:
        vals = np.array([v for v, _ in field.atoms])
        probs = np.array([p for _, p in field.atoms])
        return rng.choice(vals, size=n, p=probs / probs.sum())
    if field.law is FieldLaw.GAUSSIAN:
        return field.mean + field.stddev * rng.standard_normal(n)
    return rng.choice(np.asarray(field.samples), size=n, replace=True)
