"""Scalar standard-normal numerics.

Everything here is expressed for N(0, 1); other variances are handled by
rescaling at the call site (``truncated_moments(Interval(lo / s, hi / s))``
and multiplying the first and second moments by ``s`` and ``s**2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .exceptions import InvalidParameter, NonFiniteValue

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Interval:
    """Half-open interval ``[lo, hi)``; either end may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise InvalidParameter(f"invalid interval [{self.lo}, {self.hi})")

    def __contains__(self, y):
        return self.lo <= y < self.hi

    def scaled(self, factor):
        return Interval(self.lo * factor, self.hi * factor)


@dataclass(frozen=True)
class TruncatedMoments:
    """Unnormalized raw moments of N(0, 1) restricted to an interval."""

    mass: float
    m1: float
    m2: float


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def std_normal_cdf(x):
    """Phi(x), accurate to about 1e-16 absolute (Cephes ``ndtr``, erf/erfc based)."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def interval_mass(lo, hi):
    """Phi(hi) - Phi(lo), vectorized, evaluated on the tail that avoids cancellation."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    upper = lo > 0
    out = np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    return float(out) if out.ndim == 0 else out


def _x_pdf(x):
    # x * phi(x) with the limit 0 at +-inf
    with np.errstate(invalid="ignore"):
        v = x * std_normal_pdf(x)
    return np.where(np.isinf(x), 0.0, v)


def truncated_moments(iv: Interval) -> TruncatedMoments:
    lo, hi = float(iv.lo), float(iv.hi)
    mass = interval_mass(lo, hi)
    m1 = float(std_normal_pdf(lo) - std_normal_pdf(hi))
    m2 = mass + float(_x_pdf(np.float64(lo)) - _x_pdf(np.float64(hi)))
    return TruncatedMoments(mass=float(mass), m1=m1, m2=max(m2, 0.0))


def truncated_moments_array(lo, hi, scale=1.0):
    """Vectorized moments of N(0, scale**2) over ``[lo, hi)``.

    Returns ``(mass, m1, m2)`` arrays; ``m1`` and ``m2`` are scaled back to the
    original coordinates.
    """
    a = np.asarray(lo, dtype=float) / scale
    b = np.asarray(hi, dtype=float) / scale
    mass = np.asarray(interval_mass(a, b))
    m1 = std_normal_pdf(a) - std_normal_pdf(b)
    m2 = np.maximum(mass + _x_pdf(a) - _x_pdf(b), 0.0)
    return mass, scale * m1, scale * scale * m2


def hermite_rule(nodes: int):
    """Nodes and weights with ``sum(w * g(x)) ~ E[g(Y)]`` for Y ~ N(0, 1)."""
    if int(nodes) != nodes or nodes < 1:
        raise InvalidParameter(f"nodes must be a positive integer, got {nodes!r}")
    x, w = np.polynomial.hermite_e.hermegauss(int(nodes))
    return x, w / math.sqrt(2.0 * math.pi)


def gauss_expect(g: Callable, nodes: int) -> float:
    """Gauss-Hermite estimate of E[g(Y)], Y ~ N(0, 1).

    Exact for polynomials of degree up to ``2 * nodes - 1``. ``g`` is called
    once with the full node array.
    """
    x, w = hermite_rule(nodes)
    vals = np.broadcast_to(np.asarray(g(x), dtype=float), x.shape)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("integrand is not finite at every Gauss-Hermite node")
    return float(np.dot(w, vals))


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator for an int or ``SeedSequence`` seed."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def spawn_seeds(seed, count):
    """Independent child seeds; unlike ``SeedSequence.spawn`` this is stateless."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [
        np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (i,))
        for i in range(count)
    ]


def sample_normal(seed, count: int) -> np.ndarray:
    if int(count) != count or count < 1:
        raise InvalidParameter(f"count must be a positive integer, got {count!r}")
    return make_rng(seed).standard_normal(int(count))
