"""Uniform observation quantizers with an overflow symbol, and action grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameter
from .gaussian import Interval, interval_mass, std_normal_cdf


def _positive(name, value):
    if not (isinstance(value, (int, float, np.integer, np.floating)) and math.isfinite(value) and value > 0):
        raise InvalidParameter(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def _count(name, value):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise InvalidParameter(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Quantizer:
    """Uniform quantizer on ``[-radius, radius)`` with ``n`` cells.

    Symbol 0 is the overflow symbol (level 0) covering both tails; symbols
    ``1..n`` are the granular cells in increasing order.
    """

    radius: float
    n: int
    edges: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)
    overflow_level: float = 0.0

    @property
    def width(self):
        return 2.0 * self.radius / self.n

    @property
    def cells(self):
        return [Interval(float(a), float(b)) for a, b in zip(self.edges[:-1], self.edges[1:])]

    @property
    def symbol_levels(self):
        """Levels indexed by symbol: overflow level first."""
        return np.r_[self.overflow_level, self.levels]

    @property
    def num_symbols(self):
        return self.n + 1

    def __eq__(self, other):
        return (
            isinstance(other, Quantizer)
            and self.radius == other.radius
            and self.n == other.n
            and self.overflow_level == other.overflow_level
        )

    def __hash__(self):
        return hash((self.radius, self.n, self.overflow_level))

    def refines(self, coarse: "Quantizer") -> bool:
        """True if every cell of ``self`` (tails included) lies inside one cell of ``coarse``."""
        if self.radius < coarse.radius:
            return False
        return bool(np.all(np.isin(coarse.edges, self.edges)))


def make_uniform_quantizer(radius, n) -> Quantizer:
    radius = _positive("radius", radius)
    n = _count("n", n)
    edges = np.linspace(-radius, radius, n + 1)
    levels = 0.5 * (edges[:-1] + edges[1:])
    return Quantizer(radius=radius, n=n, edges=_frozen(edges), levels=_frozen(levels))


def quantize(q: Quantizer, y):
    """Map observations to ``(symbol index, level)``.

    Cells are half-open, so an exact cell edge belongs to the cell on its
    right. Anything outside ``[-radius, radius)`` goes to symbol 0.
    """
    ya = np.asarray(y, dtype=float)
    idx = np.searchsorted(q.edges, ya, side="right")
    granular = (ya >= -q.radius) & (ya < q.radius)
    idx = np.where(granular, idx, 0)
    level = q.symbol_levels[idx]
    if ya.ndim == 0:
        return int(idx), float(level)
    return idx, level


def cell_masses(q: Quantizer, scale=1.0) -> np.ndarray:
    """Symbol probabilities under N(0, scale**2); entry 0 is the merged tail mass."""
    scale = _positive("scale", scale)
    e = q.edges / scale
    granular = interval_mass(e[:-1], e[1:])
    tails = 2.0 * std_normal_cdf(-q.radius / scale)
    return np.r_[tails, granular]


@dataclass(frozen=True, eq=False)
class ActionGrid:
    half_width: float
    points: np.ndarray = field(repr=False)
    nested: bool = False

    @property
    def size(self):
        return len(self.points)

    def __contains__(self, u):
        return bool(np.any(self.points == u))

    def issubset(self, other: "ActionGrid") -> bool:
        return bool(np.all(np.isin(self.points, other.points)))

    def refine(self) -> "ActionGrid":
        """Dyadic refinement with the same half-width (contains ``self`` when nested)."""
        if not self.nested:
            return make_action_grid(self.half_width, 3 * self.size, nested=False)
        return make_action_grid(self.half_width, 2 * (self.size - 1) + 1, nested=True)


def make_action_grid(m, k, nested=False) -> ActionGrid:
    """Finite action set inside ``[-m, m]``.

    Non-nested grids are the ``k`` midpoints of a uniform partition of
    ``[-m, m]``. Nested grids are the dyadic points ``-m + j * 2m / 2**t``
    with the smallest ``t >= 1`` such that ``2**t + 1 >= k``; they always
    contain ``{-m, 0, m}`` and each doubling contains its parent.
    """
    m = _positive("m", m)
    k = _count("k", k)
    if nested:
        t = 1
        while 2 ** t + 1 < k:
            t += 1
        points = np.linspace(-m, m, 2 ** t + 1)
    else:
        edges = np.linspace(-m, m, k + 1)
        points = 0.5 * (edges[:-1] + edges[1:])
    return ActionGrid(half_width=m, points=_frozen(points), nested=bool(nested))


def nearest_grid_point(g: ActionGrid, u):
    """Closest grid point; exact ties go to the smaller point."""
    ua = np.asarray(u, dtype=float)
    pts = g.points
    right = np.clip(np.searchsorted(pts, ua, side="left"), 0, len(pts) - 1)
    left = np.maximum(right - 1, 0)
    take_left = np.abs(ua - pts[left]) <= np.abs(pts[right] - ua)
    out = np.where(take_left, pts[left], pts[right])
    return float(out) if ua.ndim == 0 else out
