"""Finite time scales and their jump operators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import NotOnTimeScale, TooFewPoints, TimeScaleError

LOOKUP_TOL = 1e-12


@dataclass(frozen=True)
class Point:
    """A point of a time scale, addressed by its ordinal position."""

    value: float
    index: int

    def __float__(self) -> float:
        return self.value


PointLike = Union[Point, float, int]


class TimeScale:
    """A strictly increasing finite set of real points.

    ``a`` and ``b`` are the minimum and maximum.  Instances are immutable;
    the underlying array is marked read-only.
    """

    __slots__ = ("_points",)

    def __init__(self, points: Iterable[float]):
        arr = np.array(list(points), dtype=float)
        if arr.ndim != 1:
            raise TimeScaleError("points must be a flat sequence")
        if not np.all(np.isfinite(arr)):
            raise TimeScaleError("time scale points must be finite")
        if arr.size < 1:
            raise TooFewPoints("a time scale needs at least one point")
        if arr.size > 1 and not np.all(np.diff(arr) > 0):
            raise TimeScaleError("points must be strictly increasing")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    def __len__(self) -> int:
        return self._points.size

    def __iter__(self):
        for i, v in enumerate(self._points):
            yield Point(float(v), i)

    def __getitem__(self, index: int) -> Point:
        n = len(self)
        if index < 0:
            index += n
        if not 0 <= index < n:
            raise IndexError(index)
        return Point(float(self._points[index]), index)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeScale):
            return NotImplemented
        return self._points.shape == other._points.shape and bool(
            np.all(self._points == other._points)
        )

    def __hash__(self) -> int:
        return hash(self._points.tobytes())

    def __repr__(self) -> str:
        return f"TimeScale({self._points.tolist()!r})"

    @property
    def a(self) -> Point:
        return self[0]

    @property
    def b(self) -> Point:
        return self[-1]

    @property
    def graininess(self) -> np.ndarray:
        """mu at every point; the last entry (at b) is 0."""
        return np.append(np.diff(self._points), 0.0)

    def index_of(self, t: PointLike) -> int:
        """Resolve a point or a raw real to its index."""
        if isinstance(t, Point):
            if not 0 <= t.index < len(self) or self._points[t.index] != t.value:
                raise NotOnTimeScale(f"{t} does not belong to {self!r}")
            return t.index
        x = float(t)
        hits = np.flatnonzero(np.abs(self._points - x) <= LOOKUP_TOL)
        if hits.size == 0:
            raise NotOnTimeScale(f"{x!r} is not a point of the time scale")
        if hits.size > 1:
            raise NotOnTimeScale(f"{x!r} matches several points within {LOOKUP_TOL}")
        return int(hits[0])

    def point(self, t: PointLike) -> Point:
        return self[self.index_of(t)]

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        if len(self) < 2:
            return True
        gaps = np.diff(self._points)
        return bool(np.all(np.abs(gaps - gaps[0]) <= rtol * abs(gaps[0])))


def make_timescale(points: Iterable[float]) -> TimeScale:
    """Sort and deduplicate ``points`` into a time scale with at least two points."""
    values = [float(p) for p in points]
    for v in values:
        if not math.isfinite(v):
            raise TimeScaleError(f"non-finite point {v!r}")
    uniq = sorted(set(values))
    if len(uniq) < 2:
        raise TooFewPoints(f"need at least 2 distinct points, got {len(uniq)}")
    return TimeScale(uniq)


def integer_window(a: int, b: int) -> TimeScale:
    return make_timescale(range(int(a), int(b) + 1))


def h_grid(a: float, b: float, h: float, tol: float = 1e-9) -> TimeScale:
    """The uniform grid a, a+h, ..., b.  ``(b - a) / h`` must be an integer."""
    if not h > 0:
        raise TimeScaleError("h must be positive")
    steps = (b - a) / h
    n = round(steps)
    if abs(steps - n) > tol or n < 1:
        raise TimeScaleError(f"(b - a)/h = {steps!r} is not a positive integer")
    return make_timescale(a + k * h for k in range(n + 1))


def random_timescale(n: int, rng: np.random.Generator, span: float = 1.0,
                     min_gap: float = 0.2) -> TimeScale:
    """Non-uniform scale of ``n`` points on [0, span] with every gap at least ``min_gap * span / (n - 1)``."""
    if n < 2:
        raise TooFewPoints("need at least 2 points")
    gaps = rng.uniform(min_gap, 1.0, size=n - 1)
    gaps *= span / gaps.sum()
    return TimeScale(np.concatenate([[0.0], np.cumsum(gaps)]))


def sigma(ts: TimeScale, t: PointLike) -> Point:
    i = ts.index_of(t)
    return ts[min(i + 1, len(ts) - 1)]


def rho(ts: TimeScale, t: PointLike) -> Point:
    i = ts.index_of(t)
    return ts[max(i - 1, 0)]


def mu(ts: TimeScale, t: PointLike) -> float:
    return sigma(ts, t).value - ts.point(t).value


def sigma_n(ts: TimeScale, t: PointLike, n: int) -> Point:
    if n < 0:
        raise ValueError("n must be nonnegative")
    return ts[min(ts.index_of(t) + n, len(ts) - 1)]


def rho_n(ts: TimeScale, t: PointLike, n: int) -> Point:
    if n < 0:
        raise ValueError("n must be nonnegative")
    return ts[max(ts.index_of(t) - n, 0)]


def kappa_trunc(ts: TimeScale, n: int) -> TimeScale:
    """Remove the maximum ``n`` times."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n >= len(ts):
        raise TooFewPoints(f"cannot truncate {n} points from a scale of {len(ts)}")
    return TimeScale(ts.points[: len(ts) - n])
