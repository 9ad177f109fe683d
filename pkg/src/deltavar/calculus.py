"""Delta derivatives and delta integrals of grid functions on finite time scales.

A :class:`GridFunction` lives on a prefix of its parent time scale, i.e. on
some kappa-truncation ``ts^{kappa^n}``.  Keeping the parent around matters:
graininess at the last point of a truncated domain is measured in the parent,
not in the truncation (where that point would be the maximum).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainMismatch, TimeScaleError, TooFewPoints
from .timescale import PointLike, TimeScale, kappa_trunc


@dataclass(frozen=True, eq=False)
class GridFunction:
    ts: TimeScale
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not 1 <= vals.size <= len(self.ts):
            raise DomainMismatch(
                f"{vals.size} values do not fit a scale of {len(self.ts)} points"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, ts: TimeScale, f: Callable[[np.ndarray], np.ndarray],
                      size: int | None = None) -> "GridFunction":
        pts = ts.points[: len(ts) if size is None else size]
        return cls(ts, np.broadcast_to(np.asarray(f(pts), dtype=float), pts.shape))

    def __len__(self) -> int:
        return self.values.size

    @property
    def truncation(self) -> int:
        """How many kappa steps separate the domain from the parent scale."""
        return len(self.ts) - len(self)

    @property
    def domain(self) -> TimeScale:
        return kappa_trunc(self.ts, self.truncation)

    @property
    def points(self) -> np.ndarray:
        return self.ts.points[: len(self)]

    @property
    def graininess(self) -> np.ndarray:
        return self.ts.graininess[: len(self)]

    def __call__(self, t: PointLike) -> float:
        i = self.ts.index_of(t)
        if i >= len(self):
            raise TimeScaleError(f"{t} lies outside the domain of this function")
        return float(self.values[i])

    def restrict(self, size: int) -> "GridFunction":
        """Restrict to the first ``size`` points."""
        if size > len(self):
            raise DomainMismatch(f"cannot extend a function of {len(self)} points to {size}")
        return GridFunction(self.ts, self.values[:size])

    def shift(self, n: int = 1) -> "GridFunction":
        """``f^{sigma^n}`` on the points whose n-th successor lies in the domain."""
        if n >= len(self):
            raise TooFewPoints(f"cannot shift a function of {len(self)} points by {n}")
        return GridFunction(self.ts, self.values[n:])

    def _check(self, other: "GridFunction") -> None:
        if not isinstance(other, GridFunction):
            return
        if self.ts != other.ts or len(self) != len(other):
            raise DomainMismatch(
                "grid functions live on different domains; restrict explicitly first"
            )

    def _binary(self, other, op) -> "GridFunction":
        self._check(other)
        rhs = other.values if isinstance(other, GridFunction) else float(other)
        return GridFunction(self.ts, op(self.values, rhs))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda x, y: y - x)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.ts, -self.values)

    def __repr__(self) -> str:
        return f"GridFunction(points={self.points.tolist()}, values={self.values.tolist()})"


def delta_derivative(f: GridFunction) -> GridFunction:
    """Forward difference quotient ``(f(sigma(t)) - f(t)) / mu(t)`` on ``domain^kappa``."""
    if len(f) < 2:
        raise TooFewPoints("delta derivative needs at least 2 points")
    mu = f.graininess[:-1]
    return GridFunction(f.ts, np.diff(f.values) / mu)


def delta_derivative_n(f: GridFunction, r: int) -> GridFunction:
    if r < 0:
        raise ValueError("order must be nonnegative")
    if len(f) < r + 1:
        raise TooFewPoints(f"order {r} derivative needs at least {r + 1} points")
    for _ in range(r):
        f = delta_derivative(f)
    return f


def derivative_stack(f: GridFunction, r: int) -> list[GridFunction]:
    """``[f, f^Delta, ..., f^{Delta^r}]``."""
    out = [f]
    for _ in range(r):
        out.append(delta_derivative(out[-1]))
    return out


def delta_integral(f: GridFunction, c: PointLike, d: PointLike) -> float:
    """Sum of ``mu(t) f(t)`` over points ``c <= t < d``."""
    ic, id_ = f.ts.index_of(c), f.ts.index_of(d)
    if ic > id_:
        raise ValueError("lower limit exceeds upper limit")
    if id_ > len(f):
        raise TimeScaleError("integration range leaves the domain of the integrand")
    return float(np.dot(f.graininess[ic:id_], f.values[ic:id_]))


def sigma_integral(f: GridFunction) -> GridFunction:
    """``t -> int_a^{sigma(t)} f`` on the points of the domain that have a successor.

    Computed as a prefix sum.  At ``b`` (where sigma(b) = b) the value is not
    reported, so the result always sits on ``domain`` minus the parent max.
    """
    size = min(len(f), len(f.ts) - 1)
    if size < 1:
        raise TooFewPoints("sigma integral needs at least 2 points in the parent scale")
    weighted = f.graininess[:size] * f.values[:size]
    return GridFunction(f.ts, np.cumsum(weighted))


def nested_sigma_integral(f: GridFunction, depth: int, t: PointLike | None = None):
    """Depth-fold nest ``int_a^{sigma(t)} int_a^{sigma(tau)} ... f``.

    Returns the grid function when ``t`` is None, otherwise its value at ``t``.
    Each level is one prefix sum, so the cost is O(depth * N).
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    g = f
    for _ in range(depth):
        g = sigma_integral(g)
    if t is None:
        return g
    i = f.ts.index_of(t)
    if i >= len(g):
        raise TimeScaleError(f"{t} is outside the range where the nest is defined")
    return float(g.values[i])


def check_exgc_identity(f: GridFunction, i: int, j: int, h: float | None = None) -> float:
    """Max discrepancy of the h-lattice identity

    ``[ (j-i)-fold sigma-nest of f ]^{Delta^j} = f^{Delta^i}(sigma^{j-i}(t))``.

    ``f`` must live on a uniform grid; ``h`` (if given) must match its step.
    """
    if not 0 <= i < j:
        raise ValueError("need 0 <= i < j")
    ts = f.ts
    if not ts.is_uniform():
        raise TimeScaleError("identity holds on uniform h-grids only")
    if h is not None and abs((ts.points[1] - ts.points[0]) - h) > 1e-12 * max(1.0, h):
        raise TimeScaleError("h does not match the grid spacing")
    if len(f) < j + 2:
        raise TooFewPoints(f"window of {len(f)} points too short for j={j}")
    lhs = delta_derivative_n(nested_sigma_integral(f, j - i), j)
    rhs = delta_derivative_n(f, i).shift(j - i)
    n = min(len(lhs), len(rhs))
    return float(np.max(np.abs(lhs.values[:n] - rhs.values[:n])))


def difference_operators(ts: TimeScale, r: int) -> list[np.ndarray]:
    """Matrices ``D_i`` of shape ``(N - i, N)`` with ``D_i @ f = f^{Delta^i}``."""
    n = len(ts)
    if r >= n:
        raise TooFewPoints(f"order {r} needs at least {r + 1} points")
    mu = ts.graininess
    ops = [np.eye(n)]
    for i in range(1, r + 1):
        m = n - i
        step = (np.eye(m, m + 1, 1) - np.eye(m, m + 1)) / mu[:m, None]
        ops.append(step @ ops[-1])
    return ops
