"""Higher-order variational problems on finite time scales.

The functional is ``sum over t in [a, rho^r(b)] of mu(t) * L([y](t))`` where
``[y](t) = (t, y(t), y^Delta(t), ..., y^{Delta^r}(t))``.  The 2r boundary
conditions fix ``y^{Delta^i}`` at ``a`` and at ``rho^{r-1}(b)`` for
``i < r``; they pin the first r and the last r raw values of ``y``.  The
remaining ``N - 2r`` interior values are free.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calculus import GridFunction, delta_derivative_n, derivative_stack, difference_operators
from .errors import DomainMismatch, ProblemError, WrongPointCount
from .lagrangian import Lagrangian
from .timescale import TimeScale

ADMISSIBLE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Trajectory:
    y: GridFunction

    def __post_init__(self):
        if len(self.y) != len(self.y.ts):
            raise DomainMismatch("a trajectory must be defined on the whole time scale")

    @classmethod
    def from_values(cls, ts: TimeScale, values) -> "Trajectory":
        return cls(GridFunction(ts, values))

    @property
    def ts(self) -> TimeScale:
        return self.y.ts

    @property
    def values(self) -> np.ndarray:
        return self.y.values

    def derivative(self, i: int) -> GridFunction:
        return delta_derivative_n(self.y, i)

    def bracket(self, r: int) -> np.ndarray:
        """Rows ``y, y^Delta, ..., y^{Delta^r}`` restricted to ``[a, rho^r(b)]``."""
        m = len(self.ts) - r
        return np.stack([g.values[:m] for g in derivative_stack(self.y, r)])


@dataclass(frozen=True, eq=False)
class VariationalProblem:
    ts: TimeScale
    lagrangian: Lagrangian
    left: tuple[float, ...]
    right: tuple[float, ...]
    allow_degenerate: bool = field(default=False, repr=False)

    def __post_init__(self):
        r = self.lagrangian.order
        object.__setattr__(self, "left", tuple(float(v) for v in self.left))
        object.__setattr__(self, "right", tuple(float(v) for v in self.right))
        if len(self.left) != r or len(self.right) != r:
            raise ProblemError(
                f"order {r} needs {r} left and {r} right boundary values, "
                f"got {len(self.left)} and {len(self.right)}"
            )
        n = len(self.ts)
        if n < 2 * r:
            raise WrongPointCount(f"order {r} needs at least {2 * r} points, got {n}")
        if n == 2 * r and not self.allow_degenerate:
            warnings.warn(
                f"{n} points for order {r}: the admissible set is a single trajectory",
                stacklevel=3,
            )

    @property
    def order(self) -> int:
        return self.lagrangian.order

    @property
    def n_free(self) -> int:
        return len(self.ts) - 2 * self.order

    @property
    def n_nodes(self) -> int:
        """Points of ``[a, rho^r(b)]``, where the integrand is evaluated."""
        return len(self.ts) - self.order

    @property
    def nodes(self) -> np.ndarray:
        return self.ts.points[: self.n_nodes]

    @property
    def node_weights(self) -> np.ndarray:
        return self.ts.graininess[: self.n_nodes]

    def interior(self, y: Trajectory) -> np.ndarray:
        r = self.order
        return y.values[r: len(self.ts) - r].copy()


def forward_layer(mu: np.ndarray, derivs: Sequence[float]) -> np.ndarray:
    """Raw values at r consecutive points from the first r delta derivatives at the first one.

    Uses ``g(sigma(t)) = g(t) + mu(t) g^Delta(t)`` on the triangle of
    derivative values; ``mu`` holds the graininess of the first r-1 points.
    """
    r = len(derivs)
    table = [[0.0] * r for _ in range(r)]  # table[i][k] = y^{Delta^i} at point k
    for i, v in enumerate(derivs):
        table[i][0] = v
    for k in range(r - 1):
        for i in range(r - 1 - k):
            table[i][k + 1] = table[i][k] + mu[k] * table[i + 1][k]
    return np.array([table[0][k] for k in range(r)])


def boundary_layer_solve(p: VariationalProblem) -> tuple[np.ndarray, np.ndarray]:
    """The first r and the last r values of every admissible trajectory."""
    r, n = p.order, len(p.ts)
    mu = p.ts.graininess
    left = forward_layer(mu[: r - 1], p.left)
    right = forward_layer(mu[n - r: n - 1], p.right)
    return left, right


def embed_free(p: VariationalProblem, free) -> Trajectory:
    free = np.asarray(free, dtype=float).ravel()
    if free.size != p.n_free:
        raise ProblemError(f"expected {p.n_free} free values, got {free.size}")
    left, right = boundary_layer_solve(p)
    return Trajectory.from_values(p.ts, np.concatenate([left, free, right]))


def is_admissible(p: VariationalProblem, y: Trajectory, tol: float = ADMISSIBLE_TOL) -> bool:
    if y.ts != p.ts:
        return False
    r, n = p.order, len(p.ts)
    stack = derivative_stack(y.y, r - 1)
    c = n - r
    for i in range(r):
        if abs(stack[i].values[0] - p.left[i]) > tol:
            return False
        if abs(stack[i].values[c] - p.right[i]) > tol:
            return False
    return True


def functional_value(p: VariationalProblem, y: Trajectory) -> float:
    """Delta integral of ``L[y]`` from ``a`` to ``rho^{r-1}(b)``."""
    if y.ts != p.ts:
        raise DomainMismatch("trajectory and problem use different time scales")
    z = y.bracket(p.order)
    return float(np.dot(p.node_weights, p.lagrangian.value(p.nodes, z)))


def norm_r_inf(p: VariationalProblem, y: Trajectory, ybar: Trajectory) -> float:
    """``sum_i sup |y^{Delta^i} - ybar^{Delta^i}|`` over each derivative's own domain."""
    if y.ts != ybar.ts or y.ts != p.ts:
        raise DomainMismatch("trajectories live on different time scales")
    diff = GridFunction(p.ts, y.values - ybar.values)
    return float(sum(np.max(np.abs(g.values)) for g in derivative_stack(diff, p.order)))


def snormal_sum(p: VariationalProblem, y: Trajectory) -> float:
    """Literal ``sum_{i<r} mu(sigma^i a) L([y](sigma^i a))`` for 2r-point scales."""
    r = p.order
    z = y.bracket(r)
    total = 0.0
    for i in range(r):
        t = p.ts.points[i]
        total += p.ts.graininess[i] * p.lagrangian(t, *z[:, i])
    return total


def constraint_system(p: VariationalProblem) -> tuple[np.ndarray, np.ndarray]:
    """The 2r boundary conditions as a linear system ``C y = d``."""
    r, n = p.order, len(p.ts)
    ops = difference_operators(p.ts, r - 1)
    c = n - r
    rows = [ops[i][0] for i in range(r)] + [ops[i][c] for i in range(r)]
    return np.array(rows), np.array(p.left + p.right)


def degenerate_constant_check(p: VariationalProblem, samples: int = 8,
                              rng: np.random.Generator | None = None) -> float:
    """Spread of the functional over admissible trajectories when ``N == 2r``.

    Each sample draws random raw values and pushes their (empty) interior
    through :func:`embed_free`; with nothing left free every sample must land
    on the same trajectory and the spread is exactly 0.
    """
    r, n = p.order, len(p.ts)
    if n != 2 * r:
        raise WrongPointCount(f"degeneracy check needs exactly {2 * r} points, got {n}")
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(0) if rng is None else rng
    values = []
    for _ in range(samples):
        raw = rng.normal(size=n)
        y = embed_free(p, raw[r: n - r])
        values.append(functional_value(p, y))
    return float(max(values) - min(values))
