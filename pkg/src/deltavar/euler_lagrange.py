"""Euler-Lagrange necessary condition via the adjoint (costate) recursion.

With the multiplier normalized to 1, the costate of the control reformulation
satisfies, for ``t`` in ``[a, rho^r(b)]``::

    P_0(t) = -int_a^{sigma(t)} dL/dy0[y] - k_0
    P_i(t) = -int_a^{sigma(t)} (dL/dyi[y] + P_{i-1}) - k_i      i = 1..r-1

where ``P_i = p_i^sigma``.  The Euler-Lagrange residual is
``R(t) = dL/dyr[y](t) + P_{r-1}(t)``; ``y`` is stationary exactly when some
constants ``k_0..k_{r-1}`` make ``R`` vanish on every node.

Constant convention: ``k_i`` is the ``c_{i+1}`` of the r = 1 and r = 2
closed forms (:func:`el_residual_r1`, :func:`el_residual_r2`) with the same
sign, i.e. ``constants[i]`` is passed unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import GridFunction, delta_derivative_n, sigma_integral
from .errors import ProblemError, RankDeficient, TimeScaleError, TooFewPoints
from .timescale import TimeScale
from .variational import Trajectory, VariationalProblem, forward_layer

STATIONARY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class AdjointState:
    costates: tuple[GridFunction, ...]  # p_i^sigma on [a, rho^r(b)]
    constants: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class ELReport:
    constants: tuple[float, ...]
    residual: GridFunction
    residual_sup: float
    residual_l2: float
    scale: float
    tolerance: float
    stationary: bool

    def as_dict(self) -> dict:
        return {
            "constants": list(self.constants),
            "residual_sup": self.residual_sup,
            "residual_l2": self.residual_l2,
            "scale": self.scale,
            "tolerance": self.tolerance,
            "stationary": self.stationary,
        }


def _require(p: VariationalProblem, y: Trajectory) -> None:
    if y.ts != p.ts:
        raise ProblemError("trajectory and problem use different time scales")
    if len(p.ts) < 2 * p.order:
        raise TooFewPoints(f"need at least {2 * p.order} points")


def partials_on_nodes(p: VariationalProblem, y: Trajectory) -> np.ndarray:
    """``dL/dyi[y](t)`` for i = 0..r on the nodes, shape ``(r+1, N-r)``."""
    _require(p, y)
    return p.lagrangian.gradient(p.nodes, y.bracket(p.order))


def residual_scale(partials: np.ndarray) -> float:
    return 1.0 + float(np.max(np.abs(partials))) if partials.size else 1.0


def _costates(ts: TimeScale, partials: np.ndarray, constants: Sequence[float]) -> list[GridFunction]:
    r = partials.shape[0] - 1
    if len(constants) != r:
        raise ProblemError(f"expected {r} constants, got {len(constants)}")
    out = []
    prev = None
    for i in range(r):
        integrand = GridFunction(ts, partials[i])
        if prev is not None:
            integrand = integrand + prev
        prev = -sigma_integral(integrand) - float(constants[i])
        out.append(prev)
    return out


def adjoint_recursion(p: VariationalProblem, y: Trajectory, constants: Sequence[float]) -> AdjointState:
    partials = partials_on_nodes(p, y)
    return AdjointState(tuple(_costates(p.ts, partials, constants)),
                        tuple(float(c) for c in constants))


def _residual(ts: TimeScale, partials: np.ndarray, constants: Sequence[float]) -> GridFunction:
    costates = _costates(ts, partials, constants)
    return GridFunction(ts, partials[-1]) + costates[-1]


def el_residual(p: VariationalProblem, y: Trajectory, constants: Sequence[float]) -> GridFunction:
    """``dL/dyr[y] + p_{r-1}^sigma`` on ``[a, rho^r(b)]``."""
    return _residual(p.ts, partials_on_nodes(p, y), constants)


def constant_columns(p: VariationalProblem) -> np.ndarray:
    """Columns ``M_j`` with ``R = R_0 + M @ k``; they depend only on the time scale."""
    r = p.order
    zero = np.zeros((r + 1, p.n_nodes))
    cols = [_residual(p.ts, zero, np.eye(r)[j]).values for j in range(r)]
    return np.column_stack(cols)


def fit_constants(p: VariationalProblem, y: Trajectory, tol: float = STATIONARY_TOL) -> ELReport:
    """Least-squares constants for the residual and the resulting stationarity verdict.

    ``stationary`` compares ``residual_sup`` with ``tol * scale`` where the
    scale is ``1 + max |dL/dyi[y]|`` over nodes and i.
    """
    r = p.order
    partials = partials_on_nodes(p, y)
    base = _residual(p.ts, partials, np.zeros(r)).values
    cols = constant_columns(p)
    k, _, rank, _ = np.linalg.lstsq(cols, -base, rcond=None)
    if rank < r:
        raise RankDeficient(f"constant columns have rank {rank} < {r}")
    residual = GridFunction(p.ts, base + cols @ k)
    sup = float(np.max(np.abs(residual.values)))
    scale = residual_scale(partials)
    return ELReport(
        constants=tuple(float(c) for c in k),
        residual=residual,
        residual_sup=sup,
        residual_l2=float(np.linalg.norm(residual.values)),
        scale=scale,
        tolerance=tol * scale,
        stationary=sup <= tol * scale,
    )


# -- closed forms for r = 1 and r = 2, written out term by term ---------------

def el_residual_r1(p: VariationalProblem, y: Trajectory, c1: float) -> GridFunction:
    """``dL/dy^Delta(t) - int_a^{sigma(t)} dL/dy - c1``."""
    if p.order != 1:
        raise ProblemError("first-order form needs r = 1")
    g = partials_on_nodes(p, y)
    mu = p.node_weights
    out = []
    for k in range(p.n_nodes):
        integral = sum(mu[s] * g[0, s] for s in range(k + 1))
        out.append(g[1, k] - integral - c1)
    return GridFunction(p.ts, out)


def el_residual_r2(p: VariationalProblem, y: Trajectory, c1: float, c2: float) -> GridFunction:
    """``L_{y2} - int L_{y1} + int (int L_{y0} + c1) - c2``, every integral from a to sigma(.)."""
    if p.order != 2:
        raise ProblemError("second-order form needs r = 2")
    g = partials_on_nodes(p, y)
    mu = p.node_weights
    out = []
    for k in range(p.n_nodes):
        first = sum(mu[s] * g[1, s] for s in range(k + 1))
        nested = 0.0
        for s in range(k + 1):
            inner = sum(mu[q] * g[0, q] for q in range(s + 1))
            nested += mu[s] * (inner + c1)
        out.append(g[2, k] - first + nested - c2)
    return GridFunction(p.ts, out)


def h_el_differentiated(p: VariationalProblem, y: Trajectory) -> GridFunction:
    """Delta-differentiated Euler-Lagrange expression on a uniform grid.

    ``L_{yr}^{Delta^r} + sum_{i<r} (-1)^{r-i} L_{yi}^{Delta^i sigma^{r-i}}``
    """
    if not p.ts.is_uniform():
        raise TimeScaleError("the differentiated form needs a uniform grid")
    r = p.order
    if p.n_nodes < r + 1:
        raise TooFewPoints(f"need at least {2 * r + 1} points")
    g = partials_on_nodes(p, y)
    size = p.n_nodes - r
    total = delta_derivative_n(GridFunction(p.ts, g[r]), r).values[:size]
    for i in range(r):
        term = delta_derivative_n(GridFunction(p.ts, g[i]), i).shift(r - i).values[:size]
        total = total + (-1) ** (r - i) * term
    return GridFunction(p.ts, total)


# -- control reformulation ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ControlForm:
    """``x^Delta = A x + B u`` with ``x = (y, ..., y^{Delta^{r-1}})``, ``u = y^{Delta^r}``."""

    A: np.ndarray
    B: np.ndarray

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def state(self, y: Trajectory) -> np.ndarray:
        """Rows ``y^{Delta^i}``, i < r, on ``[a, rho^{r-1}(b)]``: shape ``(r, N-r+1)``."""
        r = self.order
        m = len(y.ts) - r + 1
        return np.stack([y.derivative(i).values[:m] for i in range(r)])

    def control(self, y: Trajectory) -> GridFunction:
        return y.derivative(self.order)

    def trajectory(self, ts: TimeScale, x: np.ndarray) -> Trajectory:
        """Rebuild raw values from a state path over ``[a, rho^{r-1}(b)]``."""
        r, n = self.order, len(ts)
        tail = forward_layer(ts.graininess[n - r: n - 1], x[:, -1])
        return Trajectory.from_values(ts, np.concatenate([x[0, :-1], tail]))


def to_control_form(p_or_order) -> ControlForm:
    r = p_or_order if isinstance(p_or_order, int) else p_or_order.order
    if r < 1:
        raise ProblemError("order must be at least 1")
    A = np.eye(r, k=1)
    B = np.zeros(r)
    B[-1] = 1.0
    return ControlForm(A, B)


def simulate_state(cf: ControlForm, ts: TimeScale, x_a, u) -> np.ndarray:
    """Step ``x(sigma t) = x(t) + mu(t) (A x(t) + B u(t))`` from ``a``.

    ``u`` holds one control value per node of ``[a, rho^r(b)]``; the returned
    array has shape ``(r, N - r + 1)``.
    """
    r = cf.order
    u = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    x_a = np.asarray(x_a, dtype=float)
    m = len(ts) - r
    if x_a.shape != (r,):
        raise ProblemError(f"initial state must have {r} components")
    if u.shape != (m,):
        raise ProblemError(f"control must have {m} values, got {u.shape[0]}")
    mu = ts.graininess
    x = np.empty((r, m + 1))
    x[:, 0] = x_a
    for k in range(m):
        x[:, k + 1] = x[:, k] + mu[k] * (cf.A @ x[:, k] + cf.B * u[k])
    return x


def homogeneous_adjoint_system(ts: TimeScale, r: int) -> np.ndarray:
    """Matrix of the multiplier-free costate system.

    Unknowns ``p_i(t_k)`` for i < r and k = 0..N-r (row-major by i); one row
    per equation ``p_0^Delta = 0``, ``p_i^Delta = -p_{i-1}^sigma`` and
    ``p_{r-1}^sigma = 0`` at each node of ``[a, rho^r(b)]``.
    """
    m = len(ts) - r
    if m < 1:
        raise TooFewPoints(f"need more than {r} points")
    mu = ts.graininess
    width = m + 1
    rows = []

    def unit(i, k, coef, row):
        row[i * width + k] += coef

    for k in range(m):
        for i in range(r):
            row = np.zeros(r * width)
            unit(i, k + 1, 1.0 / mu[k], row)
            unit(i, k, -1.0 / mu[k], row)
            if i > 0:
                unit(i - 1, k + 1, 1.0, row)
            rows.append(row)
        row = np.zeros(r * width)
        unit(r - 1, k + 1, 1.0, row)
        rows.append(row)
    return np.array(rows)


def homogeneous_adjoint_solution(ts: TimeScale, r: int, rtol: float = 1e-10) -> tuple[float, int]:
    """Largest costate entry over unit-norm solutions, and the solution-space dimension.

    A trivial solution space gives ``(0.0, 0)``.
    """
    mat = homogeneous_adjoint_system(ts, r)
    _, s, vt = np.linalg.svd(mat)
    ncols = mat.shape[1]
    cutoff = rtol * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > cutoff))
    null = vt[rank:]
    if null.shape[0] == 0:
        return 0.0, 0
    return float(np.max(np.abs(null))), ncols - rank
