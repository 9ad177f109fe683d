"""Direct minimization of the discrete functional over the free interior values.

The map from free values to ``(y, y^Delta, ..., y^{Delta^r})`` on the nodes is
affine, so the chain rule is exact: with difference matrices ``D_i``,
``dF/dy = sum_i D_i^T (mu * dL/dyi)`` and the Hessian is
``sum_ij D_i^T diag(mu * d2L/dyi dyj) D_j``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .calculus import difference_operators
from .errors import DomainError, NonFiniteValue, ProblemError
from .euler_lagrange import STATIONARY_TOL, fit_constants
from .variational import (
    Trajectory,
    VariationalProblem,
    boundary_layer_solve,
    embed_free,
    functional_value,
)

log = logging.getLogger(__name__)


@dataclass
class SolveOptions:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-10
    initial_guess: Optional[np.ndarray] = None
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    # "newton" scales the descent direction by the exact Hessian when it is
    # positive definite; "gradient" is plain steepest descent.
    direction: str = "newton"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient_decrease must lie in (0, 1)")
        if self.direction not in ("newton", "gradient"):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass
class SolveResult:
    trajectory: Trajectory
    value: float
    gradient_sup: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


class _Objective:
    """Functional, gradient and Hessian in the free coordinates of one problem."""

    def __init__(self, p: VariationalProblem):
        self.p = p
        r, n = p.order, len(p.ts)
        m = p.n_nodes
        self.ops = [d[:m] for d in difference_operators(p.ts, r)]
        self.free_slice = slice(r, n - r)
        self.weights = p.node_weights

    def bracket(self, y: np.ndarray) -> np.ndarray:
        return np.stack([d @ y for d in self.ops])

    def value(self, free) -> float:
        return functional_value(self.p, embed_free(self.p, free))

    def gradient(self, free) -> np.ndarray:
        y = embed_free(self.p, free).values
        g = self.p.lagrangian.gradient(self.p.nodes, self.bracket(y))
        grad_y = sum(d.T @ (self.weights * gi) for d, gi in zip(self.ops, g))
        return grad_y[self.free_slice]

    def hessian(self, free) -> np.ndarray:
        y = embed_free(self.p, free).values
        h = self.p.lagrangian.hessian(self.p.nodes, self.bracket(y))
        r = self.p.order
        n = len(self.p.ts)
        full = np.zeros((n, n))
        for i in range(r + 1):
            for j in range(r + 1):
                full += self.ops[i].T @ ((self.weights * h[i, j])[:, None] * self.ops[j])
        s = self.free_slice
        return full[s, s]


def functional_gradient(p: VariationalProblem, free) -> np.ndarray:
    """Exact gradient of ``functional_value(p, embed_free(p, free))``."""
    free = np.asarray(free, dtype=float).ravel()
    if free.size != p.n_free:
        raise ProblemError(f"expected {p.n_free} free values, got {free.size}")
    return _Objective(p).gradient(free)


def functional_hessian(p: VariationalProblem, free) -> np.ndarray:
    free = np.asarray(free, dtype=float).ravel()
    if free.size != p.n_free:
        raise ProblemError(f"expected {p.n_free} free values, got {free.size}")
    return _Objective(p).hessian(free)


def linear_initial_guess(p: VariationalProblem) -> np.ndarray:
    """Interpolate linearly in t between the inner ends of the two boundary layers."""
    r, n = p.order, len(p.ts)
    left, right = boundary_layer_solve(p)
    t = p.ts.points
    t0, t1 = t[r - 1], t[n - r]
    y0, y1 = left[-1], right[0]
    inner = t[r: n - r]
    return y0 + (y1 - y0) * (inner - t0) / (t1 - t0)


def _safe_value(obj: _Objective, x) -> float:
    try:
        v = obj.value(x)
    except (DomainError, ValueError, FloatingPointError):
        return np.inf
    return v if np.isfinite(v) else np.inf


def _direction(obj: _Objective, x, g, kind: str) -> np.ndarray:
    if kind == "newton":
        try:
            h = obj.hessian(x)
            chol = np.linalg.cholesky(h)
            d = -np.linalg.solve(chol.T, np.linalg.solve(chol, g))
            if np.all(np.isfinite(d)) and g @ d < 0:
                return d
        except (np.linalg.LinAlgError, DomainError):
            pass
    return -g


def minimize_direct(p: VariationalProblem, opts: SolveOptions | None = None) -> SolveResult:
    """Descent with backtracking line search on the free interior values."""
    opts = opts or SolveOptions()
    obj = _Objective(p)
    if p.n_free == 0:
        y = embed_free(p, [])
        return SolveResult(y, functional_value(p, y), 0.0, 0, True)
    if opts.initial_guess is not None:
        x = np.asarray(opts.initial_guess, dtype=float).ravel().copy()
        if x.size != p.n_free:
            raise ProblemError(f"initial guess needs {p.n_free} values, got {x.size}")
    else:
        x = linear_initial_guess(p)
    f = _safe_value(obj, x)
    if not np.isfinite(f):
        raise NonFiniteValue("Lagrangian is not finite at the initial guess")
    history = [f]
    g = obj.gradient(x)
    gsup = float(np.max(np.abs(g)))
    it = 0
    while gsup > opts.gradient_tolerance and it < opts.max_iterations:
        d = _direction(obj, x, g, opts.direction)
        slope = float(g @ d)
        step = 1.0
        while True:
            trial = x + step * d
            ft = _safe_value(obj, trial)
            if ft <= f + opts.sufficient_decrease * step * slope:
                break
            step *= opts.shrink
            if step < 1e-20:
                break
        if step < 1e-20 or ft > f:
            log.debug("line search stalled at iteration %d", it)
            break
        x, f = trial, ft
        history.append(f)
        g = obj.gradient(x)
        gsup = float(np.max(np.abs(g)))
        it += 1
    return SolveResult(
        trajectory=embed_free(p, x),
        value=f,
        gradient_sup=gsup,
        iterations=it,
        converged=gsup <= opts.gradient_tolerance,
        history=history,
    )


@dataclass
class EquivalenceReport:
    gradient_sup: float
    el_residual_sup: float
    el_tolerance: float
    agree: bool

    def as_dict(self) -> dict:
        return {
            "gradient_sup": self.gradient_sup,
            "el_residual_sup": self.el_residual_sup,
            "el_tolerance": self.el_tolerance,
            "agree": self.agree,
        }


def verify_stationarity_equivalence(p: VariationalProblem, y: Trajectory,
                                    tol: float = STATIONARY_TOL) -> EquivalenceReport:
    """Compare the two stationarity tests: vanishing gradient vs vanishing EL residual."""
    free = p.interior(y)
    gsup = float(np.max(np.abs(functional_gradient(p, free)))) if free.size else 0.0
    rep = fit_constants(p, y, tol=tol)
    agree = (gsup <= tol) == rep.stationary
    return EquivalenceReport(gsup, rep.residual_sup, rep.tolerance, agree)
