"""Calculus of variations on finite time scales."""

__version__ = "0.1.0"

from .calculus import (
    GridFunction,
    check_exgc_identity,
    delta_derivative,
    delta_derivative_n,
    delta_integral,
    nested_sigma_integral,
)
from .euler_lagrange import (
    ELReport,
    adjoint_recursion,
    el_residual,
    el_residual_r1,
    el_residual_r2,
    fit_constants,
    h_el_differentiated,
    simulate_state,
    to_control_form,
)
from .lagrangian import Lagrangian, differentiate, eval_expr, make_lagrangian, parse_expression
from .solver import SolveOptions, SolveResult, functional_gradient, minimize_direct, verify_stationarity_equivalence
from .timescale import Point, TimeScale, kappa_trunc, make_timescale, mu, rho, rho_n, sigma, sigma_n
from .variational import (
    Trajectory,
    VariationalProblem,
    boundary_layer_solve,
    degenerate_constant_check,
    embed_free,
    functional_value,
    is_admissible,
    norm_r_inf,
)
